#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace ginnlp {

// One monomial c * prod_j x_j^{e_j}. Exponents are real-valued so that
// fitted (not yet integer) powers can be represented.
struct LaurentTerm {
    double coefficient { 0.0 };
    std::vector<double> exponents;

    friend bool operator==(const LaurentTerm&, const LaurentTerm&) = default;
};

// Multivariate Laurent polynomial over variables x1..x{nvars}.
//
// The canonical form has unique exponent vectors, no zero coefficients and
// terms sorted lexicographically descending by exponent vector; the zero
// polynomial has no terms. Most operations below expect canonical input.
class LaurentPolynomial {
public:
    LaurentPolynomial() = default;
    explicit LaurentPolynomial(std::size_t nvars)
        : nvars_(nvars)
    {
    }

    // Throws DimensionError if a term's exponent vector has the wrong length,
    // or DomainError on a non-finite coefficient or exponent.
    LaurentPolynomial(std::size_t nvars, std::vector<LaurentTerm> terms);

    [[nodiscard]] std::size_t nvars() const noexcept { return nvars_; }
    [[nodiscard]] const std::vector<LaurentTerm>& terms() const noexcept { return terms_; }
    [[nodiscard]] bool is_zero() const noexcept { return terms_.empty(); }

    void add_term(LaurentTerm term);

    // Same polynomial over `nvars` >= nvars() variables (new variables get exponent 0).
    [[nodiscard]] LaurentPolynomial widened(std::size_t nvars) const;

    friend bool operator==(const LaurentPolynomial&, const LaurentPolynomial&) = default;

private:
    std::size_t nvars_ { 0 };
    std::vector<LaurentTerm> terms_;
};

struct ComplexityBreakdown {
    int operators { 0 };
    int constants { 0 };
    int features { 0 };
    int total { 0 };

    friend bool operator==(const ComplexityBreakdown&, const ComplexityBreakdown&) = default;
};

using BigInt = boost::multiprecision::cpp_int;

struct SearchSpaceResult {
    BigInt term_count;      // C(order + nvars, order)
    BigInt structure_count; // 2^term_count
    unsigned order { 0 };
    unsigned nvars { 0 };
};

inline constexpr double kDefaultCoeffRtol = 1e-3;
inline constexpr double kDefaultIntegerSnapTol = 1e-3;

// Sum_i c_i prod_j x_j^{e_ij}. Zero exponents contribute a factor of 1 for any x_j.
// A non-positive x_j is only allowed against non-negative integer exponents.
[[nodiscard]] double evaluate(const LaurentPolynomial& p, std::span<const double> x);

[[nodiscard]] LaurentPolynomial canonicalize(const LaurentPolynomial& p);

// Exponent vectors must match exactly (on a 1e-6 grid); coefficients agree within
// coeff_rtol relative, or coeff_rtol absolute when both magnitudes are below 1.
[[nodiscard]] bool equals_exact(const LaurentPolynomial& a, const LaurentPolynomial& b,
                                double coeff_rtol = kDefaultCoeffRtol);

[[nodiscard]] ComplexityBreakdown complexity(const LaurentPolynomial& p);

[[nodiscard]] bool is_integer_exponent(double e, double tol = kDefaultIntegerSnapTol) noexcept;

// Parses the textual grammar
//   poly   := term (('+'|'-') term)*
//   term   := [coeff '*'] factor ('*' factor)* | coeff
//   factor := 'x' N ['^' number]
// Whitespace is ignored. Returns the canonical polynomial over `nvars` variables.
[[nodiscard]] LaurentPolynomial parse_equation(std::string_view s, std::size_t nvars);

// Highest variable index referenced by an equation string (0 if none).
[[nodiscard]] std::size_t max_variable_index(std::string_view s);

[[nodiscard]] std::string print_equation(const LaurentPolynomial& p);

// Shortest round-trip decimal text without exponent notation.
[[nodiscard]] std::string format_number(double v);

[[nodiscard]] SearchSpaceResult search_space(unsigned order, unsigned nvars);

} // namespace ginnlp
