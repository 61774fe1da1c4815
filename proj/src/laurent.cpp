#include "ginnlp/laurent.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "ginnlp/errors.hpp"

namespace ginnlp {

namespace {

    void check_term(std::size_t nvars, const LaurentTerm& t)
    {
        if (t.exponents.size() != nvars) {
            throw DimensionError("term has " + std::to_string(t.exponents.size()) + " exponents, polynomial has "
                                 + std::to_string(nvars) + " variables");
        }
        if (!std::isfinite(t.coefficient)) {
            throw DomainError("non-finite coefficient");
        }
        for (double e : t.exponents) {
            if (!std::isfinite(e)) {
                throw DomainError("non-finite exponent");
            }
        }
    }

    // Exponents are compared on a 1e-6 grid: equality of grid keys is an
    // equivalence relation, unlike a raw tolerance test.
    long long exponent_key(double e) noexcept { return std::llround(e * 1e6); }

    bool same_exponents(const LaurentTerm& a, const LaurentTerm& b) noexcept
    {
        for (std::size_t j = 0; j < a.exponents.size(); ++j) {
            if (exponent_key(a.exponents[j]) != exponent_key(b.exponents[j])) {
                return false;
            }
        }
        return true;
    }

    bool near(double v, double target) noexcept { return std::abs(v - target) <= 1e-9; }

} // namespace

LaurentPolynomial::LaurentPolynomial(std::size_t nvars, std::vector<LaurentTerm> terms)
    : nvars_(nvars)
{
    terms_.reserve(terms.size());
    for (auto& t : terms) {
        add_term(std::move(t));
    }
}

void LaurentPolynomial::add_term(LaurentTerm term)
{
    check_term(nvars_, term);
    terms_.push_back(std::move(term));
}

LaurentPolynomial LaurentPolynomial::widened(std::size_t nvars) const
{
    if (nvars < nvars_) {
        throw DimensionError("cannot narrow a polynomial");
    }
    LaurentPolynomial out(nvars);
    for (const auto& t : terms_) {
        LaurentTerm w = t;
        w.exponents.resize(nvars, 0.0);
        out.terms_.push_back(std::move(w));
    }
    return out;
}

bool is_integer_exponent(double e, double tol) noexcept
{
    return std::abs(e - std::round(e)) <= tol;
}

double evaluate(const LaurentPolynomial& p, std::span<const double> x)
{
    if (x.size() != p.nvars()) {
        throw DimensionError("input has " + std::to_string(x.size()) + " components, polynomial has "
                             + std::to_string(p.nvars()) + " variables");
    }
    double sum = 0.0;
    for (const auto& t : p.terms()) {
        double prod = t.coefficient;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double e = t.exponents[j];
            if (e == 0.0) {
                continue;
            }
            if (x[j] <= 0.0 && (e < 0.0 || e != std::round(e))) {
                throw DomainError("x" + std::to_string(j + 1) + " <= 0 raised to exponent " + format_number(e));
            }
            prod *= std::pow(x[j], e);
        }
        sum += prod;
    }
    return sum;
}

LaurentPolynomial canonicalize(const LaurentPolynomial& p)
{
    // Merge on exact exponent vectors.
    std::map<std::vector<double>, std::pair<double, double>, std::greater<>> merged;
    for (const auto& t : p.terms()) {
        auto& [sum, largest] = merged[t.exponents];
        sum += t.coefficient;
        largest = std::max(largest, std::abs(t.coefficient));
    }
    LaurentPolynomial out(p.nvars());
    for (auto& [exps, acc] : merged) {
        // Sums that cancel down to rounding residue count as zero.
        const auto [coeff, largest] = acc;
        if (std::abs(coeff) > 1e-12 * largest) {
            out.add_term({ coeff, exps });
        }
    }
    return out;
}

bool equals_exact(const LaurentPolynomial& a, const LaurentPolynomial& b, double coeff_rtol)
{
    if (a.nvars() != b.nvars() || a.terms().size() != b.terms().size()) {
        return false;
    }
    // Canonical order may differ between two exponent vectors that share a
    // grid key, so pair terms by key rather than by position.
    std::vector<bool> used(b.terms().size(), false);
    for (const auto& ta : a.terms()) {
        bool matched = false;
        for (std::size_t k = 0; k < b.terms().size(); ++k) {
            const auto& tb = b.terms()[k];
            if (used[k] || !same_exponents(ta, tb)) {
                continue;
            }
            used[k] = true;
            const double diff = std::abs(ta.coefficient - tb.coefficient);
            const double scale = std::max(std::abs(ta.coefficient), std::abs(tb.coefficient));
            const double allowed = scale < 1.0 ? coeff_rtol : coeff_rtol * scale;
            if (diff > allowed) {
                return false;
            }
            matched = true;
            break;
        }
        if (!matched) {
            return false;
        }
    }
    return true;
}

ComplexityBreakdown complexity(const LaurentPolynomial& p)
{
    ComplexityBreakdown c;
    if (p.terms().empty()) {
        return c;
    }
    c.operators += static_cast<int>(p.terms().size()) - 1; // additions

    for (const auto& t : p.terms()) {
        int vars = 0;
        for (double e : t.exponents) {
            if (near(e, 0.0)) {
                continue;
            }
            ++vars;
            if (near(e, 1.0)) {
                continue;
            }
            ++c.operators; // power, or a division for e == -1
            if (!near(e, -1.0)) {
                ++c.constants;
            }
        }
        c.features += vars;

        const bool unit = near(std::abs(t.coefficient), 1.0);
        if (vars == 0) {
            ++c.constants; // a bare constant term is always a literal
        } else {
            c.operators += vars - 1;
            if (!unit) {
                ++c.constants;
                ++c.operators;
            }
        }
        if (t.coefficient < 0.0) {
            ++c.operators;
        }
    }
    c.total = c.operators + c.constants + c.features;
    return c;
}

SearchSpaceResult search_space(unsigned order, unsigned nvars)
{
    // C(order + nvars, order) via the multiplicative formula; every partial
    // product is itself a binomial coefficient, so the division is exact.
    BigInt t = 1;
    for (unsigned i = 1; i <= order; ++i) {
        t *= nvars + i;
        t /= i;
    }
    if (t > BigInt(1) << 31) {
        throw std::length_error("term count too large to materialize 2^T");
    }
    SearchSpaceResult r;
    r.term_count = t;
    r.structure_count = BigInt(1) << static_cast<unsigned>(t);
    r.order = order;
    r.nvars = nvars;
    return r;
}

} // namespace ginnlp
