#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>

#include "ginnlp/errors.hpp"
#include "ginnlp/laurent.hpp"

namespace ginnlp {

namespace {

    class EquationParser {
    public:
        EquationParser(std::string_view src, std::size_t nvars)
            : src_(src)
            , nvars_(nvars)
            , poly_(nvars)
        {
        }

        LaurentPolynomial parse()
        {
            skip_ws();
            if (at_end()) {
                fail(ParseError::Kind::Syntax, "empty equation");
            }
            parse_term(1.0);
            for (;;) {
                skip_ws();
                if (at_end()) {
                    break;
                }
                const char c = peek();
                if (c != '+' && c != '-') {
                    fail(ParseError::Kind::Syntax, std::string("expected '+' or '-', found '") + c + "'");
                }
                ++pos_;
                parse_term(c == '-' ? -1.0 : 1.0);
            }
            return canonicalize(poly_);
        }

    private:
        [[noreturn]] void fail(ParseError::Kind kind, const std::string& msg) const { throw ParseError(kind, pos_, msg); }

        [[nodiscard]] bool at_end() const { return pos_ >= src_.size(); }
        [[nodiscard]] char peek() const { return src_[pos_]; }

        void skip_ws()
        {
            while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) {
                ++pos_;
            }
        }

        [[nodiscard]] std::size_t next_non_ws(std::size_t from) const
        {
            while (from < src_.size() && std::isspace(static_cast<unsigned char>(src_[from]))) {
                ++from;
            }
            return from;
        }

        [[nodiscard]] static bool starts_number(char c) { return std::isdigit(static_cast<unsigned char>(c)) || c == '.'; }

        // Unsigned decimal literal: digits ['.' digits] or '.' digits.
        std::optional<double> lex_unsigned()
        {
            const std::size_t start = pos_;
            std::size_t i = pos_;
            std::size_t digits = 0;
            while (i < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i]))) {
                ++i;
                ++digits;
            }
            if (i < src_.size() && src_[i] == '.') {
                ++i;
                while (i < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i]))) {
                    ++i;
                    ++digits;
                }
            }
            if (digits == 0) {
                return std::nullopt;
            }
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + i, v, std::chars_format::fixed);
            if (ec != std::errc() || ptr != src_.data() + i) {
                return std::nullopt;
            }
            pos_ = i;
            return v;
        }

        void parse_term(double sign)
        {
            skip_ws();
            if (at_end()) {
                fail(ParseError::Kind::Syntax, "expected a term");
            }
            LaurentTerm term { sign, std::vector<double>(nvars_, 0.0) };

            char c = peek();
            if (c == '+' || c == '-') {
                const std::size_t next = next_non_ws(pos_ + 1);
                const bool number_follows = next < src_.size() && starts_number(src_[next]);
                const bool var_follows = next < src_.size() && src_[next] == 'x';
                if (!number_follows && !(c == '-' && var_follows)) {
                    fail(ParseError::Kind::Syntax, std::string("unexpected '") + c + "'");
                }
                if (c == '-') {
                    term.coefficient = -term.coefficient;
                }
                pos_ = next;
                c = peek();
            }

            if (starts_number(c)) {
                auto v = lex_unsigned();
                if (!v) {
                    fail(ParseError::Kind::Syntax, "malformed number");
                }
                term.coefficient *= *v;
                skip_ws();
                if (at_end() || peek() != '*') {
                    poly_.add_term(std::move(term));
                    return;
                }
                ++pos_;
                skip_ws();
                if (at_end() || peek() != 'x') {
                    fail(ParseError::Kind::Syntax, "expected a variable after '*'");
                }
            } else if (c != 'x') {
                fail(ParseError::Kind::Syntax, std::string("unexpected '") + c + "'");
            }

            for (;;) {
                parse_factor(term);
                skip_ws();
                if (at_end() || peek() != '*') {
                    break;
                }
                ++pos_;
                skip_ws();
                if (at_end() || peek() != 'x') {
                    fail(ParseError::Kind::Syntax, "expected a variable after '*'");
                }
            }
            poly_.add_term(std::move(term));
        }

        void parse_factor(LaurentTerm& term)
        {
            const std::size_t var_pos = pos_;
            ++pos_; // 'x'
            std::size_t index = 0;
            std::size_t digits = 0;
            while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
                index = index * 10 + static_cast<std::size_t>(peek() - '0');
                ++pos_;
                if (++digits > 9) {
                    pos_ = var_pos;
                    fail(ParseError::Kind::UnknownVariable, "variable index too large");
                }
            }
            if (digits == 0) {
                fail(ParseError::Kind::Syntax, "expected a variable index after 'x'");
            }
            if (index == 0 || index > nvars_) {
                pos_ = var_pos;
                fail(ParseError::Kind::UnknownVariable,
                     "unknown variable x" + std::to_string(index) + " (have " + std::to_string(nvars_) + ")");
            }

            double exponent = 1.0;
            skip_ws();
            if (!at_end() && peek() == '^') {
                ++pos_;
                skip_ws();
                double sign = 1.0;
                if (!at_end() && (peek() == '-' || peek() == '+')) {
                    sign = peek() == '-' ? -1.0 : 1.0;
                    ++pos_;
                    skip_ws();
                }
                auto v = at_end() ? std::nullopt : lex_unsigned();
                if (!v) {
                    fail(ParseError::Kind::NonNumericExponent, "exponent is not a number");
                }
                exponent = sign * *v;
            }
            term.exponents[index - 1] += exponent;
        }

        std::string_view src_;
        std::size_t nvars_;
        std::size_t pos_ { 0 };
        LaurentPolynomial poly_;
    };

} // namespace

LaurentPolynomial parse_equation(std::string_view s, std::size_t nvars)
{
    return EquationParser(s, nvars).parse();
}

std::size_t max_variable_index(std::string_view s)
{
    std::size_t best = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != 'x') {
            continue;
        }
        std::size_t j = i + 1;
        std::size_t idx = 0;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j])) && j - i <= 9) {
            idx = idx * 10 + static_cast<std::size_t>(s[j] - '0');
            ++j;
        }
        best = std::max(best, idx);
    }
    return best;
}

std::string format_number(double v)
{
    if (v == 0.0) {
        return "0";
    }
    std::array<char, 512> buf {};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed);
    if (ec != std::errc()) {
        throw Error("cannot format number");
    }
    return { buf.data(), ptr };
}

std::string print_equation(const LaurentPolynomial& p)
{
    if (p.terms().empty()) {
        return "0";
    }
    std::string out;
    bool first = true;
    for (const auto& t : p.terms()) {
        const bool negative = t.coefficient < 0.0;
        const double mag = std::abs(t.coefficient);
        if (first) {
            if (negative) {
                out += '-';
            }
        } else {
            out += negative ? " - " : " + ";
        }
        first = false;

        std::string factors;
        for (std::size_t j = 0; j < t.exponents.size(); ++j) {
            const double e = t.exponents[j];
            if (e == 0.0) {
                continue;
            }
            if (!factors.empty()) {
                factors += '*';
            }
            factors += 'x' + std::to_string(j + 1);
            if (e != 1.0) {
                factors += '^' + format_number(e);
            }
        }

        if (factors.empty()) {
            out += format_number(mag);
        } else if (mag == 1.0) {
            out += factors;
        } else {
            out += format_number(mag) + '*' + factors;
        }
    }
    return out;
}

} // namespace ginnlp
