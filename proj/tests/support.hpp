#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ginnlp/laurent.hpp"
#include "ginnlp/network.hpp"

namespace testing_support {

// Small seeded generators for property tests.
struct Gen {
    std::mt19937_64 rng;

    explicit Gen(std::uint64_t seed)
        : rng(seed)
    {
    }

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
    bool coin() { return integer(0, 1) == 1; }

    std::vector<double> positive_point(std::size_t n, double lo = 0.5, double hi = 3.0)
    {
        std::vector<double> x(n);
        for (auto& v : x) {
            v = uniform(lo, hi);
        }
        return x;
    }

    // Random polynomial with small integer exponents and possibly repeated exponent vectors.
    ginnlp::LaurentPolynomial polynomial(std::size_t nvars, int max_terms)
    {
        ginnlp::LaurentPolynomial p(nvars);
        const int terms = integer(0, max_terms);
        for (int t = 0; t < terms; ++t) {
            ginnlp::LaurentTerm term;
            term.coefficient = static_cast<double>(integer(-9, 9)) / 4.0;
            for (std::size_t j = 0; j < nvars; ++j) {
                term.exponents.push_back(integer(-2, 2));
            }
            p.add_term(std::move(term));
        }
        return p;
    }

    ginnlp::NetworkParams network(std::size_t nvars, std::size_t blocks, double wlim)
    {
        ginnlp::NetworkParams p(nvars);
        for (std::size_t b = 0; b < blocks; ++b) {
            ginnlp::PTABlockParams blk;
            for (std::size_t j = 0; j < nvars; ++j) {
                blk.weights.push_back(uniform(-wlim, wlim));
            }
            p.blocks.push_back(std::move(blk));
            p.output_weights.push_back(uniform(-wlim, wlim));
        }
        p.output_bias = uniform(-wlim, wlim);
        return p;
    }
};

inline double rel_err(double a, double b)
{
    const double scale = std::max({ std::abs(a), std::abs(b), 1e-300 });
    return std::abs(a - b) / scale;
}

// Fresh empty directory under the system temp dir, unique per name.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("ginnlp-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testing_support
