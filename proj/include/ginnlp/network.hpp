#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ginnlp/laurent.hpp"
#include "ginnlp/matrix.hpp"

namespace ginnlp {

// One power-term approximator: exp(sum_j w_j ln x_j) = prod_j x_j^{w_j}.
struct PTABlockParams {
    std::vector<double> weights;

    friend bool operator==(const PTABlockParams&, const PTABlockParams&) = default;
};

// PTA blocks in parallel feeding a single linear output neuron.
struct NetworkParams {
    std::size_t nvars { 0 };
    std::vector<PTABlockParams> blocks;
    std::vector<double> output_weights;
    double output_bias { 0.0 };

    NetworkParams() = default;
    explicit NetworkParams(std::size_t n)
        : nvars(n)
    {
    }

    [[nodiscard]] std::size_t block_count() const noexcept { return blocks.size(); }
    // Same shape, every scalar zero.
    [[nodiscard]] NetworkParams zeros_like() const;
    [[nodiscard]] bool all_finite() const noexcept;

    friend bool operator==(const NetworkParams&, const NetworkParams&) = default;
};

struct AdamSettings {
    double base_lr { 0.01 };
    double decay { 1.0 }; // per-epoch multiplicative factor
    double beta1 { 0.9 };
    double beta2 { 0.999 };
    double eps { 1e-8 };
};

struct OptimizerState {
    AdamSettings settings;
    std::uint64_t step_count { 0 };
    NetworkParams first_moment;
    NetworkParams second_moment;

    OptimizerState() = default;
    OptimizerState(const NetworkParams& shape, AdamSettings s);

    // Extends the moment buffers with zeros to match a grown network.
    void match_shape(const NetworkParams& params);

    [[nodiscard]] double learning_rate(std::uint64_t epoch) const;
};

// Pre-exponent clamp applied inside every PTA block.
inline constexpr double kLogClamp = 50.0;

struct ForwardResult {
    double prediction { 0.0 };
    std::vector<double> block_outputs;
};

struct LossAndGradient {
    double loss { 0.0 };
    NetworkParams gradient;
};

// Throws DomainError on any x_j <= 0 and DimensionError on a length mismatch.
[[nodiscard]] ForwardResult forward(const NetworkParams& params, std::span<const double> x);

// Same as `forward` for a row that is already ln(x).
[[nodiscard]] double forward_log(const NetworkParams& params, std::span<const double> log_x);

// Loss = mean squared error + l1 * sum|W| + l2 * sum W^2 over all PTA and
// output weights (the bias is not penalized), with exact analytic gradients.
[[nodiscard]] LossAndGradient backward(const NetworkParams& params, const Matrix& x, std::span<const double> y,
                                       double l1, double l2);

// `backward` on precomputed log features, restricted to the given rows.
[[nodiscard]] LossAndGradient backward_log(const NetworkParams& params, const Matrix& log_x,
                                           std::span<const double> y, std::span<const std::size_t> rows,
                                           double l1, double l2);

// Mean squared error of the network on log features.
[[nodiscard]] double mse_log(const NetworkParams& params, const Matrix& log_x, std::span<const double> y);

// Elementwise ln; throws DomainError naming the offending row/column on x <= 0.
[[nodiscard]] Matrix log_features(const Matrix& x);

// One Adam update with bias correction at learning rate state.learning_rate(epoch).
void adam_step(NetworkParams& params, const NetworkParams& grads, OptimizerState& state, std::uint64_t epoch);

// Appends one randomly initialized block (weights and output weight uniform in
// [-init_scale, init_scale]); existing parameters are left untouched.
[[nodiscard]] NetworkParams grow(const NetworkParams& params, double init_scale, std::mt19937_64& rng);
[[nodiscard]] NetworkParams grow(const NetworkParams& params, double init_scale, std::uint64_t seed);

// Nearest multiple of eps, ties away from zero.
[[nodiscard]] double round_to_multiple(double v, double eps) noexcept;
[[nodiscard]] NetworkParams round_params(const NetworkParams& params, double eps);

// Block i -> term c_i * prod x^{w_i}; the bias becomes the constant term.
[[nodiscard]] LaurentPolynomial extract_equation(const NetworkParams& params);

} // namespace ginnlp
