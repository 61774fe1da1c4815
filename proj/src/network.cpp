#include "ginnlp/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ginnlp/errors.hpp"

namespace ginnlp {

namespace {

    // Visits every scalar of equally shaped parameter sets in a fixed order:
    // block weights, output weights, bias.
    template <typename Fn, typename First, typename... Rest>
    void zip_scalars(Fn&& fn, First& first, Rest&... rest)
    {
        for (std::size_t i = 0; i < first.blocks.size(); ++i) {
            for (std::size_t j = 0; j < first.blocks[i].weights.size(); ++j) {
                fn(first.blocks[i].weights[j], rest.blocks[i].weights[j]...);
            }
        }
        for (std::size_t i = 0; i < first.output_weights.size(); ++i) {
            fn(first.output_weights[i], rest.output_weights[i]...);
        }
        fn(first.output_bias, rest.output_bias...);
    }

    void check_shape(const NetworkParams& a, const NetworkParams& b)
    {
        if (a.nvars != b.nvars || a.blocks.size() != b.blocks.size()
            || a.output_weights.size() != b.output_weights.size()) {
            throw DimensionError("parameter shapes differ");
        }
    }

    double sign_or_zero(double v) noexcept { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

} // namespace

NetworkParams NetworkParams::zeros_like() const
{
    NetworkParams z(nvars);
    z.blocks.assign(blocks.size(), PTABlockParams { std::vector<double>(nvars, 0.0) });
    z.output_weights.assign(output_weights.size(), 0.0);
    return z;
}

bool NetworkParams::all_finite() const noexcept
{
    auto finite = [](double v) { return std::isfinite(v); };
    for (const auto& b : blocks) {
        if (!std::all_of(b.weights.begin(), b.weights.end(), finite)) {
            return false;
        }
    }
    return std::all_of(output_weights.begin(), output_weights.end(), finite) && std::isfinite(output_bias);
}

OptimizerState::OptimizerState(const NetworkParams& shape, AdamSettings s)
    : settings(s)
    , first_moment(shape.zeros_like())
    , second_moment(shape.zeros_like())
{
}

void OptimizerState::match_shape(const NetworkParams& params)
{
    auto extend = [&](NetworkParams& m) {
        m.nvars = params.nvars;
        while (m.blocks.size() < params.blocks.size()) {
            m.blocks.push_back(PTABlockParams { std::vector<double>(params.nvars, 0.0) });
        }
        m.output_weights.resize(params.output_weights.size(), 0.0);
    };
    extend(first_moment);
    extend(second_moment);
}

double OptimizerState::learning_rate(std::uint64_t epoch) const
{
    return settings.base_lr * std::pow(settings.decay, static_cast<double>(epoch));
}

Matrix log_features(const Matrix& x)
{
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const double v = x(r, c);
            if (!(v > 0.0)) {
                throw DomainError("non-positive input at row " + std::to_string(r) + ", column "
                                  + std::to_string(c));
            }
            out(r, c) = std::log(v);
        }
    }
    return out;
}

double forward_log(const NetworkParams& params, std::span<const double> log_x)
{
    double pred = params.output_bias;
    for (std::size_t i = 0; i < params.blocks.size(); ++i) {
        const auto& w = params.blocks[i].weights;
        const double yd = std::inner_product(w.begin(), w.end(), log_x.begin(), 0.0);
        pred += params.output_weights[i] * std::exp(std::clamp(yd, -kLogClamp, kLogClamp));
    }
    return pred;
}

ForwardResult forward(const NetworkParams& params, std::span<const double> x)
{
    if (x.size() != params.nvars) {
        throw DimensionError("input has " + std::to_string(x.size()) + " components, network expects "
                             + std::to_string(params.nvars));
    }
    std::vector<double> lx(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!(x[j] > 0.0)) {
            throw DomainError("x" + std::to_string(j + 1) + " must be positive");
        }
        lx[j] = std::log(x[j]);
    }
    ForwardResult out;
    out.prediction = params.output_bias;
    out.block_outputs.reserve(params.blocks.size());
    for (std::size_t i = 0; i < params.blocks.size(); ++i) {
        const auto& w = params.blocks[i].weights;
        const double yd = std::inner_product(w.begin(), w.end(), lx.begin(), 0.0);
        const double b = std::exp(std::clamp(yd, -kLogClamp, kLogClamp));
        out.block_outputs.push_back(b);
        out.prediction += params.output_weights[i] * b;
    }
    return out;
}

LossAndGradient backward_log(const NetworkParams& params, const Matrix& log_x, std::span<const double> y,
                             std::span<const std::size_t> rows, double l1, double l2)
{
    if (log_x.cols() != params.nvars) {
        throw DimensionError("batch has " + std::to_string(log_x.cols()) + " columns, network expects "
                             + std::to_string(params.nvars));
    }
    const std::size_t nb = params.blocks.size();
    const std::size_t d = params.nvars;
    LossAndGradient out { 0.0, params.zeros_like() };
    if (rows.empty()) {
        return out;
    }

    std::vector<double> block(nb);
    std::vector<char> clamped(nb);
    const double scale = 2.0 / static_cast<double>(rows.size());
    double sse = 0.0;

    for (std::size_t r : rows) {
        const auto lx = log_x.row(r);
        double pred = params.output_bias;
        for (std::size_t i = 0; i < nb; ++i) {
            const auto& w = params.blocks[i].weights;
            double yd = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                yd += w[j] * lx[j];
            }
            clamped[i] = std::abs(yd) > kLogClamp;
            block[i] = std::exp(std::clamp(yd, -kLogClamp, kLogClamp));
            pred += params.output_weights[i] * block[i];
        }
        const double err = pred - y[r];
        sse += err * err;

        const double g = scale * err;
        out.gradient.output_bias += g;
        for (std::size_t i = 0; i < nb; ++i) {
            out.gradient.output_weights[i] += g * block[i];
            if (clamped[i]) {
                continue;
            }
            const double s = g * params.output_weights[i] * block[i];
            auto& gw = out.gradient.blocks[i].weights;
            for (std::size_t j = 0; j < d; ++j) {
                gw[j] += s * lx[j];
            }
        }
    }
    out.loss = sse / static_cast<double>(rows.size());

    if (l1 != 0.0 || l2 != 0.0) {
        auto penalize = [&](double w, double& gw) {
            out.loss += l1 * std::abs(w) + l2 * w * w;
            gw += l1 * sign_or_zero(w) + 2.0 * l2 * w;
        };
        for (std::size_t i = 0; i < nb; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                penalize(params.blocks[i].weights[j], out.gradient.blocks[i].weights[j]);
            }
            penalize(params.output_weights[i], out.gradient.output_weights[i]);
        }
    }
    return out;
}

LossAndGradient backward(const NetworkParams& params, const Matrix& x, std::span<const double> y, double l1,
                         double l2)
{
    if (y.size() != x.rows()) {
        throw DimensionError("target length does not match batch rows");
    }
    const Matrix lx = log_features(x);
    std::vector<std::size_t> rows(x.rows());
    std::iota(rows.begin(), rows.end(), std::size_t { 0 });
    return backward_log(params, lx, y, rows, l1, l2);
}

double mse_log(const NetworkParams& params, const Matrix& log_x, std::span<const double> y)
{
    if (log_x.rows() == 0) {
        return 0.0;
    }
    double sse = 0.0;
    for (std::size_t r = 0; r < log_x.rows(); ++r) {
        const double err = forward_log(params, log_x.row(r)) - y[r];
        sse += err * err;
    }
    return sse / static_cast<double>(log_x.rows());
}

void adam_step(NetworkParams& params, const NetworkParams& grads, OptimizerState& state, std::uint64_t epoch)
{
    check_shape(params, grads);
    check_shape(params, state.first_moment);
    check_shape(params, state.second_moment);

    const auto& s = state.settings;
    const double t = static_cast<double>(++state.step_count);
    const double lr = state.learning_rate(epoch);
    const double c1 = 1.0 - std::pow(s.beta1, t);
    const double c2 = 1.0 - std::pow(s.beta2, t);

    zip_scalars(
        [&](double& p, double grad, double& m, double& v) {
            m = s.beta1 * m + (1.0 - s.beta1) * grad;
            v = s.beta2 * v + (1.0 - s.beta2) * grad * grad;
            p -= lr * (m / c1) / (std::sqrt(v / c2) + s.eps);
        },
        params, grads, state.first_moment, state.second_moment);
}

NetworkParams grow(const NetworkParams& params, double init_scale, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> dist(-init_scale, init_scale);
    NetworkParams out = params;
    PTABlockParams block { std::vector<double>(params.nvars) };
    for (auto& w : block.weights) {
        w = dist(rng);
    }
    out.blocks.push_back(std::move(block));
    out.output_weights.push_back(dist(rng));
    return out;
}

NetworkParams grow(const NetworkParams& params, double init_scale, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    return grow(params, init_scale, rng);
}

double round_to_multiple(double v, double eps) noexcept
{
    // When 1/eps is an integer n, k / n is the double nearest to the decimal
    // grid point, so rounded values print and parse back exactly.
    const double inv = 1.0 / eps;
    const double n = std::round(inv);
    if (n >= 1.0 && std::abs(inv - n) <= 1e-9 * n) {
        return std::round(v * n) / n + 0.0;
    }
    return std::round(v / eps) * eps + 0.0;
}

NetworkParams round_params(const NetworkParams& params, double eps)
{
    NetworkParams out = params;
    zip_scalars([&](double& p) { p = round_to_multiple(p, eps) + 0.0; }, out);
    return out;
}

LaurentPolynomial extract_equation(const NetworkParams& params)
{
    LaurentPolynomial p(params.nvars);
    for (std::size_t i = 0; i < params.blocks.size(); ++i) {
        p.add_term({ params.output_weights[i], params.blocks[i].weights });
    }
    p.add_term({ params.output_bias, std::vector<double>(params.nvars, 0.0) });
    return canonicalize(p);
}

} // namespace ginnlp
