#include "ginnlp/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "ginnlp/ensemble.hpp"
#include "ginnlp/errors.hpp"
#include "ginnlp/seed.hpp"

namespace ginnlp {

double TrainConfig::effective_lr_decay() const
{
    if (lr_decay) {
        return *lr_decay;
    }
    return std::pow(0.1, 1.0 / static_cast<double>(std::max(epochs_per_stage, 1)));
}

void TrainConfig::validate() const
{
    auto require = [](bool ok, const char* what) {
        if (!ok) {
            throw ConfigError(what);
        }
    };
    require(instances >= 1, "instances must be >= 1");
    require(max_blocks >= 1, "max_blocks must be >= 1");
    require(epochs_per_stage >= 1, "epochs_per_stage must be >= 1");
    require(early_stop_ratio > 0.0 && early_stop_ratio < 1.0, "early_stop_ratio must lie in (0, 1)");
    require(reg_switch_fraction >= 0.0 && reg_switch_fraction <= 1.0, "reg_switch_fraction must lie in [0, 1]");
    require(validation_fraction > 0.0 && validation_fraction < 1.0, "validation_fraction must lie in (0, 1)");
    require(complexity_weight >= 0.0, "complexity_weight must be >= 0");
    require(l1 >= 0.0 && l2 >= 0.0, "regularization factors must be >= 0");
    require(rounding_precision > 0.0, "rounding_precision must be > 0");
    require(base_lr > 0.0, "base_lr must be > 0");
    require(!lr_decay || (*lr_decay > 0.0 && *lr_decay <= 1.0), "lr_decay must lie in (0, 1]");
    require(batch_size >= 1, "batch_size must be >= 1");
    require(init_scale >= 0.0, "init_scale must be >= 0");
    require(integer_snap_tol >= 0.0, "integer_snap_tol must be >= 0");
    require(coeff_rtol >= 0.0, "coeff_rtol must be >= 0");
}

nlohmann::json to_json(const TrainConfig& c)
{
    return {
        { "instances", c.instances },
        { "complexity_weight", c.complexity_weight },
        { "l1", c.l1 },
        { "l2", c.l2 },
        { "max_blocks", c.max_blocks },
        { "epochs_per_stage", c.epochs_per_stage },
        { "rounding_precision", c.rounding_precision },
        { "early_stop_ratio", c.early_stop_ratio },
        { "reg_switch_fraction", c.reg_switch_fraction },
        { "validation_fraction", c.validation_fraction },
        { "base_lr", c.base_lr },
        { "lr_decay", c.effective_lr_decay() },
        { "batch_size", c.batch_size },
        { "init_scale", c.init_scale },
        { "integer_snap_tol", c.integer_snap_tol },
        { "coeff_rtol", c.coeff_rtol },
        { "master_seed", c.master_seed },
    };
}

TrainConfig config_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    static const std::set<std::string> known { "instances", "complexity_weight", "l1", "l2", "max_blocks",
        "epochs_per_stage", "rounding_precision", "early_stop_ratio", "reg_switch_fraction", "validation_fraction",
        "base_lr", "lr_decay", "batch_size", "init_scale", "integer_snap_tol", "coeff_rtol", "master_seed" };
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }

    TrainConfig c;
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) {
                j.at(key).get_to(field);
            }
        };
        get("instances", c.instances);
        get("complexity_weight", c.complexity_weight);
        get("l1", c.l1);
        get("l2", c.l2);
        get("max_blocks", c.max_blocks);
        get("epochs_per_stage", c.epochs_per_stage);
        get("rounding_precision", c.rounding_precision);
        get("early_stop_ratio", c.early_stop_ratio);
        get("reg_switch_fraction", c.reg_switch_fraction);
        get("validation_fraction", c.validation_fraction);
        get("base_lr", c.base_lr);
        if (j.contains("lr_decay") && !j.at("lr_decay").is_null()) {
            c.lr_decay = j.at("lr_decay").get<double>();
        }
        get("batch_size", c.batch_size);
        get("init_scale", c.init_scale);
        get("integer_snap_tol", c.integer_snap_tol);
        get("coeff_rtol", c.coeff_rtol);
        get("master_seed", c.master_seed);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    c.validate();
    return c;
}

std::pair<double, double> regularization_schedule(int epoch, const TrainConfig& config)
{
    const double switch_epoch = config.reg_switch_fraction * config.epochs_per_stage;
    if (static_cast<double>(epoch) < switch_epoch) {
        return { config.l1, config.l2 };
    }
    return { 0.0, 0.0 };
}

double symbolic_error(double mse, const ComplexityBreakdown& c, double complexity_weight) noexcept
{
    return mse + complexity_weight * c.total;
}

std::size_t select_best(const std::vector<EquationCandidate>& candidates)
{
    if (candidates.empty()) {
        throw Error("no candidates to select from");
    }
    auto better = [](const EquationCandidate& a, const EquationCandidate& b) {
        // NaN symbolic errors (aborted runs) never win.
        const bool a_nan = std::isnan(a.symbolic_error);
        const bool b_nan = std::isnan(b.symbolic_error);
        if (a_nan != b_nan) {
            return b_nan;
        }
        if (a.symbolic_error != b.symbolic_error) {
            return a.symbolic_error < b.symbolic_error;
        }
        if (a.complexity.total != b.complexity.total) {
            return a.complexity.total < b.complexity.total;
        }
        return a.instance_id < b.instance_id;
    };
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        if (better(candidates[i], candidates[best])) {
            best = i;
        }
    }
    return best;
}

namespace {

    EquationCandidate make_candidate(const NetworkParams& snapshot, double mse, const TrainConfig& config,
                                     int instance_id, std::vector<double> trace)
    {
        EquationCandidate c;
        c.equation = extract_equation(snapshot);
        c.mse = mse;
        c.complexity = complexity(c.equation);
        c.symbolic_error = symbolic_error(mse, c.complexity, config.complexity_weight);
        c.instance_id = instance_id;
        c.blocks_used = static_cast<int>(snapshot.block_count());
        c.growth_trace = std::move(trace);
        return c;
    }

    EquationCandidate empty_candidate(std::size_t nvars, int instance_id, std::string error,
                                      std::vector<double> trace)
    {
        EquationCandidate c;
        c.equation = LaurentPolynomial(nvars);
        c.mse = std::numeric_limits<double>::infinity();
        c.symbolic_error = std::numeric_limits<double>::infinity();
        c.instance_id = instance_id;
        c.growth_trace = std::move(trace);
        c.aborted = true;
        c.error = std::move(error);
        return c;
    }

    class BatchPlan {
    public:
        BatchPlan(std::size_t n, std::size_t batch_size)
            : order_(n)
            , batch_(n <= 2 * batch_size ? n : batch_size)
        {
            std::iota(order_.begin(), order_.end(), std::size_t { 0 });
        }

        [[nodiscard]] bool full_batch() const noexcept { return batch_ == order_.size(); }

        void shuffle(std::mt19937_64& rng)
        {
            if (!full_batch()) {
                std::shuffle(order_.begin(), order_.end(), rng);
            }
        }

        [[nodiscard]] std::size_t count() const noexcept { return (order_.size() + batch_ - 1) / batch_; }

        [[nodiscard]] std::span<const std::size_t> batch(std::size_t k) const noexcept
        {
            const std::size_t begin = k * batch_;
            const std::size_t end = std::min(order_.size(), begin + batch_);
            return { order_.data() + begin, end - begin };
        }

    private:
        std::vector<std::size_t> order_;
        std::size_t batch_;
    };

} // namespace

EquationCandidate train_instance(const Dataset& dataset, const TrainConfig& config, std::uint64_t instance_seed,
                                 int instance_id)
{
    config.validate();
    dataset.validate();

    auto [train_idx, val_idx]
        = split_indices(dataset.size(), 1.0 - config.validation_fraction, derive_seed(instance_seed, { 0 }));
    const Matrix all_log = log_features(dataset.inputs);
    const Matrix train_x = all_log.select_rows(train_idx);
    const Matrix val_x = all_log.select_rows(val_idx);
    std::vector<double> train_y;
    std::vector<double> val_y;
    for (auto r : train_idx) {
        train_y.push_back(dataset.targets[r]);
    }
    for (auto r : val_idx) {
        val_y.push_back(dataset.targets[r]);
    }

    std::mt19937_64 rng(derive_seed(instance_seed, { 1 }));
    BatchPlan plan(train_idx.size(), static_cast<std::size_t>(config.batch_size));

    NetworkParams params(dataset.dims());
    OptimizerState opt(params, AdamSettings { config.base_lr, config.effective_lr_decay() });

    std::optional<NetworkParams> snapshot;
    double prev_mse = std::numeric_limits<double>::infinity();
    std::vector<double> trace;

    auto abort_with = [&](const std::string& why) {
        if (snapshot) {
            auto c = make_candidate(*snapshot, prev_mse, config, instance_id, trace);
            c.aborted = true;
            c.error = why;
            return c;
        }
        return empty_candidate(dataset.dims(), instance_id, why, trace);
    };

    for (int stage = 0; stage < config.max_blocks; ++stage) {
        params = grow(params, config.init_scale, rng);
        opt.match_shape(params);

        for (int epoch = 0; epoch < config.epochs_per_stage; ++epoch) {
            const auto [l1, l2] = regularization_schedule(epoch, config);
            plan.shuffle(rng);
            for (std::size_t b = 0; b < plan.count(); ++b) {
                const auto lg = backward_log(params, train_x, train_y, plan.batch(b), l1, l2);
                if (!std::isfinite(lg.loss)) {
                    return abort_with("non-finite loss in stage " + std::to_string(stage + 1));
                }
                adam_step(params, lg.gradient, opt, static_cast<std::uint64_t>(epoch));
            }
            if (!params.all_finite()) {
                return abort_with("non-finite parameters in stage " + std::to_string(stage + 1));
            }
        }

        params = round_params(params, config.rounding_precision);
        const double mse = mse_log(params, val_x, val_y);
        trace.push_back(mse);
        if (!std::isfinite(mse)) {
            return abort_with("non-finite validation MSE in stage " + std::to_string(stage + 1));
        }
        if (mse > prev_mse * config.early_stop_ratio) {
            break;
        }
        prev_mse = mse;
        snapshot = params;
    }

    return make_candidate(*snapshot, prev_mse, config, instance_id, std::move(trace));
}

FitReport fit(const Dataset& dataset, const TrainConfig& config, unsigned threads)
{
    config.validate();
    dataset.validate();
    const auto start = std::chrono::steady_clock::now();

    // Surface a degenerate train/validation split before spawning any work.
    (void)split_indices(dataset.size(), 1.0 - config.validation_fraction, 0);

    const auto n = static_cast<std::size_t>(config.instances);
    std::vector<EquationCandidate> candidates(n);
    auto run = [&](std::size_t i) {
        const auto seed = derive_seed(config.master_seed, { i });
        try {
            candidates[i] = train_instance(dataset, config, seed, static_cast<int>(i));
        } catch (const std::exception& e) {
            candidates[i] = empty_candidate(dataset.dims(), static_cast<int>(i), e.what(), {});
        }
    };

    if (threads == 0) {
        threads = std::max(1U, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            run(i);
        }
    } else {
        std::atomic<std::size_t> next { 0 };
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    run(i);
                }
            });
        }
    }

    FitReport report;
    report.all_candidates = std::move(candidates);
    report.best = report.all_candidates[select_best(report.all_candidates)];
    report.config_echo = config;
    const bool all_aborted = std::all_of(report.all_candidates.begin(), report.all_candidates.end(),
                                         [](const EquationCandidate& c) { return c.aborted && !std::isfinite(c.mse); });
    if (all_aborted) {
        report.lp_verdict = false;
        report.error = "every training instance aborted: " + report.all_candidates.front().error;
    } else {
        report.lp_verdict = classify_lp(report.best.equation, config.integer_snap_tol).is_lp;
    }
    report.wall_time
        = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    return report;
}

nlohmann::json to_json(const EquationCandidate& c)
{
    auto num = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) {
            return v;
        }
        return nullptr;
    };
    nlohmann::json trace = nlohmann::json::array();
    for (double m : c.growth_trace) {
        trace.push_back(num(m));
    }
    nlohmann::json j {
        { "equation", print_equation(c.equation) },
        { "mse", num(c.mse) },
        { "complexity", c.complexity.total },
        { "complexity_breakdown",
          { { "operators", c.complexity.operators },
            { "constants", c.complexity.constants },
            { "features", c.complexity.features } } },
        { "se", num(c.symbolic_error) },
        { "blocks", c.blocks_used },
        { "instance", c.instance_id },
        { "growth_trace", trace },
    };
    if (c.aborted) {
        j["aborted"] = true;
        j["error"] = c.error;
    }
    return j;
}

nlohmann::json to_json(const FitReport& r, bool include_timing)
{
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : r.all_candidates) {
        cands.push_back(to_json(c));
    }
    nlohmann::json j {
        { "best", to_json(r.best) },
        { "candidates", cands },
        { "lp_verdict", r.lp_verdict },
        { "config", to_json(r.config_echo) },
        { "wall_ms", include_timing ? r.wall_time.count() : 0 },
    };
    if (r.error) {
        j["error"] = *r.error;
    }
    return j;
}

} // namespace ginnlp
