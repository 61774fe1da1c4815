#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ginnlp/data.hpp"
#include "ginnlp/laurent.hpp"
#include "ginnlp/network.hpp"

namespace ginnlp {

struct TrainConfig {
    int instances { 4 };
    double complexity_weight { 1e-6 };
    double l1 { 1e-4 };
    double l2 { 1e-4 };
    int max_blocks { 4 };
    int epochs_per_stage { 500 };
    double rounding_precision { 0.001 };
    double early_stop_ratio { 0.8 };
    double reg_switch_fraction { 0.5 };
    double validation_fraction { 0.2 };
    double base_lr { 0.01 };
    // Per-epoch factor; unset means 0.1^(1 / epochs_per_stage).
    std::optional<double> lr_decay;
    // Training sets with at most 2 * batch_size rows are trained full-batch.
    int batch_size { 32 };
    double init_scale { 0.5 };
    double integer_snap_tol { kDefaultIntegerSnapTol };
    double coeff_rtol { kDefaultCoeffRtol };
    std::uint64_t master_seed { 0 };

    [[nodiscard]] double effective_lr_decay() const;
    // Throws ConfigError when an invariant is violated.
    void validate() const;
};

[[nodiscard]] nlohmann::json to_json(const TrainConfig& c);
// Absent keys keep their defaults; unknown keys are rejected.
[[nodiscard]] TrainConfig config_from_json(const nlohmann::json& j);

struct EquationCandidate {
    LaurentPolynomial equation;
    double mse { 0.0 }; // validation MSE of the selected snapshot
    ComplexityBreakdown complexity;
    double symbolic_error { 0.0 };
    int instance_id { 0 };
    int blocks_used { 0 };
    std::vector<double> growth_trace; // validation MSE after each stage
    bool aborted { false };
    std::string error;
};

struct FitReport {
    EquationCandidate best;
    std::vector<EquationCandidate> all_candidates;
    bool lp_verdict { false };
    TrainConfig config_echo;
    std::chrono::milliseconds wall_time { 0 };
    std::optional<std::string> error;
};

// (l1, l2) in force at `epoch` of a growth stage.
[[nodiscard]] std::pair<double, double> regularization_schedule(int epoch, const TrainConfig& config);

[[nodiscard]] double symbolic_error(double mse, const ComplexityBreakdown& c, double complexity_weight) noexcept;

// Index of the candidate with minimal symbolic error; ties go to lower total
// complexity, then lower instance id.
[[nodiscard]] std::size_t select_best(const std::vector<EquationCandidate>& candidates);

// One run of the growth loop on `dataset`, which is split internally into
// train/validation parts.
[[nodiscard]] EquationCandidate train_instance(const Dataset& dataset, const TrainConfig& config,
                                               std::uint64_t instance_seed, int instance_id = 0);

// `config.instances` independent runs with seeds derived from master_seed.
// `threads` = 0 picks min(instances, hardware concurrency).
[[nodiscard]] FitReport fit(const Dataset& dataset, const TrainConfig& config, unsigned threads = 0);

[[nodiscard]] nlohmann::json to_json(const EquationCandidate& c);
// Report document; wall_ms is written only when include_timing is set so that
// repeated runs produce identical files.
[[nodiscard]] nlohmann::json to_json(const FitReport& r, bool include_timing);

} // namespace ginnlp
