#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "ginnlp/data.hpp"
#include "ginnlp/ensemble.hpp"
#include "ginnlp/laurent.hpp"
#include "ginnlp/trainer.hpp"

namespace ginnlp {

struct SuiteEntry {
    std::string name;
    std::string equation;
    std::vector<Range> ranges;
    std::size_t n_points { 10000 };
    LaurentPolynomial ground_truth; // parsed from `equation`
};

struct SuiteSpec {
    std::vector<SuiteEntry> entries;
    int trials { 5 };
    std::vector<double> noise_fractions { 0.0 };
    std::vector<std::size_t> irrelevant_counts { 0 };
    std::uint64_t master_seed { 0 };
    double train_fraction { 0.75 };

    void validate() const;
};

// Document shape:
//   { "trials": 5, "master_seed": 7, "noise_fractions": [0], "irrelevant_counts": [0],
//     "entries": [ { "name": "...", "equation": "x1*x2^-1", "nvars": 2,
//                    "ranges": [[0.5, 3], [0.5, 3]], "n_points": 10000 } ] }
// "nvars" defaults to the highest variable index used; "ranges" may be a single
// [lo, hi] pair applied to every variable and defaults to (0.5, 3).
[[nodiscard]] SuiteSpec suite_from_json(const nlohmann::json& j);
[[nodiscard]] SuiteSpec load_suite(const std::filesystem::path& path);

struct TrialResult {
    std::string entry;
    std::size_t entry_index { 0 };
    int trial { 0 };
    double noise { 0.0 };
    std::size_t irrelevant { 0 };
    bool recovered { false };
    double r2_test { std::numeric_limits<double>::quiet_NaN() };
    std::optional<double> r2_clean;
    double mse_test { std::numeric_limits<double>::quiet_NaN() };
    int complexity { 0 };    // of the fitted equation
    int gt_complexity { 0 }; // of the ground truth
    int blocks { 0 };
    long long wall_ms { 0 };
    std::string equation;
    bool lp_verdict { false };
    std::string error;
};

// 1 - SS_res / SS_tot. Throws Error on empty or mismatched input and on a constant y_true.
[[nodiscard]] double r_squared(std::span<const double> y_true, std::span<const double> y_pred);

enum class Aggregation { Overall, MinAcrossTrials, MedianAcrossTrials, MeanAcrossTrials, MaxAcrossTrials };

// Percentage of recovered results. The *AcrossTrials forms compute one rate
// per trial index and aggregate those. Throws Error on an empty input.
[[nodiscard]] double solution_rate(std::span<const TrialResult> results, Aggregation agg = Aggregation::Overall);

// Per-trial-index rates, ordered by trial.
[[nodiscard]] std::vector<double> per_trial_rates(std::span<const TrialResult> results);

struct EntryRate {
    std::string entry;
    int gt_complexity { 0 };
    double rate { 0.0 };
};

[[nodiscard]] std::vector<EntryRate> rates_by_entry(std::span<const TrialResult> results);

struct ComplexityBin {
    double low { 0.0 }; // exclusive
    double high { 0.0 }; // inclusive
    std::optional<double> mean_rate; // absent when no entry falls in the bin
    std::size_t entries { 0 };
};

[[nodiscard]] std::vector<double> default_complexity_edges();

// Entries are binned by ground-truth complexity into (edge[k], edge[k+1]].
[[nodiscard]] std::vector<ComplexityBin> complexity_binning(std::span<const TrialResult> results,
                                                            const std::vector<double>& edges
                                                            = default_complexity_edges());

struct SuiteOptions {
    unsigned parallel { 1 };
    bool include_timing { false };
};

struct SuiteRun {
    std::vector<TrialResult> rows; // sorted by entry, trial, noise, irrelevant count
    nlohmann::json summary;
};

[[nodiscard]] SuiteRun run_suite(const SuiteSpec& suite, const TrainConfig& config,
                                 const std::optional<SecondaryAdapter>& adapter = std::nullopt,
                                 const SuiteOptions& options = {});

// Fits one suite cell; exposed for tests and the acceptance harness.
[[nodiscard]] TrialResult run_cell(const SuiteSpec& suite, std::size_t entry, int trial, std::size_t noise_idx,
                                   std::size_t irrelevant_idx, const TrainConfig& config,
                                   const std::optional<SecondaryAdapter>& adapter, unsigned fit_threads = 0);

[[nodiscard]] nlohmann::json summarize(std::span<const TrialResult> rows);

void write_results_csv(std::span<const TrialResult> rows, const std::filesystem::path& path);

} // namespace ginnlp
