#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ginnlp/laurent.hpp"
#include "ginnlp/matrix.hpp"

namespace ginnlp {

struct Range {
    double low { 0.5 };
    double high { 3.0 };

    friend bool operator==(const Range&, const Range&) = default;
};

inline constexpr Range kDefaultRange { 0.5, 3.0 };

struct Provenance {
    std::string equation;
    std::vector<Range> ranges;
    double noise_fraction { 0.0 };
    std::size_t irrelevant_count { 0 };
    std::uint64_t seed { 0 };
};

// Strictly positive inputs (rows = samples) and a real target column.
struct Dataset {
    Matrix inputs;
    std::vector<double> targets;
    std::vector<std::string> column_names;
    std::string target_name { "y" };
    std::optional<Provenance> provenance;
    // Noise-free targets, present when the dataset was generated here.
    std::optional<std::vector<double>> clean_targets;

    [[nodiscard]] std::size_t size() const noexcept { return inputs.rows(); }
    [[nodiscard]] std::size_t dims() const noexcept { return inputs.cols(); }

    // Throws DataError on any invariant violation (shape, positivity, finiteness).
    void validate() const;

    [[nodiscard]] Dataset subset(const std::vector<std::size_t>& rows) const;
};

struct SamplingSpec {
    std::vector<Range> ranges;
    std::size_t n_points { 10000 };
    double noise_fraction { 0.0 };
    std::size_t irrelevant_inputs { 0 };
    std::uint64_t seed { 0 };
};

[[nodiscard]] Dataset generate(const LaurentPolynomial& gt, const SamplingSpec& spec);

// y_i + N(0, (fraction * RMS(y))^2), RMS taken over the given targets.
[[nodiscard]] std::vector<double> add_noise(const std::vector<double>& targets, double noise_fraction,
                                            std::uint64_t seed);

// Appends `count` columns z1.. drawn uniformly over [min low, max high] of `ranges`.
[[nodiscard]] Dataset add_irrelevant(const Dataset& dataset, std::size_t count, const std::vector<Range>& ranges,
                                     std::uint64_t seed);

[[nodiscard]] Dataset load_csv(const std::filesystem::path& path, const std::string& target = "y");
void save_csv(const Dataset& dataset, const std::filesystem::path& path);

// Random permutation split; the first part has round(fraction * N) rows.
[[nodiscard]] std::pair<Dataset, Dataset> split(const Dataset& dataset, double fraction, std::uint64_t seed);

// Index form of `split`, used by the trainer.
[[nodiscard]] std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_indices(std::size_t n, double fraction, std::uint64_t seed);

[[nodiscard]] nlohmann::json provenance_to_json(const Provenance& p);

} // namespace ginnlp
