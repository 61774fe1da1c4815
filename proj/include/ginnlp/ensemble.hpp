#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ginnlp/laurent.hpp"
#include "ginnlp/trainer.hpp"

namespace ginnlp {

struct OffendingExponent {
    std::size_t term { 0 };
    std::size_t variable { 0 };
    double value { 0.0 };

    friend bool operator==(const OffendingExponent&, const OffendingExponent&) = default;
};

struct LpVerdict {
    bool is_lp { true };
    std::vector<OffendingExponent> offending_exponents;
    // Input equation with every in-tolerance exponent snapped to its integer.
    LaurentPolynomial snapped;
};

// The equation is a Laurent polynomial iff every exponent is within
// integer_snap_tol of an integer.
[[nodiscard]] LpVerdict classify_lp(const LaurentPolynomial& eq, double integer_snap_tol = kDefaultIntegerSnapTol);

// External solver invoked as a shell command. `{input}` in the template is
// replaced by the path of a CSV copy of the dataset.
struct SecondaryAdapter {
    std::string command_template;
    std::chrono::milliseconds timeout { std::chrono::seconds(600) };
    std::filesystem::path working_dir;

    // Throws ConfigError unless the template holds exactly one {input}.
    void validate() const;
};

enum class EnsemblePath { GinnLp, Secondary, Rejected };

[[nodiscard]] const char* to_string(EnsemblePath p) noexcept;

struct EnsembleReport {
    FitReport ginn;
    LpVerdict verdict;
    EnsemblePath path { EnsemblePath::GinnLp };
    // Final equation text; empty when the secondary was needed and failed or absent.
    std::string output;
    bool secondary_invoked { false };
    std::string secondary_stderr;
    std::optional<std::string> error;
};

[[nodiscard]] EnsembleReport run_ensemble(const Dataset& dataset, const TrainConfig& config,
                                          const std::optional<SecondaryAdapter>& adapter);

// Routing step alone, for an already fitted report.
[[nodiscard]] EnsembleReport route(const Dataset& dataset, FitReport ginn, const TrainConfig& config,
                                   const std::optional<SecondaryAdapter>& adapter);

[[nodiscard]] nlohmann::json to_json(const EnsembleReport& r);

} // namespace ginnlp
