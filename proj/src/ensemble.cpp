#include "ginnlp/ensemble.hpp"

#include <cmath>
#include <cstdlib>
#include <unistd.h>

#include "ginnlp/errors.hpp"
#include "ginnlp/subprocess.hpp"

namespace ginnlp {

namespace {

    constexpr std::string_view kPlaceholder = "{input}";

    std::size_t count_placeholders(const std::string& s)
    {
        std::size_t n = 0;
        for (auto pos = s.find(kPlaceholder); pos != std::string::npos; pos = s.find(kPlaceholder, pos + 1)) {
            ++n;
        }
        return n;
    }

    // Temporary CSV removed on scope exit.
    class TempCsv {
    public:
        explicit TempCsv(const Dataset& ds)
        {
            std::string tmpl = (std::filesystem::temp_directory_path() / "ginnlp-XXXXXX.csv").string();
            const int fd = ::mkstemps(tmpl.data(), 4);
            if (fd < 0) {
                throw Error("cannot create temporary dataset file");
            }
            ::close(fd);
            path_ = tmpl;
            save_csv(ds, path_);
        }
        ~TempCsv()
        {
            std::error_code ec;
            std::filesystem::remove(path_, ec);
        }
        TempCsv(const TempCsv&) = delete;
        TempCsv& operator=(const TempCsv&) = delete;

        [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

    private:
        std::filesystem::path path_;
    };

    std::string first_line(const std::string& s)
    {
        const auto nl = s.find('\n');
        std::string line = s.substr(0, nl);
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
            line.pop_back();
        }
        const auto start = line.find_first_not_of(" \t");
        return start == std::string::npos ? std::string() : line.substr(start);
    }

} // namespace

LpVerdict classify_lp(const LaurentPolynomial& eq, double integer_snap_tol)
{
    LpVerdict v;
    LaurentPolynomial snapped(eq.nvars());
    for (std::size_t i = 0; i < eq.terms().size(); ++i) {
        LaurentTerm t = eq.terms()[i];
        for (std::size_t j = 0; j < t.exponents.size(); ++j) {
            const double e = t.exponents[j];
            if (is_integer_exponent(e, integer_snap_tol)) {
                t.exponents[j] = std::round(e) + 0.0;
            } else {
                v.offending_exponents.push_back({ i, j, e });
            }
        }
        snapped.add_term(std::move(t));
    }
    v.is_lp = v.offending_exponents.empty();
    v.snapped = canonicalize(snapped);
    return v;
}

void SecondaryAdapter::validate() const
{
    if (count_placeholders(command_template) != 1) {
        throw ConfigError("secondary command must contain {input} exactly once");
    }
    if (timeout.count() <= 0) {
        throw ConfigError("secondary timeout must be positive");
    }
}

const char* to_string(EnsemblePath p) noexcept
{
    switch (p) {
    case EnsemblePath::GinnLp:
        return "ginnlp";
    case EnsemblePath::Secondary:
        return "secondary";
    case EnsemblePath::Rejected:
        return "rejected";
    }
    return "unknown";
}

EnsembleReport route(const Dataset& dataset, FitReport ginn, const TrainConfig& config,
                     const std::optional<SecondaryAdapter>& adapter)
{
    EnsembleReport r;
    r.verdict = classify_lp(ginn.best.equation, config.integer_snap_tol);
    if (ginn.error) {
        r.verdict.is_lp = false;
    }
    r.ginn = std::move(ginn);

    if (r.verdict.is_lp) {
        r.path = EnsemblePath::GinnLp;
        r.output = print_equation(r.verdict.snapped);
        return r;
    }

    r.path = EnsemblePath::Rejected;
    if (!adapter) {
        r.error = "equation is not a Laurent polynomial and no secondary solver is configured";
        return r;
    }
    adapter->validate();

    TempCsv csv(dataset);
    std::string cmd = adapter->command_template;
    cmd.replace(cmd.find(kPlaceholder), kPlaceholder.size(), csv.path().string());

    r.secondary_invoked = true;
    ProcessResult proc;
    try {
        proc = run_shell(cmd, adapter->timeout, adapter->working_dir);
    } catch (const Error& e) {
        r.error = std::string("secondary solver failed to start: ") + e.what();
        return r;
    }
    r.secondary_stderr = proc.err;
    if (proc.timed_out) {
        r.error = "secondary solver timed out after " + std::to_string(adapter->timeout.count()) + " ms";
        return r;
    }
    if (proc.exit_status != 0) {
        r.error = "secondary solver exited with status " + std::to_string(proc.exit_status);
        return r;
    }
    const std::string eq = first_line(proc.out);
    if (eq.empty()) {
        r.error = "secondary solver printed no equation";
        return r;
    }
    r.path = EnsemblePath::Secondary;
    r.output = eq;
    return r;
}

EnsembleReport run_ensemble(const Dataset& dataset, const TrainConfig& config,
                            const std::optional<SecondaryAdapter>& adapter)
{
    if (adapter) {
        adapter->validate();
    }
    return route(dataset, fit(dataset, config), config, adapter);
}

nlohmann::json to_json(const EnsembleReport& r)
{
    nlohmann::json offending = nlohmann::json::array();
    for (const auto& o : r.verdict.offending_exponents) {
        offending.push_back({ { "term", o.term }, { "variable", o.variable }, { "value", o.value } });
    }
    nlohmann::json j {
        { "ginnlp_equation", print_equation(r.ginn.best.equation) },
        { "is_lp", r.verdict.is_lp },
        { "offending_exponents", offending },
        { "path", to_string(r.path) },
        { "output", r.output },
        { "secondary_invoked", r.secondary_invoked },
        { "secondary_stderr", r.secondary_stderr },
    };
    if (r.error) {
        j["error"] = *r.error;
    }
    return j;
}

} // namespace ginnlp
