#include "ginnlp/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ginnlp/bench.hpp"
#include "ginnlp/data.hpp"
#include "ginnlp/ensemble.hpp"
#include "ginnlp/errors.hpp"
#include "ginnlp/laurent.hpp"
#include "ginnlp/trainer.hpp"

namespace ginnlp {

namespace {

    namespace fs = std::filesystem;

    // Failures that map to a specific exit code.
    struct ExitError : Error {
        int code;
        ExitError(int c, const std::string& what)
            : Error(what)
            , code(c)
        {
        }
    };

    void write_json(const nlohmann::json& j, const fs::path& path)
    {
        if (path.has_parent_path()) {
            fs::create_directories(path.parent_path());
        }
        std::ofstream f(path, std::ios::binary);
        if (!f) {
            throw ExitError(kExitData, "cannot write " + path.string());
        }
        f << j.dump(2) << '\n';
    }

    TrainConfig load_config(const std::string& path)
    {
        if (path.empty()) {
            return {};
        }
        std::ifstream in(path);
        if (!in) {
            throw ConfigError("cannot open config " + path);
        }
        try {
            return config_from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
    }

    // "0.5:3" for every variable, or "0.5:3,1:5" one per variable.
    std::vector<Range> parse_range_spec(const std::string& spec, std::size_t nvars)
    {
        std::vector<Range> out;
        std::stringstream ss(spec);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) {
                throw DataError("range '" + item + "' is not of the form low:high");
            }
            try {
                std::size_t used_lo = 0;
                std::size_t used_hi = 0;
                const std::string lo_text = item.substr(0, colon);
                const std::string hi_text = item.substr(colon + 1);
                Range r { std::stod(lo_text, &used_lo), std::stod(hi_text, &used_hi) };
                if (used_lo != lo_text.size() || used_hi != hi_text.size()) {
                    throw std::invalid_argument(item);
                }
                out.push_back(r);
            } catch (const std::logic_error&) {
                throw DataError("range '" + item + "' is not numeric");
            }
        }
        if (out.size() == 1) {
            out.resize(nvars, out.front());
        }
        if (out.size() != nvars) {
            throw DataError("expected " + std::to_string(nvars) + " ranges, got " + std::to_string(out.size()));
        }
        for (const auto& r : out) {
            if (!(r.low > 0.0 && r.high > r.low)) {
                throw DataError("ranges must satisfy 0 < low < high");
            }
        }
        return out;
    }

    struct FitArgs {
        std::string data;
        std::string target { "y" };
        std::string config;
        std::string out;
        std::optional<std::uint64_t> seed;
        bool timings { false };
    };

    struct GenerateArgs {
        std::string equation;
        std::string ranges;
        std::size_t n { 10000 };
        double noise { 0.0 };
        std::size_t irrelevant { 0 };
        std::uint64_t seed { 0 };
        std::string out;
    };

    struct BenchmarkArgs {
        std::string suite;
        std::optional<int> trials;
        std::string out_dir;
        unsigned parallel { 1 };
        std::string config;
        std::optional<std::uint64_t> seed;
        bool timings { false };
    };

    struct ClassifyArgs {
        std::string data;
        std::string target { "y" };
        std::string config;
        std::optional<std::uint64_t> seed;
    };

    struct EnsembleArgs {
        ClassifyArgs base;
        std::string secondary;
        double timeout_s { 600.0 };
        std::string out;
    };

    TrainConfig config_with_seed(const std::string& path, const std::optional<std::uint64_t>& seed)
    {
        TrainConfig cfg = load_config(path);
        if (seed) {
            cfg.master_seed = *seed;
        }
        cfg.validate();
        return cfg;
    }

    int cmd_fit(const FitArgs& a, std::ostream& out)
    {
        const TrainConfig cfg = config_with_seed(a.config, a.seed);
        const Dataset ds = load_csv(a.data, a.target);
        const FitReport report = fit(ds, cfg);
        if (!a.out.empty()) {
            write_json(to_json(report, a.timings), a.out);
        }
        if (report.error) {
            throw ExitError(kExitTrainingAbort, "training aborted: " + *report.error);
        }
        out << print_equation(report.best.equation) << '\n';
        out << (report.lp_verdict ? "LP" : "NON_LP") << '\n';
        return kExitOk;
    }

    int cmd_generate(const GenerateArgs& a, std::ostream& out)
    {
        const std::size_t nvars = max_variable_index(a.equation);
        if (nvars == 0) {
            throw DataError("equation has no variables");
        }
        const LaurentPolynomial gt = parse_equation(a.equation, nvars);
        const std::vector<Range> ranges
            = a.ranges.empty() ? std::vector<Range>(nvars, kDefaultRange) : parse_range_spec(a.ranges, nvars);
        const Dataset ds = generate(gt, { ranges, a.n, a.noise, a.irrelevant, a.seed });
        const fs::path path(a.out);
        if (path.has_parent_path()) {
            fs::create_directories(path.parent_path());
        }
        save_csv(ds, path);
        if (ds.provenance) {
            write_json(provenance_to_json(*ds.provenance), path.string() + ".json");
        }
        out << "wrote " << ds.size() << " rows to " << path.string() << '\n';
        return kExitOk;
    }

    void print_summary(const nlohmann::json& s, std::ostream& out)
    {
        out << "cells " << s.value("cells", 0) << '\n';
        if (!s.contains("solution_rate")) {
            return;
        }
        out << std::fixed << std::setprecision(1);
        out << "solution rate " << s["solution_rate"].get<double>() << "%\n";
        out << "R2 > 0.99 accuracy " << s["r2_gt_099_accuracy"].get<double>() << "%\n";
        out << "noise  irrelevant  solution_rate  r2_acc\n";
        for (const auto& row : s["sweeps"]) {
            out << std::setw(5) << row["noise"].get<double>() << "  " << std::setw(10)
                << row["irrelevant"].get<std::size_t>() << "  " << std::setw(13)
                << row["solution_rate"].get<double>() << "  " << std::setw(6)
                << row["r2_gt_099_accuracy"].get<double>() << '\n';
        }
        for (const auto& e : s["entries"]) {
            out << "  " << e["entry"].get<std::string>() << ": " << e["solution_rate"].get<double>() << "%\n";
        }
        out.unsetf(std::ios::floatfield);
    }

    int cmd_benchmark(const BenchmarkArgs& a, std::ostream& out)
    {
        SuiteSpec suite = load_suite(a.suite);
        if (a.trials) {
            suite.trials = *a.trials;
        }
        if (a.seed) {
            suite.master_seed = *a.seed;
        }
        suite.validate();
        const TrainConfig cfg = config_with_seed(a.config, std::nullopt);
        const SuiteRun run = run_suite(suite, cfg, std::nullopt, { a.parallel, a.timings });

        const fs::path dir(a.out_dir);
        fs::create_directories(dir);
        write_results_csv(run.rows, dir / "results.csv");
        write_json(run.summary, dir / "summary.json");
        print_summary(run.summary, out);
        return kExitOk;
    }

    FitReport fit_for_routing(const ClassifyArgs& a, TrainConfig& cfg, Dataset& ds)
    {
        cfg = config_with_seed(a.config, a.seed);
        ds = load_csv(a.data, a.target);
        FitReport report = fit(ds, cfg);
        if (report.error) {
            throw ExitError(kExitTrainingAbort, "training aborted: " + *report.error);
        }
        return report;
    }

    int cmd_classify(const ClassifyArgs& a, std::ostream& out)
    {
        TrainConfig cfg;
        Dataset ds;
        const FitReport report = fit_for_routing(a, cfg, ds);
        const LpVerdict v = classify_lp(report.best.equation, cfg.integer_snap_tol);
        out << (v.is_lp ? "LP " : "NON_LP ") << print_equation(v.is_lp ? v.snapped : report.best.equation) << '\n';
        return kExitOk;
    }

    int cmd_ensemble(const EnsembleArgs& a, std::ostream& out, std::ostream& err)
    {
        TrainConfig cfg;
        Dataset ds;
        FitReport report = fit_for_routing(a.base, cfg, ds);
        std::optional<SecondaryAdapter> adapter;
        if (!a.secondary.empty()) {
            adapter = SecondaryAdapter { a.secondary,
                                         std::chrono::milliseconds(static_cast<long long>(a.timeout_s * 1000.0)),
                                         {} };
            adapter->validate();
        }
        const EnsembleReport r = route(ds, std::move(report), cfg, adapter);
        if (!a.out.empty()) {
            write_json(to_json(r), a.out);
        }
        out << "ginnlp " << print_equation(r.ginn.best.equation) << '\n';
        out << "verdict " << (r.verdict.is_lp ? "LP" : "NON_LP") << '\n';
        if (r.error) {
            if (!r.secondary_stderr.empty()) {
                err << r.secondary_stderr;
            }
            throw ExitError(kExitAdapter, *r.error);
        }
        out << "path " << to_string(r.path) << '\n';
        out << "equation " << r.output << '\n';
        return kExitOk;
    }

    int cmd_searchspace(unsigned order, unsigned vars, std::ostream& out)
    {
        const SearchSpaceResult r = search_space(order, vars);
        out << "T=" << r.term_count << " S=" << r.structure_count << '\n';
        return kExitOk;
    }

    void add_data_flags(CLI::App* sub, ClassifyArgs& a)
    {
        sub->add_option("--data", a.data, "input CSV")->required();
        sub->add_option("--target", a.target, "target column name")->capture_default_str();
        sub->add_option("--config", a.config, "TrainConfig JSON");
        sub->add_option("--seed", a.seed, "master seed");
    }

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app { "Laurent-polynomial symbolic regression with growing PTA networks", "ginnlp" };
    app.require_subcommand(1);
    app.allow_extras(false);

    FitArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "train on a CSV dataset and write a report");
    fit_cmd->add_option("--data", fit_args.data, "input CSV")->required();
    fit_cmd->add_option("--target", fit_args.target, "target column name")->capture_default_str();
    fit_cmd->add_option("--config", fit_args.config, "TrainConfig JSON");
    fit_cmd->add_option("--out", fit_args.out, "report JSON path");
    fit_cmd->add_option("--seed", fit_args.seed, "master seed");
    fit_cmd->add_flag("--timings", fit_args.timings, "record wall-clock time in the report");

    GenerateArgs gen_args;
    auto* gen_cmd = app.add_subcommand("generate", "sample a dataset from a Laurent polynomial");
    gen_cmd->add_option("--equation", gen_args.equation, "ground truth, e.g. x1^2*x2^-1")->required();
    gen_cmd->add_option("--ranges", gen_args.ranges, "low:high per variable, comma separated");
    gen_cmd->add_option("--n", gen_args.n, "number of rows")->capture_default_str();
    gen_cmd->add_option("--noise", gen_args.noise, "noise fraction of the target RMS")->capture_default_str();
    gen_cmd->add_option("--irrelevant", gen_args.irrelevant, "extra irrelevant columns")->capture_default_str();
    gen_cmd->add_option("--seed", gen_args.seed, "sampling seed")->capture_default_str();
    gen_cmd->add_option("--out", gen_args.out, "output CSV")->required();

    BenchmarkArgs bench_args;
    auto* bench_cmd = app.add_subcommand("benchmark", "run a suite of recovery experiments");
    bench_cmd->add_option("--suite", bench_args.suite, "suite JSON")->required();
    bench_cmd->add_option("--trials", bench_args.trials, "trials per entry (overrides the suite)");
    bench_cmd->add_option("--out-dir", bench_args.out_dir, "directory for results.csv and summary.json")
        ->required();
    bench_cmd->add_option("--parallel", bench_args.parallel, "concurrent cells")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--config", bench_args.config, "TrainConfig JSON");
    bench_cmd->add_option("--seed", bench_args.seed, "master seed (overrides the suite)");
    bench_cmd->add_flag("--timings", bench_args.timings, "record wall-clock time per cell");

    ClassifyArgs classify_args;
    auto* classify_cmd = app.add_subcommand("classify", "fit, then report whether the result is a Laurent polynomial");
    add_data_flags(classify_cmd, classify_args);

    EnsembleArgs ens_args;
    auto* ens_cmd = app.add_subcommand("ensemble", "fit, then delegate non-LP data to a secondary solver");
    add_data_flags(ens_cmd, ens_args.base);
    ens_cmd->add_option("--secondary-cmd", ens_args.secondary, "shell command containing {input}");
    ens_cmd->add_option("--timeout", ens_args.timeout_s, "secondary timeout in seconds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    ens_cmd->add_option("--out", ens_args.out, "report JSON path");

    unsigned order = 0;
    unsigned vars = 0;
    auto* ss_cmd = app.add_subcommand("searchspace", "count candidate terms and structures");
    ss_cmd->add_option("--order", order, "maximum absolute exponent")->required();
    ss_cmd->add_option("--vars", vars, "number of variables")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (fit_cmd->parsed()) {
            return cmd_fit(fit_args, out);
        }
        if (gen_cmd->parsed()) {
            return cmd_generate(gen_args, out);
        }
        if (bench_cmd->parsed()) {
            return cmd_benchmark(bench_args, out);
        }
        if (classify_cmd->parsed()) {
            return cmd_classify(classify_args, out);
        }
        if (ens_cmd->parsed()) {
            return cmd_ensemble(ens_args, out, err);
        }
        return cmd_searchspace(order, vars, out);
    } catch (const ExitError& e) {
        err << "error: " << e.what() << '\n';
        return e.code;
    } catch (const std::length_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
}

} // namespace ginnlp
