#include "ginnlp/bench.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <thread>

#include "ginnlp/errors.hpp"
#include "ginnlp/seed.hpp"

namespace ginnlp {

namespace {

    std::vector<Range> parse_ranges(const nlohmann::json& j, std::size_t nvars)
    {
        auto pair = [](const nlohmann::json& p) {
            if (!p.is_array() || p.size() != 2) {
                throw ConfigError("a range must be a [low, high] pair");
            }
            return Range { p[0].get<double>(), p[1].get<double>() };
        };
        if (j.is_array() && j.size() == 2 && j[0].is_number()) {
            return std::vector<Range>(nvars, pair(j));
        }
        if (!j.is_array() || j.size() != nvars) {
            throw ConfigError("expected " + std::to_string(nvars) + " ranges");
        }
        std::vector<Range> out;
        for (const auto& p : j) {
            out.push_back(pair(p));
        }
        return out;
    }

    double median(std::vector<double> v)
    {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }

    std::string fmt(double v)
    {
        if (std::isnan(v)) {
            return "";
        }
        std::array<char, 64> buf {};
        auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
        return ec == std::errc() ? std::string(buf.data(), ptr) : std::string();
    }

    std::string csv_field(const std::string& s)
    {
        if (s.find_first_of(",\"\n") == std::string::npos) {
            return s;
        }
        std::string out = "\"";
        for (char c : s) {
            if (c == '"') {
                out += '"';
            }
            out += c;
        }
        return out + '"';
    }

    nlohmann::json num_or_null(double v)
    {
        return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
    }

    nlohmann::json group_summary(std::span<const TrialResult> rows)
    {
        std::size_t r2_hits = 0;
        std::size_t clean_hits = 0;
        std::size_t clean_total = 0;
        for (const auto& r : rows) {
            r2_hits += r.r2_test > 0.99 ? 1 : 0;
            if (r.r2_clean) {
                ++clean_total;
                clean_hits += *r.r2_clean > 0.99 ? 1 : 0;
            }
        }
        const auto trial_rates = per_trial_rates(rows);
        nlohmann::json j {
            { "cells", rows.size() },
            { "solution_rate", solution_rate(rows) },
            { "r2_gt_099_accuracy", 100.0 * static_cast<double>(r2_hits) / static_cast<double>(rows.size()) },
            { "trial_rates",
              { { "min", *std::min_element(trial_rates.begin(), trial_rates.end()) },
                { "median", median(trial_rates) },
                { "mean", std::accumulate(trial_rates.begin(), trial_rates.end(), 0.0)
                      / static_cast<double>(trial_rates.size()) },
                { "max", *std::max_element(trial_rates.begin(), trial_rates.end()) } } },
        };
        if (clean_total > 0) {
            j["r2_clean_gt_099_accuracy"] = 100.0 * static_cast<double>(clean_hits) / static_cast<double>(clean_total);
        }
        return j;
    }

} // namespace

void SuiteSpec::validate() const
{
    if (trials < 1) {
        throw ConfigError("trials must be >= 1");
    }
    if (entries.empty()) {
        throw ConfigError("suite has no entries");
    }
    if (noise_fractions.empty() || irrelevant_counts.empty()) {
        throw ConfigError("noise_fractions and irrelevant_counts must be non-empty");
    }
    for (double n : noise_fractions) {
        if (!(n >= 0.0)) {
            throw ConfigError("noise fractions must be >= 0");
        }
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ConfigError("train_fraction must lie in (0, 1)");
    }
    for (const auto& e : entries) {
        if (e.ground_truth.nvars() != e.ranges.size()) {
            throw ConfigError("entry '" + e.name + "': range count does not match variable count");
        }
        for (const auto& r : e.ranges) {
            if (!(r.low > 0.0 && r.high > r.low)) {
                throw ConfigError("entry '" + e.name + "': ranges must satisfy 0 < low < high");
            }
        }
        if (e.n_points < 8) {
            throw ConfigError("entry '" + e.name + "': n_points too small");
        }
    }
}

SuiteSpec suite_from_json(const nlohmann::json& j)
{
    SuiteSpec s;
    try {
        if (!j.is_object() || !j.contains("entries")) {
            throw ConfigError("suite must be an object with an 'entries' array");
        }
        if (j.contains("trials")) {
            s.trials = j.at("trials").get<int>();
        }
        if (j.contains("master_seed")) {
            s.master_seed = j.at("master_seed").get<std::uint64_t>();
        }
        if (j.contains("noise_fractions")) {
            s.noise_fractions = j.at("noise_fractions").get<std::vector<double>>();
        }
        if (j.contains("irrelevant_counts")) {
            s.irrelevant_counts = j.at("irrelevant_counts").get<std::vector<std::size_t>>();
        }
        if (j.contains("train_fraction")) {
            s.train_fraction = j.at("train_fraction").get<double>();
        }
        for (const auto& e : j.at("entries")) {
            SuiteEntry entry;
            entry.name = e.at("name").get<std::string>();
            entry.equation = e.at("equation").get<std::string>();
            const std::size_t nvars
                = e.contains("nvars") ? e.at("nvars").get<std::size_t>() : max_variable_index(entry.equation);
            if (nvars == 0) {
                throw ConfigError("entry '" + entry.name + "' has no variables");
            }
            entry.ground_truth = parse_equation(entry.equation, nvars);
            entry.ranges = e.contains("ranges") ? parse_ranges(e.at("ranges"), nvars)
                                                : std::vector<Range>(nvars, kDefaultRange);
            if (e.contains("n_points")) {
                entry.n_points = e.at("n_points").get<std::size_t>();
            }
            s.entries.push_back(std::move(entry));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad suite document: ") + e.what());
    }
    s.validate();
    return s;
}

SuiteSpec load_suite(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open suite " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("suite is not valid JSON: ") + e.what());
    }
    return suite_from_json(j);
}

double r_squared(std::span<const double> y_true, std::span<const double> y_pred)
{
    if (y_true.empty() || y_true.size() != y_pred.size()) {
        throw Error("r_squared needs equal, non-zero lengths");
    }
    const double mean = std::accumulate(y_true.begin(), y_true.end(), 0.0) / static_cast<double>(y_true.size());
    double ss_tot = 0.0;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
        ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    }
    if (ss_tot == 0.0) {
        throw Error("r_squared is undefined for a constant target");
    }
    return 1.0 - ss_res / ss_tot;
}

std::vector<double> per_trial_rates(std::span<const TrialResult> results)
{
    std::map<int, std::pair<std::size_t, std::size_t>> by_trial; // trial -> (recovered, total)
    for (const auto& r : results) {
        auto& [hit, total] = by_trial[r.trial];
        hit += r.recovered ? 1 : 0;
        ++total;
    }
    std::vector<double> rates;
    for (const auto& [_, ht] : by_trial) {
        rates.push_back(100.0 * static_cast<double>(ht.first) / static_cast<double>(ht.second));
    }
    return rates;
}

double solution_rate(std::span<const TrialResult> results, Aggregation agg)
{
    if (results.empty()) {
        throw Error("solution rate of an empty result set");
    }
    if (agg == Aggregation::Overall) {
        const auto hits = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.recovered; });
        return 100.0 * static_cast<double>(hits) / static_cast<double>(results.size());
    }
    const auto rates = per_trial_rates(results);
    switch (agg) {
    case Aggregation::MinAcrossTrials:
        return *std::min_element(rates.begin(), rates.end());
    case Aggregation::MaxAcrossTrials:
        return *std::max_element(rates.begin(), rates.end());
    case Aggregation::MedianAcrossTrials:
        return median(rates);
    default:
        return std::accumulate(rates.begin(), rates.end(), 0.0) / static_cast<double>(rates.size());
    }
}

std::vector<EntryRate> rates_by_entry(std::span<const TrialResult> results)
{
    std::map<std::string, std::tuple<int, std::size_t, std::size_t>> by_entry;
    for (const auto& r : results) {
        auto& [cx, hit, total] = by_entry[r.entry];
        cx = r.gt_complexity;
        hit += r.recovered ? 1 : 0;
        ++total;
    }
    std::vector<EntryRate> out;
    for (const auto& [name, v] : by_entry) {
        const auto& [cx, hit, total] = v;
        out.push_back({ name, cx, 100.0 * static_cast<double>(hit) / static_cast<double>(total) });
    }
    return out;
}

std::vector<double> default_complexity_edges()
{
    return { 0, 3, 6, 9, 12, 15, std::numeric_limits<double>::infinity() };
}

std::vector<ComplexityBin> complexity_binning(std::span<const TrialResult> results, const std::vector<double>& edges)
{
    for (std::size_t k = 1; k < edges.size(); ++k) {
        if (!(edges[k] > edges[k - 1])) {
            throw Error("bin edges must be strictly increasing");
        }
    }
    std::vector<ComplexityBin> bins;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
        bins.push_back({ edges[k], edges[k + 1], std::nullopt, 0 });
    }
    std::vector<double> sums(bins.size(), 0.0);
    for (const auto& e : rates_by_entry(results)) {
        for (std::size_t k = 0; k < bins.size(); ++k) {
            if (e.gt_complexity > bins[k].low && e.gt_complexity <= bins[k].high) {
                sums[k] += e.rate;
                ++bins[k].entries;
                break;
            }
        }
    }
    for (std::size_t k = 0; k < bins.size(); ++k) {
        if (bins[k].entries > 0) {
            bins[k].mean_rate = sums[k] / static_cast<double>(bins[k].entries);
        }
    }
    return bins;
}

TrialResult run_cell(const SuiteSpec& suite, std::size_t entry_idx, int trial, std::size_t noise_idx,
                     std::size_t irrelevant_idx, const TrainConfig& config,
                     const std::optional<SecondaryAdapter>& adapter, unsigned fit_threads)
{
    const auto& entry = suite.entries.at(entry_idx);
    TrialResult row;
    row.entry = entry.name;
    row.entry_index = entry_idx;
    row.trial = trial;
    row.noise = suite.noise_fractions.at(noise_idx);
    row.irrelevant = suite.irrelevant_counts.at(irrelevant_idx);
    row.gt_complexity = complexity(entry.ground_truth).total;

    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t seed = derive_seed(suite.master_seed,
                                           { entry_idx, static_cast<std::uint64_t>(trial), noise_idx, irrelevant_idx });
    try {
        SamplingSpec spec { entry.ranges, entry.n_points, row.noise, row.irrelevant, derive_seed(seed, { 0 }) };
        const Dataset ds = generate(entry.ground_truth, spec);
        auto [train, test] = split(ds, suite.train_fraction, derive_seed(seed, { 1 }));

        TrainConfig cfg = config;
        cfg.master_seed = derive_seed(seed, { 2 });
        FitReport report = fit(train, cfg, fit_threads);
        EnsembleReport routed = route(train, std::move(report), cfg, adapter);
        const auto& best = routed.ginn.best;

        row.lp_verdict = routed.verdict.is_lp;
        row.complexity = best.complexity.total;
        row.blocks = best.blocks_used;
        row.equation = routed.path == EnsemblePath::Rejected ? print_equation(best.equation) : routed.output;
        if (routed.ginn.error) {
            row.error = *routed.ginn.error;
        }

        std::vector<double> pred(test.size());
        for (std::size_t r = 0; r < test.size(); ++r) {
            pred[r] = evaluate(best.equation, test.inputs.row(r));
        }
        double sse = 0.0;
        for (std::size_t r = 0; r < test.size(); ++r) {
            sse += (pred[r] - test.targets[r]) * (pred[r] - test.targets[r]);
        }
        row.mse_test = sse / static_cast<double>(test.size());
        row.r2_test = r_squared(test.targets, pred);
        if (test.clean_targets) {
            row.r2_clean = r_squared(*test.clean_targets, pred);
        }

        const auto truth = entry.ground_truth.widened(ds.dims());
        row.recovered = row.lp_verdict && equals_exact(routed.verdict.snapped, truth, config.coeff_rtol);
    } catch (const std::exception& e) {
        row.recovered = false;
        row.error = e.what();
    }
    row.wall_ms
        = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    return row;
}

SuiteRun run_suite(const SuiteSpec& suite, const TrainConfig& config, const std::optional<SecondaryAdapter>& adapter,
                   const SuiteOptions& options)
{
    suite.validate();
    config.validate();

    struct Cell {
        std::size_t entry;
        int trial;
        std::size_t noise;
        std::size_t irrelevant;
    };
    std::vector<Cell> cells;
    for (std::size_t e = 0; e < suite.entries.size(); ++e) {
        for (int t = 0; t < suite.trials; ++t) {
            for (std::size_t n = 0; n < suite.noise_fractions.size(); ++n) {
                for (std::size_t i = 0; i < suite.irrelevant_counts.size(); ++i) {
                    cells.push_back({ e, t, n, i });
                }
            }
        }
    }

    SuiteRun run;
    run.rows.resize(cells.size());
    const unsigned workers = std::max(1U, std::min<unsigned>(options.parallel, static_cast<unsigned>(cells.size())));
    const unsigned fit_threads = workers > 1 ? 1 : 0;
    std::atomic<std::size_t> next { 0 };
    auto work = [&] {
        for (std::size_t k = next++; k < cells.size(); k = next++) {
            const auto& c = cells[k];
            run.rows[k] = run_cell(suite, c.entry, c.trial, c.noise, c.irrelevant, config, adapter, fit_threads);
            if (!options.include_timing) {
                run.rows[k].wall_ms = 0;
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }

    run.summary = summarize(run.rows);
    return run;
}

nlohmann::json summarize(std::span<const TrialResult> rows)
{
    if (rows.empty()) {
        return { { "cells", 0 } };
    }
    nlohmann::json j = group_summary(rows);

    std::map<std::pair<double, std::size_t>, std::vector<TrialResult>> sweeps;
    for (const auto& r : rows) {
        sweeps[{ r.noise, r.irrelevant }].push_back(r);
    }
    nlohmann::json sweep_rows = nlohmann::json::array();
    for (const auto& [key, group] : sweeps) {
        auto g = group_summary(group);
        g["noise"] = key.first;
        g["irrelevant"] = key.second;
        sweep_rows.push_back(std::move(g));
    }
    j["sweeps"] = std::move(sweep_rows);

    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : rates_by_entry(rows)) {
        entries.push_back({ { "entry", e.entry }, { "complexity", e.gt_complexity }, { "solution_rate", e.rate } });
    }
    j["entries"] = std::move(entries);

    nlohmann::json bins = nlohmann::json::array();
    for (const auto& b : complexity_binning(rows)) {
        nlohmann::json bj { { "low", b.low }, { "high", num_or_null(b.high) }, { "entries", b.entries } };
        if (b.mean_rate) {
            bj["mean_solution_rate"] = *b.mean_rate;
        }
        bins.push_back(std::move(bj));
    }
    j["complexity_bins"] = std::move(bins);
    return j;
}

void write_results_csv(std::span<const TrialResult> rows, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << "entry,trial,noise,irrelevant,recovered,r2_test,r2_clean,mse_test,complexity,blocks,wall_ms,equation\n";
    for (const auto& r : rows) {
        out << csv_field(r.entry) << ',' << r.trial << ',' << fmt(r.noise) << ',' << r.irrelevant << ','
            << (r.recovered ? 1 : 0) << ',' << fmt(r.r2_test) << ',' << (r.r2_clean ? fmt(*r.r2_clean) : "") << ','
            << fmt(r.mse_test) << ',' << r.complexity << ',' << r.blocks << ',' << r.wall_ms << ','
            << csv_field(r.equation) << '\n';
    }
}

} // namespace ginnlp
