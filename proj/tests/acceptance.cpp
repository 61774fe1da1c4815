// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ginnlp/bench.hpp"
#include "ginnlp/cli.hpp"
#include "ginnlp/data.hpp"
#include "ginnlp/ensemble.hpp"
#include "ginnlp/laurent.hpp"
#include "ginnlp/network.hpp"
#include "ginnlp/seed.hpp"
#include "ginnlp/trainer.hpp"

#ifndef GINNLP_SOURCE_DIR
#define GINNLP_SOURCE_DIR "."
#endif

using namespace ginnlp;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace tol {
constexpr double kGradRel = 1e-5;
constexpr double kGradFloor = 1e-8;
constexpr double kFdStep = 1e-5;
constexpr double kGradSeconds = 30.0;
constexpr double kExtractRel = 1e-9;
constexpr double kDeskRate = 80.0;
constexpr double kDeskSeconds = 15 * 60.0;
constexpr double kCoeffRtol = 1e-3;
constexpr int kEarlyStopMaxBlocks = 3;
constexpr int kEarlyStopRuns = 4; // of 5
constexpr int kNonLpFalsePositives = 0;
constexpr int kLpTruePositives = 8; // of 10
constexpr double kNoiseR2 = 0.99;
constexpr int kNoiseFixtures = 5; // of 6
constexpr int kIrrelevantRecovered = 3; // of 5
} // namespace tol

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

double rel_err(double a, double b)
{
    const double scale = std::max({ std::abs(a), std::abs(b), 1e-300 });
    return std::abs(a - b) / scale;
}

NetworkParams random_params(std::mt19937_64& rng, std::size_t nvars, std::size_t blocks, double lim)
{
    std::uniform_real_distribution<double> u(-lim, lim);
    NetworkParams p(nvars);
    for (std::size_t b = 0; b < blocks; ++b) {
        PTABlockParams blk;
        for (std::size_t j = 0; j < nvars; ++j) {
            blk.weights.push_back(u(rng));
        }
        p.blocks.push_back(blk);
        p.output_weights.push_back(u(rng));
    }
    p.output_bias = u(rng);
    return p;
}

// Loss computed from products of powers, independent of the library's log-domain path.
double direct_loss(const NetworkParams& p, const Matrix& x, const std::vector<double>& y, double l1, double l2)
{
    double sse = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double f = p.output_bias;
        for (std::size_t b = 0; b < p.blocks.size(); ++b) {
            double prod = 1.0;
            for (std::size_t j = 0; j < p.nvars; ++j) {
                prod *= std::pow(x(r, j), p.blocks[b].weights[j]);
            }
            f += p.output_weights[b] * prod;
        }
        sse += (f - y[r]) * (f - y[r]);
    }
    double a = 0.0;
    double s = 0.0;
    for (const auto& b : p.blocks) {
        for (double w : b.weights) {
            a += std::abs(w);
            s += w * w;
        }
    }
    for (double c : p.output_weights) {
        a += std::abs(c);
        s += c * c;
    }
    return sse / static_cast<double>(x.rows()) + l1 * a + l2 * s;
}

std::vector<double*> scalars(NetworkParams& p)
{
    std::vector<double*> out;
    for (auto& b : p.blocks) {
        for (auto& w : b.weights) {
            out.push_back(&w);
        }
    }
    for (auto& c : p.output_weights) {
        out.push_back(&c);
    }
    out.push_back(&p.output_bias);
    return out;
}

Outcome gradient_oracle()
{
    const auto start = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> dims(1, 4);
    std::uniform_real_distribution<double> xs(0.5, 3.0);
    std::uniform_real_distribution<double> ys(-5.0, 5.0);
    double worst = 0.0;
    int configs = 0;
    int coords = 0;
    for (; configs < 200; ++configs) {
        const auto nv = static_cast<std::size_t>(dims(rng));
        const auto nb = static_cast<std::size_t>(dims(rng));
        NetworkParams p = random_params(rng, nv, nb, 3.0);
        const std::size_t n = 8;
        Matrix x(n, nv);
        std::vector<double> y(n);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t j = 0; j < nv; ++j) {
                x(r, j) = xs(rng);
            }
            y[r] = ys(rng);
        }
        const double l1 = 1e-4;
        const double l2 = 1e-4;
        auto lg = backward(p, x, y, l1, l2);
        auto ps = scalars(p);
        auto gs = scalars(lg.gradient);
        for (std::size_t k = 0; k < ps.size(); ++k) {
            const double orig = *ps[k];
            *ps[k] = orig + tol::kFdStep;
            const double up = direct_loss(p, x, y, l1, l2);
            *ps[k] = orig - tol::kFdStep;
            const double down = direct_loss(p, x, y, l1, l2);
            *ps[k] = orig;
            const double fd = (up - down) / (2 * tol::kFdStep);
            if (std::abs(fd) > tol::kGradFloor) {
                worst = std::max(worst, rel_err(*gs[k], fd));
                ++coords;
            }
        }
    }
    const double secs = seconds_since(start);
    std::ostringstream d;
    d << configs << " configs, " << coords << " coordinates, max rel err " << worst << ", " << secs << " s";
    return { worst < tol::kGradRel && secs < tol::kGradSeconds && configs >= 100, d.str() };
}

Outcome extraction_equivalence()
{
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<int> nvd(1, 4);
    std::uniform_int_distribution<int> nbd(0, 4);
    std::uniform_real_distribution<double> xs(0.5, 3.0);
    double worst = 0.0;
    int sets = 0;
    for (; sets < 150; ++sets) {
        const auto nv = static_cast<std::size_t>(nvd(rng));
        const NetworkParams p = random_params(rng, nv, static_cast<std::size_t>(nbd(rng)), 3.0);
        const auto eq = extract_equation(p);
        for (int k = 0; k < 50; ++k) {
            std::vector<double> x(nv);
            for (auto& v : x) {
                v = xs(rng);
            }
            worst = std::max(worst, rel_err(forward(p, x).prediction, evaluate(eq, x)));
        }
    }
    std::ostringstream d;
    d << sets << " parameter sets x 50 points, max rel err " << worst;
    return { worst < tol::kExtractRel, d.str() };
}

SuiteSpec desk_suite() { return load_suite(fs::path(GINNLP_SOURCE_DIR) / "suites" / "desk.json"); }

Outcome desk_recovery()
{
    const auto start = Clock::now();
    SuiteSpec suite = desk_suite();
    suite.trials = 5;
    suite.noise_fractions = { 0.0 };
    suite.irrelevant_counts = { 0 };
    TrainConfig cfg;
    cfg.coeff_rtol = tol::kCoeffRtol;
    const auto run = run_suite(suite, cfg);
    const double rate = solution_rate(run.rows);
    const double secs = seconds_since(start);
    std::ostringstream d;
    d << suite.entries.size() << " fixtures x " << suite.trials << " trials, solution rate " << rate << "% (";
    for (const auto& e : rates_by_entry(run.rows)) {
        d << e.entry << " " << e.rate << "% ";
    }
    d << "), " << secs << " s";
    return { rate >= tol::kDeskRate && secs <= tol::kDeskSeconds && suite.entries.size() == 6, d.str() };
}

Outcome early_stop()
{
    const auto gt = parse_equation("3*x1 + 2*x2", 2);
    int ok = 0;
    std::ostringstream d;
    d << "blocks used:";
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto ds = generate(gt, { { kDefaultRange, kDefaultRange }, 10000, 0.0, 0, derive_seed(404, { s }) });
        TrainConfig cfg;
        cfg.master_seed = derive_seed(405, { s });
        const auto r = fit(ds, cfg);
        d << ' ' << r.best.blocks_used;
        ok += r.best.blocks_used <= tol::kEarlyStopMaxBlocks ? 1 : 0;
    }
    d << " (" << ok << "/5 within " << tol::kEarlyStopMaxBlocks << ")";
    return { ok >= tol::kEarlyStopRuns, d.str() };
}

Dataset dataset_from(const std::function<double(const std::vector<double>&)>& f, std::size_t nvars,
                     std::uint64_t seed)
{
    Dataset ds = generate(LaurentPolynomial(nvars), { std::vector<Range>(nvars, kDefaultRange), 10000, 0.0, 0, seed });
    for (std::size_t r = 0; r < ds.size(); ++r) {
        const auto row = ds.inputs.row(r);
        ds.targets[r] = f(std::vector<double>(row.begin(), row.end()));
    }
    ds.clean_targets.reset();
    ds.provenance.reset();
    return ds;
}

Outcome lp_classification()
{
    using V = const std::vector<double>&;
    const std::vector<std::pair<std::string, std::function<double(V)>>> non_lp {
        { "sin(x1)/x2", [](V x) { return std::sin(x[0]) / x[1]; } },
        { "exp(x1)", [](V x) { return std::exp(x[0]); } },
        { "x1^0.5", [](V x) { return std::sqrt(x[0]); } },
        { "x1^0.5*x2", [](V x) { return std::sqrt(x[0]) * x[1]; } },
        { "x1*sin(x2)", [](V x) { return x[0] * std::sin(x[1]); } },
        { "exp(-x1)*x2", [](V x) { return std::exp(-x[0]) * x[1]; } },
        { "x1^1.5", [](V x) { return std::pow(x[0], 1.5); } },
        { "sin(x1*x2)", [](V x) { return std::sin(x[0] * x[1]); } },
        { "x1^2*x2^-0.5", [](V x) { return x[0] * x[0] / std::sqrt(x[1]); } },
        { "exp(x1/x2)", [](V x) { return std::exp(x[0] / x[1]); } },
    };
    const std::vector<std::string> lp { "x1^2*x2^-1", "x1*x2", "3*x1 + 2*x2", "0.5*x1^2", "x1*x2*x3",
                                        "x1^-1", "x1^3", "2*x1*x2^-2", "x1 + x2^2", "0.1591549*x1*x2" };

    int false_pos = 0;
    std::ostringstream d;
    for (std::size_t i = 0; i < non_lp.size(); ++i) {
        const std::size_t nv = non_lp[i].first.find("x2") != std::string::npos ? 2 : 1;
        const auto ds = dataset_from(non_lp[i].second, nv, derive_seed(505, { i }));
        TrainConfig cfg;
        cfg.master_seed = derive_seed(506, { i });
        const auto r = fit(ds, cfg);
        if (classify_lp(r.best.equation, cfg.integer_snap_tol).is_lp) {
            ++false_pos;
            d << "[false positive on " << non_lp[i].first << ": " << print_equation(r.best.equation) << "] ";
        }
    }
    int true_pos = 0;
    for (std::size_t i = 0; i < lp.size(); ++i) {
        const auto nv = max_variable_index(lp[i]);
        const auto gt = parse_equation(lp[i], nv);
        const auto ds = generate(gt, { std::vector<Range>(nv, kDefaultRange), 10000, 0.0, 0, derive_seed(507, { i }) });
        TrainConfig cfg;
        cfg.master_seed = derive_seed(508, { i });
        const auto r = fit(ds, cfg);
        true_pos += classify_lp(r.best.equation, cfg.integer_snap_tol).is_lp ? 1 : 0;
    }
    d << "non-LP flagged LP " << false_pos << "/10, LP flagged LP " << true_pos << "/10";
    return { false_pos <= tol::kNonLpFalsePositives && true_pos >= tol::kLpTruePositives, d.str() };
}

Outcome noise_tolerance()
{
    SuiteSpec suite = desk_suite();
    suite.trials = 1;
    suite.noise_fractions = { 0.1 };
    suite.irrelevant_counts = { 0 };
    suite.master_seed = 606;
    const auto run = run_suite(suite, TrainConfig {});
    int ok = 0;
    std::ostringstream d;
    d << "clean R2:";
    for (const auto& r : run.rows) {
        const double r2 = r.r2_clean.value_or(std::nan(""));
        d << ' ' << r.entry << '=' << r2;
        ok += r2 > tol::kNoiseR2 ? 1 : 0;
    }
    d << " (" << ok << "/" << run.rows.size() << " above " << tol::kNoiseR2 << ")";
    return { ok >= tol::kNoiseFixtures && run.rows.size() == 6, d.str() };
}

Outcome irrelevant_inputs()
{
    SuiteSpec suite = suite_from_json(nlohmann::json::parse(R"({
        "trials": 5, "master_seed": 707, "noise_fractions": [0], "irrelevant_counts": [1],
        "entries": [ { "name": "square-ratio", "equation": "x1^2*x2^-1", "n_points": 10000 } ] })"));
    TrainConfig cfg;
    cfg.coeff_rtol = tol::kCoeffRtol;
    const auto run = run_suite(suite, cfg);
    int ok = 0;
    std::ostringstream d;
    for (const auto& r : run.rows) {
        ok += r.recovered ? 1 : 0;
    }
    d << ok << "/5 seeds recovered x1^2*x2^-1 with one irrelevant input";
    return { ok >= tol::kIrrelevantRecovered, d.str() };
}

// 2^t in hexadecimal: one leading digit followed by t/4 zeros.
std::string pow2_hex(std::uint64_t t)
{
    const char lead[] = { '1', '2', '4', '8' };
    return std::string(1, lead[t % 4]) + std::string(t / 4, '0');
}

std::string pow2_decimal(std::uint64_t t)
{
    std::vector<std::uint32_t> limbs { 1 };
    for (std::uint64_t i = 0; i < t; ++i) {
        std::uint32_t carry = 0;
        for (auto& l : limbs) {
            const std::uint64_t v = std::uint64_t { l } * 2 + carry;
            l = static_cast<std::uint32_t>(v % 1000000000U);
            carry = static_cast<std::uint32_t>(v / 1000000000U);
        }
        if (carry) {
            limbs.push_back(carry);
        }
    }
    std::ostringstream os;
    os << limbs.back();
    for (auto it = limbs.rbegin() + 1; it != limbs.rend(); ++it) {
        const std::string s = std::to_string(*it);
        os << std::string(9 - s.size(), '0') << s;
    }
    return os.str();
}

Outcome search_space_exact()
{
    std::vector<std::vector<std::uint64_t>> c(21, std::vector<std::uint64_t>(21, 0));
    for (unsigned i = 0; i <= 20; ++i) {
        c[i][0] = 1;
        for (unsigned j = 1; j <= i; ++j) {
            c[i][j] = c[i - 1][j - 1] + c[i - 1][j];
        }
    }
    int mismatches = 0;
    int decimal_checked = 0;
    for (unsigned n = 0; n <= 10; ++n) {
        for (unsigned k = 0; k <= 10; ++k) {
            const std::uint64_t t = c[n + k][n];
            const auto r = search_space(n, k);
            bool ok = r.term_count == t;
            ok = ok && r.structure_count.str(0, std::ios_base::hex) == pow2_hex(t);
            if (t <= 3000) {
                ok = ok && r.structure_count.str() == pow2_decimal(t);
                ++decimal_checked;
            }
            mismatches += ok ? 0 : 1;
        }
    }
    const auto small = search_space(2, 2);
    const bool anchor = small.term_count == 6 && small.structure_count == 64;
    std::ostringstream d;
    d << "121 (n,k) pairs, " << mismatches << " mismatches (" << decimal_checked
      << " also checked in decimal), T(2,2)=" << small.term_count << " S=" << small.structure_count;
    return { mismatches == 0 && anchor, d.str() };
}

EquationCandidate make(const std::string& eq, std::size_t nv, double mse, double alpha, int id)
{
    EquationCandidate c;
    c.equation = parse_equation(eq, nv);
    c.mse = mse;
    c.complexity = complexity(c.equation);
    c.symbolic_error = symbolic_error(mse, c.complexity, alpha);
    c.instance_id = id;
    return c;
}

Outcome model_selection()
{
    const std::vector<std::string> eqs { "x1", "x1*x2", "x1^2*x2^-1", "3*x1 + 2*x2", "0.5*x1*x2^2 + 0.5*x1^3",
                                         "x1^-2 - 4*x2 + 1", "0.1*x1*x2*x3" };
    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> mse_dist(0.0, 2.0);
    int pairs = 0;
    int failures = 0;
    for (const auto& a : eqs) {
        for (const auto& b : eqs) {
            const auto ca = complexity(parse_equation(a, 3)).total;
            const auto cb = complexity(parse_equation(b, 3)).total;
            if (ca == cb) {
                continue;
            }
            const double mse = mse_dist(rng);
            // Equal MSE, alpha = 1e-6: the simpler equation must win in either order.
            const std::vector<EquationCandidate> ab { make(a, 3, mse, 1e-6, 0), make(b, 3, mse, 1e-6, 1) };
            const std::vector<EquationCandidate> ba { ab[1], ab[0] };
            const int simpler = ca < cb ? 0 : 1;
            failures += static_cast<int>(select_best(ab)) == simpler ? 0 : 1;
            failures += static_cast<int>(select_best(ba)) == 1 - simpler ? 0 : 1;
            // alpha = 0: plain MSE argmin regardless of complexity.
            const double m2 = mse_dist(rng);
            const std::vector<EquationCandidate> z { make(a, 3, mse, 0.0, 0), make(b, 3, m2, 0.0, 1) };
            if (mse != m2) {
                failures += static_cast<int>(select_best(z)) == (mse < m2 ? 0 : 1) ? 0 : 1;
            }
            ++pairs;
        }
    }
    // Full tie on SE and complexity: the lower instance id wins in any order.
    const std::vector<EquationCandidate> tie { make("x1*x2", 2, 0.3, 1e-6, 5), make("x2*x1", 2, 0.3, 1e-6, 2),
                                               make("x1*x2", 2, 0.3, 1e-6, 7) };
    bool tie_ok = tie[0].complexity.total == tie[1].complexity.total && tie[0].symbolic_error == tie[1].symbolic_error;
    tie_ok = tie_ok && tie[select_best(tie)].instance_id == 2;
    const std::vector<EquationCandidate> tie_rev { tie[2], tie[1], tie[0] };
    tie_ok = tie_ok && tie_rev[select_best(tie_rev)].instance_id == 2;
    std::ostringstream d;
    d << pairs << " constructed pairs, " << failures << " wrong selections, tie-break "
      << (tie_ok ? "deterministic" : "BROKEN");
    return { failures == 0 && tie_ok && pairs > 0, d.str() };
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "ginnlp");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

Outcome determinism()
{
    const fs::path dir = fs::temp_directory_path() / "ginnlp-acceptance-determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto data = (dir / "data.csv").string();
    int codes = cli({ "generate", "--equation", "x1^2*x2^-1 + 0.5*x3", "--n", "4000", "--seed", "11", "--out", data });
    for (const char* name : { "fit-a.json", "fit-b.json" }) {
        codes += cli({ "fit", "--data", data, "--seed", "12", "--out", (dir / name).string() });
    }
    const auto suite = (dir / "suite.json").string();
    std::ofstream(suite) << R"({"master_seed": 13, "noise_fractions": [0, 0.01], "entries": [
        {"name": "ratio", "equation": "x1*x2^-1", "n_points": 2000},
        {"name": "spring", "equation": "0.5*x1^2", "n_points": 2000}]})";
    for (const char* name : { "bench-a", "bench-b" }) {
        codes += cli({ "benchmark", "--suite", suite, "--trials", "1", "--out-dir", (dir / name).string() });
    }
    const bool fit_same = slurp(dir / "fit-a.json") == slurp(dir / "fit-b.json") && !slurp(dir / "fit-a.json").empty();
    const bool csv_same = slurp(dir / "bench-a" / "results.csv") == slurp(dir / "bench-b" / "results.csv");
    const bool sum_same = slurp(dir / "bench-a" / "summary.json") == slurp(dir / "bench-b" / "summary.json");
    std::ostringstream d;
    d << "exit codes sum " << codes << ", fit report " << (fit_same ? "identical" : "DIFFERS") << ", results.csv "
      << (csv_same ? "identical" : "DIFFERS") << ", summary.json " << (sum_same ? "identical" : "DIFFERS");
    return { codes == 0 && fit_same && csv_same && sum_same, d.str() };
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria {
        { "gradient oracle", gradient_oracle },
        { "extraction equivalence", extraction_equivalence },
        { "desk recovery suite", desk_recovery },
        { "early stop on two-term data", early_stop },
        { "LP classification soundness", lp_classification },
        { "noise tolerance", noise_tolerance },
        { "irrelevant-input robustness", irrelevant_inputs },
        { "search-space calculator", search_space_exact },
        { "model selection", model_selection },
        { "determinism", determinism },
    };
    // Optional criterion numbers select a subset.
    std::vector<bool> selected(criteria.size(), argc <= 1);
    for (int i = 1; i < argc; ++i) {
        const int k = std::atoi(argv[i]);
        if (k >= 1 && static_cast<std::size_t>(k) <= criteria.size()) {
            selected[static_cast<std::size_t>(k - 1)] = true;
        }
    }

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!selected[i]) {
            continue;
        }
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = { false, std::string("exception: ") + e.what() };
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ": " << o.detail
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
