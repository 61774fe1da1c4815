#include "ginnlp/data.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "ginnlp/errors.hpp"
#include "ginnlp/seed.hpp"

namespace ginnlp {

namespace {

    void check_ranges(const std::vector<Range>& ranges)
    {
        for (std::size_t j = 0; j < ranges.size(); ++j) {
            const auto& r = ranges[j];
            if (!(r.low > 0.0) || !(r.high > r.low) || !std::isfinite(r.high)) {
                throw DataError("invalid sampling range for x" + std::to_string(j + 1) + ": (" + format_number(r.low)
                                + ", " + format_number(r.high) + ")");
            }
        }
    }

    std::vector<std::string> split_fields(const std::string& line)
    {
        std::vector<std::string> out;
        std::string field;
        std::istringstream ss(line);
        while (std::getline(ss, field, ',')) {
            out.push_back(field);
        }
        if (!line.empty() && line.back() == ',') {
            out.emplace_back();
        }
        return out;
    }

    std::string trim(std::string s)
    {
        auto not_space = [](unsigned char c) { return !std::isspace(c); };
        s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
        s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
        return s;
    }

    std::string format_csv_value(double v)
    {
        std::array<char, 64> buf {};
        auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
        if (ec != std::errc()) {
            throw DataError("cannot format value");
        }
        return { buf.data(), ptr };
    }

} // namespace

void Dataset::validate() const
{
    if (inputs.rows() == 0 || inputs.cols() == 0) {
        throw DataError("dataset must have at least one row and one input column");
    }
    if (targets.size() != inputs.rows()) {
        throw DataError("target length does not match input rows");
    }
    if (!column_names.empty() && column_names.size() != inputs.cols()) {
        throw DataError("column name count does not match input columns");
    }
    for (std::size_t r = 0; r < inputs.rows(); ++r) {
        for (std::size_t c = 0; c < inputs.cols(); ++c) {
            const double v = inputs(r, c);
            if (!std::isfinite(v) || !(v > 0.0)) {
                throw DataError("input at row " + std::to_string(r) + ", column "
                                + (column_names.empty() ? std::to_string(c) : column_names[c])
                                + " must be positive and finite");
            }
        }
        if (!std::isfinite(targets[r])) {
            throw DataError("non-finite target at row " + std::to_string(r));
        }
    }
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const
{
    Dataset out;
    out.inputs = inputs.select_rows(rows);
    out.targets.reserve(rows.size());
    for (auto r : rows) {
        out.targets.push_back(targets[r]);
    }
    if (clean_targets) {
        std::vector<double> clean;
        clean.reserve(rows.size());
        for (auto r : rows) {
            clean.push_back((*clean_targets)[r]);
        }
        out.clean_targets = std::move(clean);
    }
    out.column_names = column_names;
    out.target_name = target_name;
    out.provenance = provenance;
    return out;
}

Dataset generate(const LaurentPolynomial& gt, const SamplingSpec& spec)
{
    if (spec.ranges.size() != gt.nvars()) {
        throw DataError("equation has " + std::to_string(gt.nvars()) + " variables but "
                        + std::to_string(spec.ranges.size()) + " sampling ranges were given");
    }
    check_ranges(spec.ranges);
    if (spec.n_points == 0) {
        throw DataError("n_points must be positive");
    }
    if (!(spec.noise_fraction >= 0.0)) {
        throw DataError("noise fraction must be non-negative");
    }

    const std::size_t d = gt.nvars();
    Dataset ds;
    ds.inputs = Matrix(spec.n_points, d);
    std::mt19937_64 rng(derive_seed(spec.seed, { 0 }));
    for (std::size_t r = 0; r < spec.n_points; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
            std::uniform_real_distribution<double> dist(spec.ranges[c].low, spec.ranges[c].high);
            ds.inputs(r, c) = dist(rng);
        }
    }
    for (std::size_t c = 0; c < d; ++c) {
        ds.column_names.push_back("x" + std::to_string(c + 1));
    }

    std::vector<double> clean(spec.n_points);
    for (std::size_t r = 0; r < spec.n_points; ++r) {
        clean[r] = evaluate(gt, ds.inputs.row(r));
    }
    ds.targets = add_noise(clean, spec.noise_fraction, derive_seed(spec.seed, { 1 }));
    ds.clean_targets = std::move(clean);
    ds.provenance = Provenance { print_equation(gt), spec.ranges, spec.noise_fraction, 0, spec.seed };

    if (spec.irrelevant_inputs > 0) {
        ds = add_irrelevant(ds, spec.irrelevant_inputs, spec.ranges, derive_seed(spec.seed, { 2 }));
    }
    ds.validate();
    return ds;
}

std::vector<double> add_noise(const std::vector<double>& targets, double noise_fraction, std::uint64_t seed)
{
    if (!(noise_fraction >= 0.0)) {
        throw DataError("noise fraction must be non-negative");
    }
    if (noise_fraction == 0.0 || targets.empty()) {
        return targets;
    }
    const double ms = std::transform_reduce(targets.begin(), targets.end(), 0.0, std::plus<>(),
                                            [](double v) { return v * v; })
        / static_cast<double>(targets.size());
    const double sigma = noise_fraction * std::sqrt(ms);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<double> out = targets;
    for (auto& y : out) {
        y += noise(rng);
    }
    return out;
}

Dataset add_irrelevant(const Dataset& dataset, std::size_t count, const std::vector<Range>& ranges, std::uint64_t seed)
{
    if (count == 0) {
        return dataset;
    }
    if (ranges.empty()) {
        throw DataError("irrelevant inputs need at least one sampling range");
    }
    check_ranges(ranges);
    double lo = ranges.front().low;
    double hi = ranges.front().high;
    for (const auto& r : ranges) {
        lo = std::min(lo, r.low);
        hi = std::max(hi, r.high);
    }

    const std::size_t d = dataset.dims();
    Dataset out = dataset;
    out.inputs = Matrix(dataset.size(), d + count);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (std::size_t r = 0; r < dataset.size(); ++r) {
        auto src = dataset.inputs.row(r);
        auto dst = out.inputs.row(r);
        std::copy(src.begin(), src.end(), dst.begin());
        for (std::size_t k = 0; k < count; ++k) {
            dst[d + k] = dist(rng);
        }
    }
    std::size_t existing = 0;
    for (const auto& name : dataset.column_names) {
        existing += (!name.empty() && name.front() == 'z') ? 1 : 0;
    }
    for (std::size_t k = 0; k < count; ++k) {
        out.column_names.push_back("z" + std::to_string(existing + k + 1));
    }
    if (out.provenance) {
        out.provenance->irrelevant_count += count;
    }
    return out;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& target)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("empty CSV file", 1);
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    auto header = split_fields(line);
    for (auto& h : header) {
        h = trim(h);
    }
    const auto target_it = std::find(header.begin(), header.end(), target);
    if (target_it == header.end()) {
        throw DataError("missing target column '" + target + "'", 1);
    }
    const std::size_t target_col = static_cast<std::size_t>(target_it - header.begin());
    if (header.size() < 2) {
        throw DataError("CSV needs at least one input column", 1);
    }

    Dataset ds;
    ds.target_name = target;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c != target_col) {
            ds.column_names.push_back(header[c]);
        }
    }
    const std::size_t d = ds.column_names.size();

    std::vector<double> values;
    std::size_t line_no = 1;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (trim(line).empty()) {
            continue;
        }
        auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size())
                                + " fields, found " + std::to_string(fields.size()),
                            line_no);
        }
        double y = 0.0;
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const std::string f = trim(fields[c]);
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (f.empty() || ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
                throw DataError("line " + std::to_string(line_no) + ": cannot parse '" + f + "' in column "
                                    + header[c],
                                line_no);
            }
            if (c == target_col) {
                y = v;
                continue;
            }
            if (!(v > 0.0)) {
                throw DataError("line " + std::to_string(line_no) + " (row " + std::to_string(row) + "): input "
                                    + header[c] + " must be positive, got " + f,
                                line_no);
            }
            values.push_back(v);
        }
        ds.targets.push_back(y);
        ++row;
    }
    if (row == 0) {
        throw DataError("CSV has no data rows", line_no);
    }
    ds.inputs = Matrix(row, d);
    std::copy(values.begin(), values.end(), ds.inputs.data().begin());
    ds.validate();
    return ds;
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    for (std::size_t c = 0; c < dataset.dims(); ++c) {
        out << (c < dataset.column_names.size() ? dataset.column_names[c] : "x" + std::to_string(c + 1)) << ',';
    }
    out << dataset.target_name << '\n';
    for (std::size_t r = 0; r < dataset.size(); ++r) {
        for (double v : dataset.inputs.row(r)) {
            out << format_csv_value(v) << ',';
        }
        out << format_csv_value(dataset.targets[r]) << '\n';
    }
    if (!out) {
        throw DataError("failed writing " + path.string());
    }
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double fraction,
                                                                            std::uint64_t seed)
{
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw DataError("split fraction must lie in (0, 1)");
    }
    const auto first = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (first == 0 || first >= n) {
        throw DataError("degenerate split: " + std::to_string(n) + " rows at fraction " + format_number(fraction));
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t { 0 });
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::size_t> a(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(first));
    std::vector<std::size_t> b(perm.begin() + static_cast<std::ptrdiff_t>(first), perm.end());
    return { std::move(a), std::move(b) };
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double fraction, std::uint64_t seed)
{
    auto [a, b] = split_indices(dataset.size(), fraction, seed);
    return { dataset.subset(a), dataset.subset(b) };
}

nlohmann::json provenance_to_json(const Provenance& p)
{
    nlohmann::json ranges = nlohmann::json::array();
    for (const auto& r : p.ranges) {
        ranges.push_back({ r.low, r.high });
    }
    return {
        { "equation", p.equation },
        { "ranges", ranges },
        { "noise_fraction", p.noise_fraction },
        { "irrelevant_count", p.irrelevant_count },
        { "seed", p.seed },
    };
}

} // namespace ginnlp
