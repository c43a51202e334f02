#include "ppdc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <random>
#include <string_view>

#include "ppdc/error.hpp"

namespace ppdc {

namespace {

// Columns whose spread is this small relative to their level are treated as constant.
constexpr double kConstantColumn = 1e-12;

Eigen::RowVectorXd safe_scale(const Eigen::RowVectorXd& mean, const Eigen::RowVectorXd& variance) {
    Eigen::RowVectorXd scale(variance.size());
    for (Eigen::Index d = 0; d < variance.size(); ++d) {
        const double s = std::sqrt(std::max(variance[d], 0.0));
        scale[d] = s <= kConstantColumn * std::max(1.0, std::abs(mean[d])) ? 1.0 : s;
    }
    return scale;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split_cells(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) {
            return cells;
        }
        start = comma + 1;
    }
}

std::optional<double> parse_cell(std::string_view cell) {
    if (!cell.empty() && cell.front() == '+') {
        cell.remove_prefix(1);
    }
    double v = 0.0;
    const auto* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, v);
    if (cell.empty() || ec != std::errc() || ptr != end) {
        return std::nullopt;
    }
    return v;
}

double bump(double hour, double centre, double width) {
    const double u = (hour - centre) / width;
    return std::exp(-0.5 * u * u);
}

}  // namespace

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& data) const {
    if (!active) {
        return data;
    }
    return (data.rowwise() - mean).array().rowwise() / scale.array();
}

Eigen::MatrixXd Standardization::invert(const Eigen::MatrixXd& data) const {
    if (!active) {
        return data;
    }
    return (data.array().rowwise() * scale.array()).matrix().rowwise() + mean;
}

nlohmann::json Standardization::to_json() const {
    return {{"active", active},
            {"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
            {"scale", std::vector<double>(scale.data(), scale.data() + scale.size())}};
}

Standardization fit_zscore(const Eigen::MatrixXd& data) {
    if (data.rows() == 0) {
        throw DimensionMismatch("cannot standardize an empty dataset");
    }
    Standardization s;
    s.active = true;
    s.mean = data.colwise().mean();
    const Eigen::RowVectorXd variance =
        (data.rowwise() - s.mean).array().square().colwise().sum() / static_cast<double>(data.rows());
    s.scale = safe_scale(s.mean, variance);
    return s;
}

std::size_t Dataset::num_agents() const {
    return owner.empty() ? 0 : *std::max_element(owner.begin(), owner.end()) + 1;
}

std::vector<Eigen::MatrixXd> Dataset::agent_data() const {
    const auto m = num_agents();
    std::vector<std::size_t> counts(m, 0);
    for (auto o : owner) {
        ++counts[o];
    }
    std::vector<Eigen::MatrixXd> parts(m);
    for (std::size_t a = 0; a < m; ++a) {
        parts[a].resize(static_cast<Eigen::Index>(counts[a]), observations.cols());
    }
    for (std::size_t n = 0; n < owner.size(); ++n) {
        parts[owner[n]].row(static_cast<Eigen::Index>(local_id[n])) = observations.row(static_cast<Eigen::Index>(n));
    }
    return parts;
}

Eigen::MatrixXd parse_profiles(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_cells(line);
        std::vector<double> values;
        values.reserve(cells.size());
        bool header = false;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            auto v = parse_cell(cells[c]);
            if (!v) {
                if (rows.empty() && width == 0) {
                    header = true;
                    break;
                }
                throw ParseError(line_no, c + 1);
            }
            if (!std::isfinite(*v)) {
                throw NonFiniteValue(line_no, c + 1);
            }
            values.push_back(*v);
        }
        if (width == 0) {
            width = cells.size();
        } else if (cells.size() != width) {
            throw RaggedRows(line_no, std::min(cells.size(), width) + 1);
        }
        if (!header) {
            rows.push_back(std::move(values));
        }
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
    }
    return out;
}

Dataset load_profiles(const std::string& path, bool standardize_rows) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path);
    }
    Dataset ds;
    ds.observations = parse_profiles(in);
    if (ds.observations.rows() == 0) {
        throw ConfigError(path + " holds no observations");
    }
    if (standardize_rows) {
        standardize(ds);
    }
    return ds;
}

Dataset load_agent_files(std::span<const std::string> paths, bool standardize_rows) {
    std::vector<Eigen::MatrixXd> parts;
    Eigen::Index total = 0;
    for (const auto& p : paths) {
        parts.push_back(load_profiles(p, false).observations);
        if (parts.back().cols() != parts.front().cols()) {
            throw DimensionMismatch(p + " has a different profile length");
        }
        total += parts.back().rows();
    }
    if (parts.empty()) {
        throw ConfigError("no agent files given");
    }
    Dataset ds;
    ds.observations.resize(total, parts.front().cols());
    Eigen::Index row = 0;
    for (std::size_t a = 0; a < parts.size(); ++a) {
        ds.observations.middleRows(row, parts[a].rows()) = parts[a];
        for (Eigen::Index n = 0; n < parts[a].rows(); ++n) {
            ds.owner.push_back(a);
            ds.local_id.push_back(static_cast<std::size_t>(n));
        }
        row += parts[a].rows();
    }
    if (standardize_rows) {
        standardize(ds);
    }
    return ds;
}

Eigen::MatrixXd daily_templates(std::size_t dim) {
    Eigen::MatrixXd t(6, static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < dim; ++j) {
        const double h = 24.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(dim);
        const auto c = static_cast<Eigen::Index>(j);
        t(0, c) = 0.4 + 1.6 * bump(h, 8.0, 1.5);
        t(1, c) = 0.4 + 2.0 * bump(h, 19.0, 2.0);
        t(2, c) = 0.8;
        t(3, c) = 0.3 + 1.2 * bump(h, 7.5, 1.2) + 1.4 * bump(h, 19.5, 1.5);
        t(4, c) = 0.3 + 1.8 * (bump(h, 2.0, 2.5) + bump(h, 26.0, 2.5));
        t(5, c) = 0.3 + 1.5 * bump(h, 13.0, 3.0);
    }
    return t;
}

std::vector<ComponentSpec> template_components(std::size_t components, std::size_t per_component, std::size_t dim,
                                               double spread) {
    const auto base = daily_templates(dim);
    std::vector<ComponentSpec> specs;
    for (std::size_t c = 0; c < components; ++c) {
        // Beyond six shapes, reuse them at a larger amplitude.
        const double gain = 1.0 + 0.5 * static_cast<double>(c / 6);
        specs.push_back({gain * base.row(static_cast<Eigen::Index>(c % 6)), spread, per_component});
    }
    return specs;
}

Dataset synth_profiles(std::span<const ComponentSpec> components, std::uint64_t seed) {
    if (components.empty()) {
        throw ConfigError("at least one component is required");
    }
    const auto dim = components.front().mean.size();
    Eigen::Index total = 0;
    for (const auto& c : components) {
        if (c.count == 0) {
            throw ConfigError("component counts must be positive");
        }
        if (c.mean.size() != dim) {
            throw DimensionMismatch("component shapes differ in length");
        }
        total += static_cast<Eigen::Index>(c.count);
    }
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Dataset ds;
    ds.observations.resize(total, dim);
    Eigen::Index row = 0;
    for (std::size_t c = 0; c < components.size(); ++c) {
        for (std::size_t n = 0; n < components[c].count; ++n, ++row) {
            for (Eigen::Index d = 0; d < dim; ++d) {
                ds.observations(row, d) = components[c].mean[d] + components[c].spread * normal(engine);
            }
            ds.labels.push_back(c);
        }
    }
    return ds;
}

void standardize(Dataset& dataset) {
    dataset.standardization = fit_zscore(dataset.observations);
    dataset.observations = dataset.standardization.apply(dataset.observations);
}

PartitionPolicy parse_partition_policy(const std::string& name) {
    if (name == "equal") return PartitionPolicy::equal;
    if (name == "proportions") return PartitionPolicy::proportions;
    if (name == "by-file") return PartitionPolicy::by_file;
    throw ConfigError("unknown partition policy '" + name + "'");
}

std::string to_string(PartitionPolicy policy) {
    switch (policy) {
        case PartitionPolicy::equal: return "equal";
        case PartitionPolicy::proportions: return "proportions";
        case PartitionPolicy::by_file: return "by-file";
    }
    return "equal";
}

namespace {

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 engine(seed);
    for (std::size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[engine() % i]);
    }
    return order;
}

Ownership assign_counts(const std::vector<std::size_t>& order, std::vector<std::size_t> counts) {
    Ownership own;
    own.owner.assign(order.size(), 0);
    own.local_id.assign(order.size(), 0);
    own.counts = counts;
    // Each agent receives a contiguous slice of the shuffled order, kept in
    // ascending observation index.
    std::size_t pos = 0;
    for (std::size_t a = 0; a < counts.size(); ++a) {
        std::vector<std::size_t> slice(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                       order.begin() + static_cast<std::ptrdiff_t>(pos + counts[a]));
        std::sort(slice.begin(), slice.end());
        for (std::size_t l = 0; l < slice.size(); ++l) {
            own.owner[slice[l]] = a;
            own.local_id[slice[l]] = l;
        }
        pos += counts[a];
    }
    return own;
}

}  // namespace

Ownership partition_equal(std::size_t n, std::size_t agents, std::uint64_t seed) {
    if (agents == 0 || n < agents) {
        throw InfeasiblePolicy("equal partition needs at least one observation per agent (N=" + std::to_string(n) +
                               ", M=" + std::to_string(agents) + ")");
    }
    std::vector<std::size_t> counts(agents, n / agents);
    for (std::size_t a = 0; a < n % agents; ++a) {
        ++counts[a];
    }
    return assign_counts(shuffled(n, seed), counts);
}

Ownership partition_proportions(std::size_t n, std::span<const double> proportions, std::uint64_t seed) {
    if (proportions.empty()) {
        throw InfeasiblePolicy("no proportions given");
    }
    double total = 0.0;
    for (double p : proportions) {
        if (!(p > 0.0) || !std::isfinite(p)) {
            throw InfeasiblePolicy("proportions must be positive and finite");
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw InfeasiblePolicy("proportions must sum to 1");
    }
    const auto m = proportions.size();
    std::vector<std::size_t> counts(m);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t a = 0; a < m; ++a) {
        const double exact = proportions[a] * static_cast<double>(n);
        counts[a] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        assigned += counts[a];
        remainders.emplace_back(exact - static_cast<double>(counts[a]), a);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    for (std::size_t r = 0; assigned < n; ++r, ++assigned) {
        ++counts[remainders[r % m].second];
    }
    for (auto c : counts) {
        if (c == 0) {
            throw InfeasiblePolicy("a proportion rounds to zero observations");
        }
    }
    return assign_counts(shuffled(n, seed), counts);
}

Ownership partition_by_owner(std::span<const std::size_t> owner, std::size_t agents) {
    Ownership own;
    own.counts.assign(agents, 0);
    for (auto o : owner) {
        if (o >= agents) {
            throw InfeasiblePolicy("owner " + std::to_string(o) + " exceeds the agent count");
        }
        own.owner.push_back(o);
        own.local_id.push_back(own.counts[o]++);
    }
    for (std::size_t a = 0; a < agents; ++a) {
        if (own.counts[a] == 0) {
            throw InfeasiblePolicy("agent " + std::to_string(a) + " owns no observations");
        }
    }
    return own;
}

void apply_ownership(Dataset& dataset, const Ownership& ownership) {
    if (ownership.owner.size() != dataset.size()) {
        throw DimensionMismatch("ownership does not cover the dataset");
    }
    dataset.owner = ownership.owner;
    dataset.local_id = ownership.local_id;
}

std::vector<Standardization> distributed_standardization(const Topology& topology,
                                                         std::span<const Eigen::MatrixXd> agent_data,
                                                         const DisturbanceParams& disturbance,
                                                         const ConsensusOptions& options) {
    const auto m = topology.num_agents();
    if (agent_data.size() != m) {
        throw DimensionMismatch("one data block per agent required");
    }
    const auto dim = agent_data.front().cols();
    const double scale = static_cast<double>(m);

    Eigen::MatrixXd first(static_cast<Eigen::Index>(m), dim + 1);
    for (std::size_t a = 0; a < m; ++a) {
        first.row(static_cast<Eigen::Index>(a)) << agent_data[a].colwise().sum(),
            static_cast<double>(agent_data[a].rows());
    }
    const Eigen::MatrixXd sums = run_consensus(Variant::pp_aac, topology, first, disturbance, options).final_state * scale;

    std::vector<Standardization> out(m);
    Eigen::MatrixXd second(static_cast<Eigen::Index>(m), dim);
    for (std::size_t a = 0; a < m; ++a) {
        const auto r = static_cast<Eigen::Index>(a);
        out[a].active = true;
        out[a].mean = sums.row(r).head(dim) / sums(r, dim);
        second.row(r) = (agent_data[a].rowwise() - out[a].mean).array().square().colwise().sum();
    }
    DisturbanceParams again = disturbance;
    again.seed = disturbance.seed ^ 0x9e3779b97f4a7c15ULL;
    const Eigen::MatrixXd squares = run_consensus(Variant::pp_aac, topology, second, again, options).final_state * scale;
    for (std::size_t a = 0; a < m; ++a) {
        const auto r = static_cast<Eigen::Index>(a);
        out[a].scale = safe_scale(out[a].mean, squares.row(r) / sums(r, dim));
    }
    return out;
}

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    if (a.size() != b.size()) {
        throw DimensionMismatch("labelings differ in length");
    }
    std::map<std::pair<std::size_t, std::size_t>, double> table;
    std::map<std::size_t, double> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        table[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    auto pairs = [](double n) { return 0.5 * n * (n - 1.0); };
    double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [_, n] : table) index += pairs(n);
    for (const auto& [_, n] : rows) sum_rows += pairs(n);
    for (const auto& [_, n] : cols) sum_cols += pairs(n);
    const double expected = sum_rows * sum_cols / pairs(static_cast<double>(a.size()));
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) {
        return 1.0;
    }
    return (index - expected) / (max_index - expected);
}

}  // namespace ppdc
