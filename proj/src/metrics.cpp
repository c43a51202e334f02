#include "ppdc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include "ppdc/error.hpp"

namespace ppdc {

Telemetry::Telemetry(const Topology& topology) {
    const auto m = topology.num_agents();
    degrees.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        degrees[i] = topology.degree(i);
    }
    multiplies.assign(m, 0);
    messages.assign(m, 0);
    floats_shared.assign(m, 0);
}

void Telemetry::add_consensus(const ConsensusRun& run) {
    if (run.messages.size() != degrees.size()) {
        throw DimensionMismatch("consensus run has a different agent count than the telemetry");
    }
    for (std::size_t i = 0; i < degrees.size(); ++i) {
        messages[i] += run.messages[i];
        floats_shared[i] += run.floats_sent[i];
        multiplies[i] += run.multiplies[i];
    }
    consensus_rounds.push_back(run.rounds);
    if (state_dim == 0) {
        state_dim = run.dim();
    }
}

std::size_t Telemetry::total_rounds() const {
    return std::accumulate(consensus_rounds.begin(), consensus_rounds.end(), std::size_t{0});
}

std::uint64_t Telemetry::expected_messages(std::size_t agent) const {
    return static_cast<std::uint64_t>(degrees.at(agent)) * total_rounds();
}

nlohmann::json Telemetry::to_json() const {
    return {{"degrees", degrees},
            {"messages", messages},
            {"floats_shared", floats_shared},
            {"multiplies", multiplies},
            {"consensus_rounds", consensus_rounds},
            {"outer_iterations", outer_iterations},
            {"floats_per_neighbor_per_round", state_dim}};
}

void Telemetry::write_csv(std::ostream& out) const {
    out << "agent,degree,messages,floats_shared,multiplies\n";
    for (std::size_t i = 0; i < degrees.size(); ++i) {
        out << i << ',' << degrees[i] << ',' << messages[i] << ',' << floats_shared[i] << ',' << multiplies[i]
            << '\n';
    }
}

Telemetry record_telemetry(const Topology& topology, std::span<const ConsensusRun> runs) {
    Telemetry t(topology);
    for (const auto& run : runs) {
        t.add_consensus(run);
    }
    t.outer_iterations = runs.size();
    return t;
}

double sse(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centroids, std::span<const std::size_t> assignments) {
    if (assignments.size() != static_cast<std::size_t>(data.rows())) {
        throw DimensionMismatch("one assignment per observation required");
    }
    double total = 0.0;
    for (Eigen::Index n = 0; n < data.rows(); ++n) {
        const auto c = assignments[static_cast<std::size_t>(n)];
        if (c >= static_cast<std::size_t>(centroids.rows())) {
            throw DimensionMismatch("assignment refers to a missing centroid");
        }
        total += (data.row(n) - centroids.row(static_cast<Eigen::Index>(c))).squaredNorm();
    }
    return total;
}

double sse(const Eigen::MatrixXd& data, const ClusterModel& model) {
    auto labels = hard_assignments(data, model);
    return sse(data, model.centroids, labels);
}

double silhouette(const Eigen::MatrixXd& data, std::span<const std::size_t> assignments) {
    const auto n = static_cast<std::size_t>(data.rows());
    if (assignments.size() != n) {
        throw DimensionMismatch("one assignment per observation required");
    }
    std::map<std::size_t, std::size_t> index;
    for (auto c : assignments) {
        index.emplace(c, index.size());
    }
    if (index.size() < 2) {
        throw DegenerateClustering("silhouette needs at least two populated clusters");
    }
    const auto k = index.size();
    std::vector<std::size_t> label(n);
    std::vector<double> count(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        label[i] = index[assignments[i]];
        count[label[i]] += 1.0;
    }

    double total = 0.0;
    std::vector<double> sums(k);
    for (std::size_t i = 0; i < n; ++i) {
        const auto own = label[i];
        if (count[own] < 2.0) {
            continue;  // singleton scores 0
        }
        Eigen::VectorXd dist = (data.rowwise() - data.row(static_cast<Eigen::Index>(i))).rowwise().norm();
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            sums[label[j]] += dist[static_cast<Eigen::Index>(j)];
        }
        const double a = sums[own] / (count[own] - 1.0);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c != own) {
                b = std::min(b, sums[c] / count[c]);
            }
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) {
            total += (b - a) / denom;
        }
    }
    return total / static_cast<double>(n);
}

std::size_t elbow_index(std::span<const double> sse_curve) {
    if (sse_curve.size() < 3) {
        throw ConfigError("elbow detection needs at least three SSE values");
    }
    std::size_t best = 1;
    double best_diff = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j + 1 < sse_curve.size(); ++j) {
        const double diff = sse_curve[j - 1] - 2.0 * sse_curve[j] + sse_curve[j + 1];
        if (diff > best_diff) {
            best_diff = diff;
            best = j;
        }
    }
    return best;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
            ++j;
        }
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) {
            ranks[order[t]] = r;
        }
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw ConfigError("rank correlation needs two equally long series of at least two values");
    }
    auto ra = average_ranks(a);
    auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) {
        return 0.0;
    }
    return cov / std::sqrt(va * vb);
}

}  // namespace ppdc
