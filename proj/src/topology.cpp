#include "ppdc/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <set>

#include "ppdc/error.hpp"

namespace ppdc {

Topology Topology::build(std::size_t num_agents, std::span<const Edge> edges) {
    if (num_agents == 0) {
        throw InvalidEdge("topology needs at least one agent");
    }
    Topology t;
    t.neighbors_.resize(num_agents);
    std::set<Edge> seen;
    for (auto [a, b] : edges) {
        if (a >= num_agents || b >= num_agents) {
            throw InvalidEdge("edge (" + std::to_string(a) + ", " + std::to_string(b) +
                              ") references an agent outside [0, " + std::to_string(num_agents) + ")");
        }
        if (a == b) {
            throw InvalidEdge("self-loop on agent " + std::to_string(a));
        }
        Edge key{std::min(a, b), std::max(a, b)};
        if (!seen.insert(key).second) {
            throw InvalidEdge("duplicate edge (" + std::to_string(key.first) + ", " +
                              std::to_string(key.second) + ")");
        }
        t.neighbors_[a].push_back(b);
        t.neighbors_[b].push_back(a);
    }
    t.edges_.assign(seen.begin(), seen.end());
    for (auto& n : t.neighbors_) {
        std::sort(n.begin(), n.end());
    }

    std::vector<bool> reached(num_agents, false);
    std::queue<std::size_t> frontier;
    frontier.push(0);
    reached[0] = true;
    std::size_t count = 1;
    while (!frontier.empty()) {
        auto v = frontier.front();
        frontier.pop();
        for (auto u : t.neighbors_[v]) {
            if (!reached[u]) {
                reached[u] = true;
                ++count;
                frontier.push(u);
            }
        }
    }
    if (count != num_agents) {
        throw DisconnectedGraph("communication graph is disconnected: " + std::to_string(count) +
                                " of " + std::to_string(num_agents) + " agents reachable from agent 0");
    }
    return t;
}

Topology Topology::from_json(const nlohmann::json& doc) {
    if (!doc.contains("agents") || !doc.contains("edges")) {
        throw ConfigError("topology document needs \"agents\" and \"edges\"");
    }
    auto agents = doc.at("agents").get<long long>();
    if (agents < 1) {
        throw InvalidEdge("topology needs at least one agent");
    }
    std::vector<Edge> edges;
    for (const auto& e : doc.at("edges")) {
        if (!e.is_array() || e.size() != 2) {
            throw ConfigError("each edge must be a two-element array");
        }
        auto a = e[0].get<long long>();
        auto b = e[1].get<long long>();
        if (a < 0 || b < 0) {
            throw InvalidEdge("negative agent index in edge list");
        }
        edges.emplace_back(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    }
    return build(static_cast<std::size_t>(agents), edges);
}

Topology Topology::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open topology file " + path);
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed topology file " + path + ": " + e.what());
    }
    return from_json(doc);
}

nlohmann::json Topology::to_json() const {
    nlohmann::json edges = nlohmann::json::array();
    for (auto [a, b] : edges_) {
        edges.push_back({a, b});
    }
    return {{"agents", num_agents()}, {"edges", edges}};
}

std::size_t Topology::max_degree() const {
    std::size_t d = 0;
    for (const auto& n : neighbors_) {
        d = std::max(d, n.size());
    }
    return d;
}

bool Topology::adjacent(std::size_t a, std::size_t b) const {
    const auto& n = neighbors_.at(a);
    return std::binary_search(n.begin(), n.end(), b);
}

double Topology::mean_extended_degree() const {
    double total = 0.0;
    for (const auto& n : neighbors_) {
        total += static_cast<double>(n.size() + 1);
    }
    return total / static_cast<double>(num_agents());
}

Topology builtin_topology(const std::string& name, std::size_t num_agents) {
    std::vector<Edge> edges;
    if (name == "retailers") {
        return retailer_topology();
    } else if (name == "path") {
        for (std::size_t i = 0; i + 1 < num_agents; ++i) {
            edges.emplace_back(i, i + 1);
        }
    } else if (name == "ring") {
        for (std::size_t i = 0; i + 1 < num_agents; ++i) {
            edges.emplace_back(i, i + 1);
        }
        if (num_agents >= 3) {
            edges.emplace_back(num_agents - 1, 0);
        }
    } else if (name == "complete") {
        for (std::size_t i = 0; i < num_agents; ++i) {
            for (std::size_t j = i + 1; j < num_agents; ++j) {
                edges.emplace_back(i, j);
            }
        }
    } else if (name == "star") {
        for (std::size_t i = 1; i < num_agents; ++i) {
            edges.emplace_back(0, i);
        }
    } else {
        throw ConfigError("unknown builtin topology '" + name + "'");
    }
    return Topology::build(num_agents, edges);
}

Topology retailer_topology() {
    static const std::vector<Edge> edges{
        {0, 2}, {0, 3}, {0, 4}, {0, 5}, {0, 7}, {1, 4}, {1, 6},
        {1, 9}, {2, 8}, {3, 6}, {3, 8}, {5, 9}, {7, 9}, {8, 9},
    };
    return Topology::build(10, edges);
}

WeightMatrix metropolis_weights(const Topology& topology) {
    const auto m = topology.num_agents();
    WeightMatrix w;
    w.entries = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        double off = 0.0;
        for (auto j : topology.neighbors(i)) {
            double wij = 1.0 / (1.0 + static_cast<double>(std::max(topology.degree(i), topology.degree(j))));
            w.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = wij;
            off += wij;
        }
        w.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0 - off;
    }
    w.kind = WeightKind::metropolis;
    return w;
}

WeightMatrix accelerated_weights(const WeightMatrix& metropolis, double alpha) {
    if (!std::isfinite(alpha)) {
        throw ConfigError("acceleration coefficient must be finite");
    }
    const auto n = metropolis.entries.rows();
    WeightMatrix w;
    w.entries = (1.0 + alpha) * metropolis.entries - alpha * Eigen::MatrixXd::Identity(n, n);
    w.kind = WeightKind::accelerated;
    w.alpha = alpha;
    return w;
}

namespace {

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw EigenFailure("symmetric eigensolver did not converge");
    }
    return solver.eigenvalues();
}

}  // namespace

double disagreement_radius(const Eigen::MatrixXd& mixing) {
    const auto n = mixing.rows();
    Eigen::MatrixXd j = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    Eigen::MatrixXd gap = mixing - j;
    gap = 0.5 * (gap + gap.transpose()).eval();
    return symmetric_eigenvalues(gap).cwiseAbs().maxCoeff();
}

SpectralSummary spectral_summary(const WeightMatrix& metropolis) {
    SpectralSummary s;
    const auto n = metropolis.entries.rows();
    Eigen::VectorXd ev = symmetric_eigenvalues(metropolis.entries);  // ascending
    s.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    std::reverse(s.eigenvalues.begin(), s.eigenvalues.end());
    if (n == 1) {
        s.lambda_2 = s.eigenvalues[0];
        s.lambda_min = s.eigenvalues[0];
        s.alpha_opt = 0.0;
        s.radius_gap = 0.0;
        return s;
    }
    s.lambda_2 = s.eigenvalues[1];
    s.lambda_min = s.eigenvalues.back();
    s.alpha_opt = (s.lambda_min + s.lambda_2) / (2.0 - s.lambda_min - s.lambda_2);
    s.radius_gap = disagreement_radius(accelerated_weights(metropolis, s.alpha_opt).entries);
    return s;
}

nlohmann::json SpectralSummary::to_json() const {
    return {{"eigenvalues", eigenvalues},
            {"lambda_2", lambda_2},
            {"lambda_min", lambda_min},
            {"alpha_opt", alpha_opt},
            {"radius_gap", radius_gap}};
}

std::vector<Edge> vulnerable_pairs(const Topology& topology) {
    std::vector<Edge> out;
    for (std::size_t i = 0; i < topology.num_agents(); ++i) {
        for (auto j : topology.neighbors(i)) {
            bool covered = std::all_of(topology.neighbors(j).begin(), topology.neighbors(j).end(),
                                       [&](std::size_t k) { return k == i || topology.adjacent(i, k); });
            if (covered) {
                out.emplace_back(j, i);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

double doubly_stochastic_defect(const Eigen::MatrixXd& w) {
    double defect = (w - w.transpose()).cwiseAbs().maxCoeff();
    defect = std::max(defect, (w.rowwise().sum().array() - 1.0).abs().maxCoeff());
    defect = std::max(defect, (w.colwise().sum().array() - 1.0).abs().maxCoeff());
    return defect;
}

}  // namespace ppdc
