#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace ppdc {

using Edge = std::pair<std::size_t, std::size_t>;

/// Undirected, connected communication graph over agents 0..M-1.
///
/// Immutable once built. Neighbor lists are sorted ascending so every agent
/// iterates its neighborhood in the same order.
class Topology {
public:
    /// Validates and builds a graph. Throws InvalidEdge for self-loops,
    /// out-of-range indices or duplicates, and DisconnectedGraph otherwise.
    static Topology build(std::size_t num_agents, std::span<const Edge> edges);

    static Topology from_json(const nlohmann::json& doc);
    static Topology load(const std::string& path);
    nlohmann::json to_json() const;

    std::size_t num_agents() const { return neighbors_.size(); }
    std::size_t num_edges() const { return edges_.size(); }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<std::size_t>& neighbors(std::size_t agent) const { return neighbors_.at(agent); }
    std::size_t degree(std::size_t agent) const { return neighbors_.at(agent).size(); }
    std::size_t max_degree() const;
    bool adjacent(std::size_t a, std::size_t b) const;

    /// Mean of d_i + 1 over agents (the per-round multiply count of one agent).
    double mean_extended_degree() const;

private:
    Topology() = default;

    std::vector<Edge> edges_;  // normalized (min, max), sorted
    std::vector<std::vector<std::size_t>> neighbors_;
};

/// Named graphs: path, ring, complete, star, and the 10-agent retailer graph.
Topology builtin_topology(const std::string& name, std::size_t num_agents);

/// Ten agents, fourteen edges, agent 0 has the maximum degree 5 and no
/// neighbor's neighborhood is contained in another's closed neighborhood.
Topology retailer_topology();

enum class WeightKind { metropolis, accelerated };

struct WeightMatrix {
    Eigen::MatrixXd entries;
    WeightKind kind = WeightKind::metropolis;
    std::optional<double> alpha;  // set iff kind == accelerated

    std::size_t size() const { return static_cast<std::size_t>(entries.rows()); }
};

struct SpectralSummary {
    std::vector<double> eigenvalues;  // descending
    double lambda_2 = 0.0;
    double lambda_min = 0.0;
    double alpha_opt = 0.0;
    double radius_gap = 0.0;  // spectral radius of (W* - J) at alpha_opt

    nlohmann::json to_json() const;
};

WeightMatrix metropolis_weights(const Topology& topology);

/// W* = (1 + alpha) W - alpha I.
WeightMatrix accelerated_weights(const WeightMatrix& metropolis, double alpha);

SpectralSummary spectral_summary(const WeightMatrix& metropolis);

/// Spectral radius of (W - J) for any symmetric mixing matrix W.
double disagreement_radius(const Eigen::MatrixXd& mixing);

/// Ordered pairs (j, i) with j a neighbor of i and N(j) a subset of N(i) + {i}:
/// agent i observes every value agent j receives.
std::vector<Edge> vulnerable_pairs(const Topology& topology);

/// Largest deviation of a matrix from being symmetric and doubly stochastic.
double doubly_stochastic_defect(const Eigen::MatrixXd& w);

}  // namespace ppdc
