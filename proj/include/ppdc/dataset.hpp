#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "ppdc/consensus.hpp"
#include "ppdc/topology.hpp"

namespace ppdc {

/// Per-dimension affine map y -> (y - mean) / scale.
struct Standardization {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;
    bool active = false;

    Eigen::MatrixXd apply(const Eigen::MatrixXd& data) const;
    Eigen::MatrixXd invert(const Eigen::MatrixXd& data) const;
    nlohmann::json to_json() const;
};

/// Z-score parameters from population moments. Constant columns keep scale 1.
Standardization fit_zscore(const Eigen::MatrixXd& data);

struct Dataset {
    Eigen::MatrixXd observations;  // N x D
    Standardization standardization;
    std::vector<std::size_t> owner;     // empty until partitioned
    std::vector<std::size_t> local_id;
    std::vector<std::size_t> labels;    // planted components (synthetic only)

    std::size_t size() const { return static_cast<std::size_t>(observations.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(observations.cols()); }
    std::size_t num_agents() const;

    /// Rows owned by each agent, in local-id order.
    std::vector<Eigen::MatrixXd> agent_data() const;
};

/// N rows of D numeric cells. A first line containing a non-numeric cell is a
/// header. Throws ParseError, NonFiniteValue or RaggedRows with 1-based line
/// and column.
Eigen::MatrixXd parse_profiles(std::istream& in);

Dataset load_profiles(const std::string& path, bool standardize = true);

/// One file per agent; observations are owned by the file they came from and
/// standardized jointly.
Dataset load_agent_files(std::span<const std::string> paths, bool standardize = true);

struct ComponentSpec {
    Eigen::RowVectorXd mean;  // daily shape
    double spread = 0.0;      // per-entry Gaussian standard deviation
    std::size_t count = 0;
};

/// Six daily shapes sampled at `dim` points over 24 hours: morning peak,
/// evening peak, flat, double peak, night storage and midday plateau.
Eigen::MatrixXd daily_templates(std::size_t dim);

/// The first `components` templates, each with the same spread and count.
std::vector<ComponentSpec> template_components(std::size_t components, std::size_t per_component, std::size_t dim,
                                               double spread);

/// Draws every component's rows, labels them, and leaves them unstandardized.
Dataset synth_profiles(std::span<const ComponentSpec> components, std::uint64_t seed);

/// In-place z-score of the union.
void standardize(Dataset& dataset);

enum class PartitionPolicy { equal, proportions, by_file };

PartitionPolicy parse_partition_policy(const std::string& name);
std::string to_string(PartitionPolicy policy);

struct Ownership {
    std::vector<std::size_t> owner;     // per observation
    std::vector<std::size_t> local_id;  // per observation
    std::vector<std::size_t> counts;    // per agent
};

/// Seeded shuffle, then the first N mod M agents take ceil(N/M) rows.
Ownership partition_equal(std::size_t n, std::size_t agents, std::uint64_t seed);

/// Largest-remainder rounding of proportions * N over a seeded shuffle.
Ownership partition_proportions(std::size_t n, std::span<const double> proportions, std::uint64_t seed);

/// Keeps an existing owner column.
Ownership partition_by_owner(std::span<const std::size_t> owner, std::size_t agents);

void apply_ownership(Dataset& dataset, const Ownership& ownership);

/// Network-wide z-score computed without pooling: one masked consensus for
/// the per-dimension sums and count, a second for the squared deviations.
/// Returns each agent's own estimate.
std::vector<Standardization> distributed_standardization(const Topology& topology,
                                                         std::span<const Eigen::MatrixXd> agent_data,
                                                         const DisturbanceParams& disturbance,
                                                         const ConsensusOptions& options);

/// Adjusted Rand index between two labelings.
double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

}  // namespace ppdc
