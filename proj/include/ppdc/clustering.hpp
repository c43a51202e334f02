#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "ppdc/consensus.hpp"
#include "ppdc/error.hpp"
#include "ppdc/telemetry.hpp"
#include "ppdc/topology.hpp"

namespace ppdc {

enum class Method { kmeans, fca, gmm };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

/// K centroids plus the method-specific parameters.
struct ClusterModel {
    Method method = Method::kmeans;
    Eigen::MatrixXd centroids;                 // K x D
    double fuzziness = 2.0;                    // fca
    Eigen::VectorXd weights;                   // gmm, sums to 1
    std::vector<Eigen::MatrixXd> covariances;  // gmm, D x D each

    std::size_t k() const { return static_cast<std::size_t>(centroids.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(centroids.cols()); }

    nlohmann::json to_json() const;
};

/// Starting model from public centroids. GMM starts with equal weights and
/// isotropic covariance `data_variance * I`.
ClusterModel initial_model(Method method, const Eigen::MatrixXd& centroids, double data_variance = 1.0,
                           double fuzziness = 2.0);

/// K distinct observations drawn with a seeded partial Fisher-Yates shuffle.
Eigen::MatrixXd forgy_init(const Eigen::MatrixXd& data, std::size_t k, std::uint64_t seed);

/// Nearest centroid; ties go to the lowest index.
std::size_t assign_kmeans(const Eigen::Ref<const Eigen::RowVectorXd>& y, const Eigen::MatrixXd& centroids);

/// Distances below this snap fuzzy membership to one-hot.
inline constexpr double kFcaDistanceGuard = 1e-12;

Eigen::RowVectorXd fca_membership(const Eigen::Ref<const Eigen::RowVectorXd>& y, const Eigen::MatrixXd& centroids,
                                  double fuzziness);

/// Factored mixture: one Cholesky per component, densities in log domain.
class GaussianMixture {
public:
    explicit GaussianMixture(const ClusterModel& model);

    /// N x K log(w_k) + log N(y | mu_k, Sigma_k).
    Eigen::MatrixXd weighted_log_densities(const Eigen::MatrixXd& data) const;
    /// N x K posterior probabilities.
    Eigen::MatrixXd responsibilities(const Eigen::MatrixXd& data) const;
    /// sum_n log sum_k w_k N(y_n | mu_k, Sigma_k)
    double log_likelihood(const Eigen::MatrixXd& data) const;

private:
    Eigen::MatrixXd centroids_;
    std::vector<Eigen::LLT<Eigen::MatrixXd>> factors_;
    std::vector<double> log_norm_;  // log w_k - (D log 2pi + log det Sigma_k) / 2
};

Eigen::RowVectorXd gmm_responsibility(const Eigen::Ref<const Eigen::RowVectorXd>& y, const ClusterModel& model);

/// N x K weights used in the local summaries: one-hot (kmeans),
/// membership (fca) or responsibility (gmm). Rows sum to 1.
Eigen::MatrixXd memberships(const Eigen::MatrixXd& data, const ClusterModel& model);

/// Memberships this close (relative to the row maximum) count as a tie.
/// Coinciding centroids otherwise let rounding noise pick the winner.
inline constexpr double kMembershipTie = 1e-9;

/// Argmax of memberships, lowest index on ties.
std::vector<std::size_t> hard_assignments(const Eigen::MatrixXd& data, const ClusterModel& model);

/// Per-cluster sufficient statistics of one agent.
struct LocalSummary {
    Eigen::MatrixXd s;               // K x D
    Eigen::VectorXd z;               // K
    std::vector<Eigen::MatrixXd> h;  // K of D x D, gmm only
};

/// Sum of all agents' local summaries.
struct GlobalAggregate {
    Eigen::MatrixXd s;
    Eigen::VectorXd z;
    std::vector<Eigen::MatrixXd> h;
};

LocalSummary local_summaries(const Eigen::MatrixXd& data, const ClusterModel& model);

GlobalAggregate aggregate(std::span<const LocalSummary> summaries);

/// Flat consensus-state layout: s-blocks (K rows of D) | z-block (K) | h-blocks
/// (K row-major D x D, gmm only). Every agent packs and unpacks identically.
class StateLayout {
public:
    static constexpr int kVersion = 1;

    StateLayout(Method method, std::size_t k, std::size_t dim);

    std::size_t size() const { return size_; }
    std::size_t k() const { return k_; }
    std::size_t dim() const { return dim_; }
    Method method() const { return method_; }
    std::size_t z_offset() const { return k_ * dim_; }
    std::size_t h_offset() const { return k_ * dim_ + k_; }

    Eigen::RowVectorXd pack(const LocalSummary& summary) const;
    LocalSummary unpack(const Eigen::Ref<const Eigen::RowVectorXd>& state) const;
    GlobalAggregate unpack_aggregate(const Eigen::Ref<const Eigen::RowVectorXd>& state) const;

private:
    Method method_;
    std::size_t k_;
    std::size_t dim_;
    std::size_t size_;
};

struct ClusterOptions {
    double stop_tol = 1e-6;          // max centroid displacement
    std::size_t max_iterations = 300;
    double empty_tol = 1e-9;         // Z_k below this keeps the previous cluster
    double covariance_reg = 1e-6;    // added to every covariance diagonal
    bool track_objective = false;
};

struct ModelUpdate {
    ClusterModel model;
    std::vector<std::size_t> degenerate;  // clusters with Z_k < empty_tol
    double displacement = 0.0;            // max_k |mu_k(new) - mu_k(old)|
};

/// Centroids S_k / Z_k; for gmm also weights Z_k / N and covariances H_k / Z_k,
/// symmetrized and regularized.
ModelUpdate update_model(const GlobalAggregate& aggregate, double total_count, const ClusterModel& previous,
                         const ClusterOptions& options);

/// kmeans: SSE; fca: sum of rho^m |y - mu|^2; gmm: log-likelihood.
double objective(const Eigen::MatrixXd& data, const ClusterModel& model);

struct IterationRecord {
    std::size_t iteration = 0;
    double displacement = 0.0;
    std::optional<double> objective;
    std::vector<std::size_t> degenerate;
    std::size_t consensus_rounds = 0;     // distributed only
    double agent_disagreement = 0.0;      // distributed only: max |mu(agent) - mu(agent 0)|
};

struct CentralizedResult {
    ClusterModel model;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<IterationRecord> history;
};

CentralizedResult cluster_centralized(const Eigen::MatrixXd& data, const ClusterModel& init,
                                      const ClusterOptions& options);

struct DistributedConfig {
    Variant variant = Variant::pp_aac;
    ConsensusOptions consensus{1e-12, 5000, true, false};
    DisturbanceParams disturbance;  // seed is mixed with the outer iteration
    bool keep_runs = false;
};

/// Compact per-iteration consensus outcome.
struct ConsensusRecord {
    std::size_t rounds = 0;
    double final_max_error = 0.0;
    double effective_tol = 0.0;
    double sum_drift = 0.0;
    double drift_bound = 0.0;
};

struct DistributedResult {
    std::vector<ClusterModel> models;  // one per agent
    std::size_t iterations = 0;
    bool converged = false;
    std::size_t stop_disagreements = 0;  // iterations where agents disagreed on stopping
    std::vector<IterationRecord> history;
    std::vector<ConsensusRecord> consensus;
    std::vector<ConsensusRun> runs;  // only with keep_runs
    Telemetry telemetry;
};

class ConsensusBudgetExhausted : public Error {
public:
    ConsensusBudgetExhausted(std::size_t outer_iteration, const BudgetExhausted& cause);
    std::size_t outer_iteration() const { return outer_iteration_; }
    const ConsensusRun& run() const { return cause_.run(); }

private:
    std::size_t outer_iteration_;
    BudgetExhausted cause_;
};

/// Multiplications of one local-summary pass over n observations.
std::uint64_t local_multiplies(Method method, std::size_t n, std::size_t k, std::size_t dim);

/// The distributed clustering framework: every outer iteration each agent
/// summarizes its own data, one consensus recovers the network-wide sums,
/// and each agent updates its own copy of the model.
DistributedResult cluster_distributed(const Topology& topology, std::span<const Eigen::MatrixXd> agent_data,
                                      const ClusterModel& init, const DistributedConfig& config,
                                      const ClusterOptions& options);

}  // namespace ppdc
