#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "ppdc/error.hpp"
#include "ppdc/topology.hpp"

namespace ppdc {

enum class Variant { ac, aac, pp_ac, pp_aac };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);

/// True for the masked variants.
constexpr bool is_private(Variant v) { return v == Variant::pp_ac || v == Variant::pp_aac; }

/// Masking noise: delta_i(t) ~ U[-(sigma/2) beta^(t+1), +(sigma/2) beta^(t+1)] per entry.
struct DisturbanceParams {
    double sigma = 2.0;
    double beta = 0.2;
    std::uint64_t seed = 0;

    void validate() const;
    /// Half-width of the sampling interval for round t.
    double radius(std::size_t t) const;
};

/// Per-agent private noise streams split from one master seed.
///
/// Each agent draws delta_i(t) once per round and publishes only
/// theta_i(t) = delta_i(t) - delta_i(t-1), with delta_i(-1) = 0. Summed over
/// rounds the thetas telescope to the latest delta, which decays to zero.
class DisturbanceStream {
public:
    DisturbanceStream(const DisturbanceParams& params, std::size_t num_agents, std::size_t dim,
                      bool keep_history = false);

    /// theta_i(t). Rounds must be requested in order 0, 1, 2, ... per agent.
    Eigen::RowVectorXd sample(std::size_t agent, std::size_t t);

    /// Number of rounds already drawn for an agent.
    std::size_t rounds_drawn(std::size_t agent) const { return next_round_.at(agent); }
    /// delta_i of the most recent round (zero before the first draw).
    const Eigen::RowVectorXd& last_delta(std::size_t agent) const { return last_delta_.at(agent); }
    /// delta_i(0..t) when keep_history is set.
    const std::vector<Eigen::RowVectorXd>& delta_history(std::size_t agent) const { return history_.at(agent); }

    const DisturbanceParams& params() const { return params_; }

private:
    double uniform_unit(std::size_t agent);

    DisturbanceParams params_;
    std::size_t dim_;
    bool keep_history_;
    std::vector<std::mt19937_64> engines_;
    std::vector<Eigen::RowVectorXd> last_delta_;
    std::vector<std::size_t> next_round_;
    std::vector<std::vector<Eigen::RowVectorXd>> history_;
};

/// Mixing parameters shared (publicly) by all agents.
struct Protocol {
    Variant variant = Variant::pp_aac;
    WeightMatrix metropolis;
    WeightMatrix mixing;  // W for AC / PP-AC, W* for AAC / PP-AAC
    double alpha = 0.0;
    SpectralSummary spectrum;
    double radius = 0.0;  // spectral radius of (mixing - J)
};

/// Builds W and, for accelerated variants, W* with the optimal coefficient
/// unless one is supplied. PP-AC is PP-AAC with alpha forced to 0.
Protocol make_protocol(const Topology& topology, Variant variant,
                       std::optional<double> alpha_override = std::nullopt);

/// One synchronous round: x_i(t+1) = sum over {i} + N(i) of mixing_ij * shared_j.
/// `shared` holds one row per agent.
Eigen::MatrixXd mix(const Topology& topology, const Eigen::MatrixXd& mixing, const Eigen::MatrixXd& shared);

/// Masked round: every agent first adds its theta row, then mixes.
Eigen::MatrixXd step(const Topology& topology, const Eigen::MatrixXd& mixing, const Eigen::MatrixXd& states,
                     const Eigen::MatrixXd& disturbance);

/// Per-agent accelerated update written as the convex combination of the
/// plain average x^w and the predictor 2 x^w - x(t).
Eigen::MatrixXd predictor_step(const Topology& topology, const Eigen::MatrixXd& metropolis, double alpha,
                               const Eigen::MatrixXd& states);

struct ConsensusOptions {
    double tol = 1e-12;
    std::size_t budget = 1000;
    /// false: run exactly `budget` rounds regardless of error.
    bool stop_at_tolerance = true;
    /// false: keep only the error curves, initial and final states.
    bool record_trajectory = true;
};

enum class Termination { tolerance, budget };

struct ConsensusRun {
    Variant variant = Variant::ac;
    Eigen::MatrixXd mixing;
    double alpha = 0.0;
    std::optional<DisturbanceParams> disturbance;

    Eigen::MatrixXd initial;
    Eigen::MatrixXd final_state;
    Eigen::RowVectorXd true_mean;
    /// Absolute tolerance actually applied: tol * max(1, |true_mean|_inf).
    double effective_tol = 0.0;

    std::vector<Eigen::MatrixXd> trajectory;   // X(0..T) when recorded
    std::vector<Eigen::MatrixXd> masked;       // X+(0..T-1), masked variants only
    std::vector<Eigen::MatrixXd> thetas;       // theta(0..T-1), masked variants only

    std::vector<double> mean_abs_error;  // per round 0..T
    std::vector<double> max_abs_error;

    std::size_t rounds = 0;
    Termination termination = Termination::budget;

    std::vector<std::uint64_t> messages;       // per agent
    std::vector<std::uint64_t> floats_sent;    // per agent
    std::vector<std::uint64_t> multiplies;     // per agent

    std::size_t num_agents() const { return static_cast<std::size_t>(initial.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(initial.cols()); }

    /// Values agents broadcast in round t: masked shares for private
    /// variants, raw states otherwise. Requires a recorded trajectory.
    const Eigen::MatrixXd& shared(std::size_t t) const;

    /// M * x_i(T): each agent's estimate of the network-wide sum.
    Eigen::MatrixXd sum_estimates() const;

    /// Largest entrywise |sum_i x_i(T) - sum_i x_i(0)|.
    double sum_drift() const;
    /// M (sigma/2) beta^T: the drift bound after T masked rounds (zero for exact variants).
    double drift_bound() const;

    nlohmann::json summary_json() const;
    /// round,agent,entry,value,masked_value,error
    void write_csv(std::ostream& out) const;
};

/// Thrown when the tolerance is not met within the round budget.
class BudgetExhausted : public Error {
public:
    explicit BudgetExhausted(ConsensusRun partial);
    const ConsensusRun& run() const { return *run_; }

private:
    std::shared_ptr<const ConsensusRun> run_;
};

class Consensus {
public:
    Consensus(const Topology& topology, Variant variant, std::optional<double> alpha_override = std::nullopt);

    /// initial: one row per agent. `disturbance` is required iff the variant is masked.
    ConsensusRun run(const Eigen::MatrixXd& initial, const ConsensusOptions& options,
                     const std::optional<DisturbanceParams>& disturbance = std::nullopt) const;

    const Topology& topology() const { return topology_; }
    const Protocol& protocol() const { return protocol_; }

private:
    Topology topology_;
    Protocol protocol_;
};

ConsensusRun run_consensus(Variant variant, const Topology& topology, const Eigen::MatrixXd& initial,
                           const std::optional<DisturbanceParams>& disturbance, const ConsensusOptions& options);

/// Per-round mean absolute error of all agents against the true average.
const std::vector<double>& convergence_curve(const ConsensusRun& run);

/// Least-squares slope of log10(curve) over rounds [first, last).
double tail_log_slope(std::span<const double> curve, std::size_t first, std::size_t last);

/// Worst-case envelope err(t) <= constant * rate^t for the max per-agent error.
struct ConvergenceBound {
    double rate = 0.0;
    double constant = 0.0;

    /// Smallest round count t >= 1 with constant * rate^t <= tol.
    std::size_t rounds_for(double tol) const;
};

/// Envelope from the disagreement radius, the initial spread and, for masked
/// variants, the decaying disturbance.
ConvergenceBound convergence_bound(const Eigen::MatrixXd& initial, double radius,
                                   const std::optional<DisturbanceParams>& disturbance);

/// ceil(log(tol / initial_error) / log(radius)), at least 1.
std::size_t spectral_round_budget(double radius, double tol, double initial_error);

}  // namespace ppdc
