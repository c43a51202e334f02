#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "ppdc/clustering.hpp"
#include "ppdc/consensus.hpp"
#include "ppdc/topology.hpp"

namespace ppdc {

/// What a neighbor can infer from one agent's shared summary: the consumer
/// count, per-cluster proportions and per-cluster local patterns. Fields whose
/// formula would divide by zero are left empty.
struct PrivacySet {
    double consumer_count = 0.0;
    std::optional<Eigen::VectorXd> proportions;
    std::vector<std::optional<Eigen::RowVectorXd>> local_patterns;

    nlohmann::json to_json() const;
};

/// N = sum_k z_k, r_k = z_k / N, mu_k = s_k / z_k applied to a packed state.
PrivacySet infer_privacy_set(const Eigen::Ref<const Eigen::RowVectorXd>& shared, const StateLayout& layout);

/// Ground truth straight from a local summary.
PrivacySet privacy_set(const LocalSummary& summary, const StateLayout& layout);

struct InferenceError {
    double consumer_count = 0.0;                 // absolute
    std::optional<double> proportions;           // total variation
    std::optional<double> local_patterns;        // RMS over clusters defined on both sides
};

InferenceError inference_error(const PrivacySet& inferred, const PrivacySet& truth);

/// An honest-but-curious observer's record of one neighbor.
struct AdversaryView {
    std::size_t observer = 0;
    std::size_t target = 0;
    std::vector<Eigen::RowVectorXd> received;  // target's shares, round 0..T-1
    PrivacySet inferred;
    InferenceError error;
    bool vulnerable = false;  // (target, observer) is a vulnerable pair
    std::optional<Eigen::RowVectorXd> reconstructed_initial;
    std::optional<double> reconstruction_error;  // max |reconstructed - x_target(0)|

    nlohmann::json to_json() const;
};

/// Replays what `observer` received from `target` during a recorded run and
/// applies the inference formulas to the round-0 share. When the observer sees
/// everything the target receives, also recovers x_target(0) by peeling the
/// public mixing weights off consecutive shares.
AdversaryView attack_run(const ConsensusRun& run, const Topology& topology, const StateLayout& layout,
                         std::size_t observer, std::size_t target, const PrivacySet& truth);

/// Linear reconstruction of x_target(0) from the observer's view. Requires a
/// recorded trajectory and a vulnerable pair.
Eigen::RowVectorXd reconstruct_initial(const ConsensusRun& run, const Topology& topology, std::size_t observer,
                                       std::size_t target);

}  // namespace ppdc
