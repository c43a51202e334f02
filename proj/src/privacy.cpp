#include "ppdc/privacy.hpp"

#include <algorithm>
#include <cmath>

#include "ppdc/error.hpp"

namespace ppdc {

namespace {

std::vector<double> to_vec(const Eigen::Ref<const Eigen::RowVectorXd>& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

nlohmann::json PrivacySet::to_json() const {
    nlohmann::json j{{"consumer_count", consumer_count}};
    j["proportions"] = proportions ? nlohmann::json(to_vec(proportions->transpose())) : nlohmann::json(nullptr);
    nlohmann::json patterns = nlohmann::json::array();
    for (const auto& p : local_patterns) {
        patterns.push_back(p ? nlohmann::json(to_vec(*p)) : nlohmann::json(nullptr));
    }
    j["local_patterns"] = patterns;
    return j;
}

PrivacySet infer_privacy_set(const Eigen::Ref<const Eigen::RowVectorXd>& shared, const StateLayout& layout) {
    if (static_cast<std::size_t>(shared.size()) != layout.size()) {
        throw DimensionMismatch("shared value length does not match the state layout");
    }
    const auto k = static_cast<Eigen::Index>(layout.k());
    const auto d = static_cast<Eigen::Index>(layout.dim());
    Eigen::VectorXd z = shared.segment(static_cast<Eigen::Index>(layout.z_offset()), k).transpose();

    PrivacySet p;
    p.consumer_count = z.sum();
    if (p.consumer_count != 0.0) {
        p.proportions = z / p.consumer_count;
    }
    p.local_patterns.resize(static_cast<std::size_t>(k));
    for (Eigen::Index c = 0; c < k; ++c) {
        if (z[c] != 0.0) {
            p.local_patterns[static_cast<std::size_t>(c)] = shared.segment(c * d, d) / z[c];
        }
    }
    return p;
}

PrivacySet privacy_set(const LocalSummary& summary, const StateLayout& layout) {
    return infer_privacy_set(layout.pack(summary), layout);
}

InferenceError inference_error(const PrivacySet& inferred, const PrivacySet& truth) {
    InferenceError e;
    e.consumer_count = std::abs(inferred.consumer_count - truth.consumer_count);
    if (inferred.proportions && truth.proportions) {
        e.proportions = 0.5 * (*inferred.proportions - *truth.proportions).cwiseAbs().sum();
    }
    double sq = 0.0;
    std::size_t entries = 0;
    const auto k = std::min(inferred.local_patterns.size(), truth.local_patterns.size());
    for (std::size_t c = 0; c < k; ++c) {
        const auto& a = inferred.local_patterns[c];
        const auto& b = truth.local_patterns[c];
        if (a && b) {
            sq += (*a - *b).squaredNorm();
            entries += static_cast<std::size_t>(a->size());
        }
    }
    if (entries > 0) {
        e.local_patterns = std::sqrt(sq / static_cast<double>(entries));
    }
    return e;
}

nlohmann::json AdversaryView::to_json() const {
    nlohmann::json j{{"observer", observer},
                     {"target", target},
                     {"rounds_received", received.size()},
                     {"inferred", inferred.to_json()},
                     {"error",
                      {{"consumer_count_abs", error.consumer_count},
                       {"proportions_tv", error.proportions ? nlohmann::json(*error.proportions) : nullptr},
                       {"local_patterns_rms",
                        error.local_patterns ? nlohmann::json(*error.local_patterns) : nullptr}}},
                     {"vulnerable", vulnerable}};
    j["reconstruction_error"] = reconstruction_error ? nlohmann::json(*reconstruction_error) : nullptr;
    return j;
}

Eigen::RowVectorXd reconstruct_initial(const ConsensusRun& run, const Topology& topology, std::size_t observer,
                                       std::size_t target) {
    if (!topology.adjacent(observer, target)) {
        throw NotNeighbors(observer, target);
    }
    for (auto k : topology.neighbors(target)) {
        if (k != observer && !topology.adjacent(observer, k)) {
            throw ConfigError("observer " + std::to_string(observer) + " cannot see what agent " +
                              std::to_string(target) + " receives from agent " + std::to_string(k));
        }
    }
    if (run.trajectory.empty() || run.rounds == 0) {
        throw ConfigError("reconstruction needs a recorded run with at least one round");
    }
    const auto j = static_cast<Eigen::Index>(target);
    // theta_j(t) = x+_j(t) - sum over {j} + N(j) of W_jk x+_k(t-1), all visible to the observer.
    Eigen::RowVectorXd theta_sum = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(run.dim()));
    for (std::size_t t = 1; t < run.rounds; ++t) {
        const auto& prev = run.shared(t - 1);
        Eigen::RowVectorXd predicted = run.mixing(j, j) * prev.row(j);
        for (auto k : topology.neighbors(target)) {
            const auto kk = static_cast<Eigen::Index>(k);
            predicted += run.mixing(j, kk) * prev.row(kk);
        }
        theta_sum += run.shared(t).row(j) - predicted;
    }
    // Thetas telescope: theta_j(0) = delta_j(T-1) - sum_{t>=1} theta_j(t), and delta_j(T-1) -> 0.
    return run.shared(0).row(j) + theta_sum;
}

AdversaryView attack_run(const ConsensusRun& run, const Topology& topology, const StateLayout& layout,
                         std::size_t observer, std::size_t target, const PrivacySet& truth) {
    if (observer >= topology.num_agents() || target >= topology.num_agents() ||
        !topology.adjacent(observer, target)) {
        throw NotNeighbors(observer, target);
    }
    if (run.trajectory.empty() || run.rounds == 0) {
        throw ConfigError("attack needs a recorded run with at least one shared round");
    }
    AdversaryView v;
    v.observer = observer;
    v.target = target;
    const auto j = static_cast<Eigen::Index>(target);
    for (std::size_t t = 0; t < run.rounds; ++t) {
        v.received.push_back(run.shared(t).row(j));
    }
    v.inferred = infer_privacy_set(v.received.front(), layout);
    v.error = inference_error(v.inferred, truth);

    const auto pairs = vulnerable_pairs(topology);
    v.vulnerable = std::find(pairs.begin(), pairs.end(), Edge{target, observer}) != pairs.end();
    if (v.vulnerable) {
        v.reconstructed_initial = reconstruct_initial(run, topology, observer, target);
        v.reconstruction_error = (*v.reconstructed_initial - run.initial.row(j)).cwiseAbs().maxCoeff();
    }
    return v;
}

}  // namespace ppdc
