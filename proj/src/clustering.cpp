#include "ppdc/clustering.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

namespace ppdc {

std::string_view to_string(Method m) {
    switch (m) {
        case Method::kmeans: return "kmeans";
        case Method::fca: return "fca";
        case Method::gmm: return "gmm";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    if (name == "kmeans" || name == "k-means") return Method::kmeans;
    if (name == "fca" || name == "fcm") return Method::fca;
    if (name == "gmm") return Method::gmm;
    throw ConfigError("unknown clustering method '" + std::string(name) + "'");
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row[static_cast<std::size_t>(c)] = m(r, c);
        }
        rows.push_back(row);
    }
    return rows;
}

Eigen::VectorXd squared_distances(const Eigen::Ref<const Eigen::RowVectorXd>& y, const Eigen::MatrixXd& centroids) {
    return (centroids.rowwise() - y).rowwise().squaredNorm();
}

// N x K squared distances, one direct difference per pair.
Eigen::MatrixXd pairwise_squared(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centroids) {
    Eigen::MatrixXd d2(data.rows(), centroids.rows());
    for (Eigen::Index k = 0; k < centroids.rows(); ++k) {
        d2.col(k) = (data.rowwise() - centroids.row(k)).rowwise().squaredNorm();
    }
    return d2;
}

void check_dims(const Eigen::MatrixXd& data, const ClusterModel& model) {
    if (model.k() == 0) {
        throw ConfigError("model has no clusters");
    }
    if (data.rows() > 0 && static_cast<std::size_t>(data.cols()) != model.dim()) {
        throw DimensionMismatch("data has " + std::to_string(data.cols()) + " columns, model expects " +
                                std::to_string(model.dim()));
    }
}

}  // namespace

nlohmann::json ClusterModel::to_json() const {
    nlohmann::json j{{"method", std::string(to_string(method))}, {"k", k()}, {"dim", dim()},
                     {"centroids", matrix_json(centroids)}};
    if (method == Method::fca) {
        j["fuzziness"] = fuzziness;
    }
    if (method == Method::gmm) {
        j["weights"] = std::vector<double>(weights.data(), weights.data() + weights.size());
        nlohmann::json covs = nlohmann::json::array();
        for (const auto& c : covariances) {
            covs.push_back(matrix_json(c));
        }
        j["covariances"] = covs;
    }
    return j;
}

ClusterModel initial_model(Method method, const Eigen::MatrixXd& centroids, double data_variance, double fuzziness) {
    if (centroids.rows() < 1 || centroids.cols() < 1) {
        throw ConfigError("initial model needs at least one centroid of positive dimension");
    }
    if (method == Method::fca && !(fuzziness > 1.0)) {
        throw ConfigError("fuzziness must exceed 1");
    }
    ClusterModel m;
    m.method = method;
    m.centroids = centroids;
    m.fuzziness = fuzziness;
    if (method == Method::gmm) {
        const auto k = centroids.rows();
        const auto d = centroids.cols();
        m.weights = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
        m.covariances.assign(static_cast<std::size_t>(k), data_variance * Eigen::MatrixXd::Identity(d, d));
    }
    return m;
}

Eigen::MatrixXd forgy_init(const Eigen::MatrixXd& data, std::size_t k, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(data.rows());
    if (k < 1 || k > n) {
        throw ConfigError("cannot draw " + std::to_string(k) + " initial centroids from " + std::to_string(n) +
                          " observations");
    }
    std::mt19937_64 engine(seed);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Eigen::MatrixXd centroids(static_cast<Eigen::Index>(k), data.cols());
    for (std::size_t i = 0; i < k; ++i) {
        auto j = i + static_cast<std::size_t>(engine() % (n - i));
        std::swap(idx[i], idx[j]);
        centroids.row(static_cast<Eigen::Index>(i)) = data.row(static_cast<Eigen::Index>(idx[i]));
    }
    return centroids;
}

std::size_t assign_kmeans(const Eigen::Ref<const Eigen::RowVectorXd>& y, const Eigen::MatrixXd& centroids) {
    if (centroids.rows() < 1) {
        throw ConfigError("assignment needs at least one centroid");
    }
    Eigen::VectorXd d2 = squared_distances(y, centroids);
    std::size_t best = 0;
    for (Eigen::Index k = 1; k < d2.size(); ++k) {
        if (d2[k] < d2[static_cast<Eigen::Index>(best)]) {
            best = static_cast<std::size_t>(k);
        }
    }
    return best;
}

namespace {

Eigen::RowVectorXd fca_from_squared(const Eigen::Ref<const Eigen::RowVectorXd>& d2, double fuzziness) {
    const auto k = d2.size();
    Eigen::RowVectorXd rho = Eigen::RowVectorXd::Zero(k);
    Eigen::Index nearest = 0;
    for (Eigen::Index j = 1; j < k; ++j) {
        if (d2[j] < d2[nearest]) {
            nearest = j;
        }
    }
    if (std::sqrt(d2[nearest]) < kFcaDistanceGuard) {
        rho[nearest] = 1.0;
        return rho;
    }
    // rho_k proportional to d_k^(-2/(m-1)); scaled by the nearest distance for range.
    const double p = 1.0 / (fuzziness - 1.0);
    for (Eigen::Index j = 0; j < k; ++j) {
        rho[j] = std::pow(d2[nearest] / d2[j], p);
    }
    return rho / rho.sum();
}

}  // namespace

Eigen::RowVectorXd fca_membership(const Eigen::Ref<const Eigen::RowVectorXd>& y, const Eigen::MatrixXd& centroids,
                                  double fuzziness) {
    if (!(fuzziness > 1.0)) {
        throw ConfigError("fuzziness must exceed 1");
    }
    if (centroids.rows() < 1) {
        throw ConfigError("membership needs at least one centroid");
    }
    Eigen::RowVectorXd d2 = squared_distances(y, centroids).transpose();
    return fca_from_squared(d2, fuzziness);
}

GaussianMixture::GaussianMixture(const ClusterModel& model) : centroids_(model.centroids) {
    const auto k = model.k();
    if (model.weights.size() != static_cast<Eigen::Index>(k) || model.covariances.size() != k) {
        throw ConfigError("gmm model needs one weight and one covariance per cluster");
    }
    const double d = static_cast<double>(model.dim());
    factors_.reserve(k);
    log_norm_.reserve(k);
    for (std::size_t c = 0; c < k; ++c) {
        const auto& cov = model.covariances[c];
        if (static_cast<std::size_t>(cov.rows()) != model.dim() || cov.rows() != cov.cols()) {
            throw DimensionMismatch("covariance " + std::to_string(c) + " has the wrong shape");
        }
        factors_.emplace_back(cov);
        if (factors_.back().info() != Eigen::Success) {
            throw SingularCovariance(c);
        }
        const auto& l = factors_.back().matrixLLT();
        double log_det = 0.0;
        for (Eigen::Index i = 0; i < l.rows(); ++i) {
            if (!(l(i, i) > 0.0)) {
                throw SingularCovariance(c);
            }
            log_det += 2.0 * std::log(l(i, i));
        }
        const double w = model.weights[static_cast<Eigen::Index>(c)];
        const double log_w = w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity();
        log_norm_.push_back(log_w - 0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det));
    }
}

Eigen::MatrixXd GaussianMixture::weighted_log_densities(const Eigen::MatrixXd& data) const {
    const auto k = centroids_.rows();
    if (data.rows() > 0 && data.cols() != centroids_.cols()) {
        throw DimensionMismatch("data dimension differs from the mixture dimension");
    }
    Eigen::MatrixXd out(data.rows(), k);
    for (Eigen::Index c = 0; c < k; ++c) {
        const auto cc = static_cast<std::size_t>(c);
        if (std::isinf(log_norm_[cc])) {
            out.col(c).setConstant(-std::numeric_limits<double>::infinity());
            continue;
        }
        Eigen::MatrixXd centered = (data.rowwise() - centroids_.row(c)).transpose();  // D x N
        factors_[cc].matrixL().solveInPlace(centered);
        out.col(c) = (log_norm_[cc] - 0.5 * centered.colwise().squaredNorm().array()).transpose();
    }
    return out;
}

namespace {

// Row-wise log-sum-exp; rows of -inf stay -inf.
Eigen::VectorXd log_sum_exp_rows(const Eigen::MatrixXd& logs) {
    Eigen::VectorXd out(logs.rows());
    for (Eigen::Index n = 0; n < logs.rows(); ++n) {
        const double top = logs.row(n).maxCoeff();
        if (!std::isfinite(top)) {
            out[n] = top;
            continue;
        }
        out[n] = top + std::log((logs.row(n).array() - top).exp().sum());
    }
    return out;
}

}  // namespace

Eigen::MatrixXd GaussianMixture::responsibilities(const Eigen::MatrixXd& data) const {
    Eigen::MatrixXd logs = weighted_log_densities(data);
    Eigen::VectorXd norm = log_sum_exp_rows(logs);
    Eigen::MatrixXd q(logs.rows(), logs.cols());
    for (Eigen::Index n = 0; n < logs.rows(); ++n) {
        q.row(n) = (logs.row(n).array() - norm[n]).exp().matrix();
    }
    return q;
}

double GaussianMixture::log_likelihood(const Eigen::MatrixXd& data) const {
    return log_sum_exp_rows(weighted_log_densities(data)).sum();
}

Eigen::RowVectorXd gmm_responsibility(const Eigen::Ref<const Eigen::RowVectorXd>& y, const ClusterModel& model) {
    Eigen::MatrixXd one = y;
    return GaussianMixture(model).responsibilities(one).row(0);
}

Eigen::MatrixXd memberships(const Eigen::MatrixXd& data, const ClusterModel& model) {
    check_dims(data, model);
    const auto k = static_cast<Eigen::Index>(model.k());
    switch (model.method) {
        case Method::kmeans: {
            Eigen::MatrixXd w = Eigen::MatrixXd::Zero(data.rows(), k);
            for (Eigen::Index n = 0; n < data.rows(); ++n) {
                w(n, static_cast<Eigen::Index>(assign_kmeans(data.row(n), model.centroids))) = 1.0;
            }
            return w;
        }
        case Method::fca: {
            if (!(model.fuzziness > 1.0)) {
                throw ConfigError("fuzziness must exceed 1");
            }
            Eigen::MatrixXd d2 = pairwise_squared(data, model.centroids);
            Eigen::MatrixXd w(data.rows(), k);
            for (Eigen::Index n = 0; n < data.rows(); ++n) {
                w.row(n) = fca_from_squared(d2.row(n), model.fuzziness);
            }
            return w;
        }
        case Method::gmm:
            return GaussianMixture(model).responsibilities(data);
    }
    return {};
}

std::vector<std::size_t> hard_assignments(const Eigen::MatrixXd& data, const ClusterModel& model) {
    std::vector<std::size_t> labels(static_cast<std::size_t>(data.rows()));
    if (model.method == Method::kmeans) {
        check_dims(data, model);
        for (Eigen::Index n = 0; n < data.rows(); ++n) {
            labels[static_cast<std::size_t>(n)] = assign_kmeans(data.row(n), model.centroids);
        }
        return labels;
    }
    Eigen::MatrixXd w = memberships(data, model);
    for (Eigen::Index n = 0; n < w.rows(); ++n) {
        const double top = w.row(n).maxCoeff();
        Eigen::Index best = 0;
        while (w(n, best) < top * (1.0 - kMembershipTie)) {
            ++best;
        }
        labels[static_cast<std::size_t>(n)] = static_cast<std::size_t>(best);
    }
    return labels;
}

LocalSummary local_summaries(const Eigen::MatrixXd& data, const ClusterModel& model) {
    check_dims(data, model);
    const auto k = static_cast<Eigen::Index>(model.k());
    const auto d = static_cast<Eigen::Index>(model.dim());
    LocalSummary out;
    if (data.rows() == 0) {
        out.s = Eigen::MatrixXd::Zero(k, d);
        out.z = Eigen::VectorXd::Zero(k);
        if (model.method == Method::gmm) {
            out.h.assign(static_cast<std::size_t>(k), Eigen::MatrixXd::Zero(d, d));
        }
        return out;
    }
    Eigen::MatrixXd w = memberships(data, model);
    if (model.method == Method::fca) {
        w = w.array().pow(model.fuzziness).matrix();
    }
    out.s = w.transpose() * data;
    out.z = w.colwise().sum().transpose();
    if (model.method == Method::gmm) {
        out.h.reserve(static_cast<std::size_t>(k));
        for (Eigen::Index c = 0; c < k; ++c) {
            // Scatter about the current (pre-update) centroid.
            Eigen::MatrixXd centered = data.rowwise() - model.centroids.row(c);
            Eigen::MatrixXd weighted = centered.array().colwise() * w.col(c).array();
            out.h.push_back(weighted.transpose() * centered);
        }
    }
    return out;
}

GlobalAggregate aggregate(std::span<const LocalSummary> summaries) {
    if (summaries.empty()) {
        throw ConfigError("aggregate of zero summaries");
    }
    GlobalAggregate g{summaries[0].s, summaries[0].z, summaries[0].h};
    for (std::size_t i = 1; i < summaries.size(); ++i) {
        const auto& l = summaries[i];
        if (l.s.rows() != g.s.rows() || l.s.cols() != g.s.cols() || l.h.size() != g.h.size()) {
            throw DimensionMismatch("local summaries have inconsistent shapes");
        }
        g.s += l.s;
        g.z += l.z;
        for (std::size_t c = 0; c < g.h.size(); ++c) {
            g.h[c] += l.h[c];
        }
    }
    return g;
}

StateLayout::StateLayout(Method method, std::size_t k, std::size_t dim)
    : method_(method), k_(k), dim_(dim), size_(k * dim + k + (method == Method::gmm ? k * dim * dim : 0)) {
    if (k < 1 || dim < 1) {
        throw ConfigError("state layout needs K >= 1 and D >= 1");
    }
}

Eigen::RowVectorXd StateLayout::pack(const LocalSummary& summary) const {
    const auto k = static_cast<Eigen::Index>(k_);
    const auto d = static_cast<Eigen::Index>(dim_);
    if (summary.s.rows() != k || summary.s.cols() != d || summary.z.size() != k ||
        (method_ == Method::gmm && summary.h.size() != k_)) {
        throw DimensionMismatch("summary shape does not match the state layout");
    }
    Eigen::RowVectorXd x(static_cast<Eigen::Index>(size_));
    for (Eigen::Index c = 0; c < k; ++c) {
        x.segment(c * d, d) = summary.s.row(c);
    }
    x.segment(k * d, k) = summary.z.transpose();
    if (method_ == Method::gmm) {
        const auto off = static_cast<Eigen::Index>(h_offset());
        for (Eigen::Index c = 0; c < k; ++c) {
            const auto& h = summary.h[static_cast<std::size_t>(c)];
            for (Eigen::Index r = 0; r < d; ++r) {
                x.segment(off + c * d * d + r * d, d) = h.row(r);
            }
        }
    }
    return x;
}

LocalSummary StateLayout::unpack(const Eigen::Ref<const Eigen::RowVectorXd>& state) const {
    if (static_cast<std::size_t>(state.size()) != size_) {
        throw DimensionMismatch("state length " + std::to_string(state.size()) + " differs from layout size " +
                                std::to_string(size_));
    }
    const auto k = static_cast<Eigen::Index>(k_);
    const auto d = static_cast<Eigen::Index>(dim_);
    LocalSummary out;
    out.s.resize(k, d);
    for (Eigen::Index c = 0; c < k; ++c) {
        out.s.row(c) = state.segment(c * d, d);
    }
    out.z = state.segment(k * d, k).transpose();
    if (method_ == Method::gmm) {
        const auto off = static_cast<Eigen::Index>(h_offset());
        for (Eigen::Index c = 0; c < k; ++c) {
            Eigen::MatrixXd h(d, d);
            for (Eigen::Index r = 0; r < d; ++r) {
                h.row(r) = state.segment(off + c * d * d + r * d, d);
            }
            out.h.push_back(std::move(h));
        }
    }
    return out;
}

GlobalAggregate StateLayout::unpack_aggregate(const Eigen::Ref<const Eigen::RowVectorXd>& state) const {
    auto l = unpack(state);
    return GlobalAggregate{std::move(l.s), std::move(l.z), std::move(l.h)};
}

ModelUpdate update_model(const GlobalAggregate& agg, double total_count, const ClusterModel& previous,
                         const ClusterOptions& options) {
    const auto k = static_cast<Eigen::Index>(previous.k());
    const auto d = static_cast<Eigen::Index>(previous.dim());
    if (agg.s.rows() != k || agg.s.cols() != d || agg.z.size() != k ||
        (previous.method == Method::gmm && agg.h.size() != previous.k())) {
        throw DimensionMismatch("aggregate shape does not match the model");
    }
    ModelUpdate u;
    u.model = previous;
    for (Eigen::Index c = 0; c < k; ++c) {
        if (agg.z[c] < options.empty_tol) {
            u.degenerate.push_back(static_cast<std::size_t>(c));
            continue;
        }
        u.model.centroids.row(c) = agg.s.row(c) / agg.z[c];
    }
    if (previous.method == Method::gmm) {
        if (!(total_count > 0.0)) {
            throw ConfigError("gmm update needs a positive observation count");
        }
        Eigen::VectorXd w = (agg.z / total_count).cwiseMax(0.0);
        u.model.weights = w / w.sum();
        for (Eigen::Index c = 0; c < k; ++c) {
            if (agg.z[c] < options.empty_tol) {
                continue;
            }
            Eigen::MatrixXd cov = agg.h[static_cast<std::size_t>(c)] / agg.z[c];
            cov = 0.5 * (cov + cov.transpose()).eval();
            cov.diagonal().array() += options.covariance_reg;
            u.model.covariances[static_cast<std::size_t>(c)] = std::move(cov);
        }
    }
    u.displacement = (u.model.centroids - previous.centroids).rowwise().norm().maxCoeff();
    return u;
}

double objective(const Eigen::MatrixXd& data, const ClusterModel& model) {
    check_dims(data, model);
    switch (model.method) {
        case Method::kmeans: {
            Eigen::MatrixXd d2 = pairwise_squared(data, model.centroids);
            return d2.rowwise().minCoeff().sum();
        }
        case Method::fca: {
            Eigen::MatrixXd d2 = pairwise_squared(data, model.centroids);
            Eigen::MatrixXd w = memberships(data, model).array().pow(model.fuzziness).matrix();
            return (w.array() * d2.array()).sum();
        }
        case Method::gmm:
            return GaussianMixture(model).log_likelihood(data);
    }
    return 0.0;
}

CentralizedResult cluster_centralized(const Eigen::MatrixXd& data, const ClusterModel& init,
                                      const ClusterOptions& options) {
    check_dims(data, init);
    if (init.k() > static_cast<std::size_t>(data.rows())) {
        throw ConfigError("more clusters than observations");
    }
    CentralizedResult r;
    r.model = init;
    const double n = static_cast<double>(data.rows());
    while (r.iterations < options.max_iterations) {
        auto summary = local_summaries(data, r.model);
        GlobalAggregate agg{std::move(summary.s), std::move(summary.z), std::move(summary.h)};
        auto u = update_model(agg, n, r.model, options);
        ++r.iterations;
        IterationRecord rec;
        rec.iteration = r.iterations;
        rec.displacement = u.displacement;
        rec.degenerate = u.degenerate;
        r.model = std::move(u.model);
        if (options.track_objective) {
            rec.objective = objective(data, r.model);
        }
        r.history.push_back(std::move(rec));
        if (r.history.back().displacement < options.stop_tol) {
            r.converged = true;
            break;
        }
    }
    return r;
}

ConsensusBudgetExhausted::ConsensusBudgetExhausted(std::size_t outer_iteration, const BudgetExhausted& cause)
    : Error("outer iteration " + std::to_string(outer_iteration) + ": " + cause.what()),
      outer_iteration_(outer_iteration),
      cause_(cause) {}

std::uint64_t local_multiplies(Method method, std::size_t n, std::size_t k, std::size_t dim) {
    const std::uint64_t nkd = static_cast<std::uint64_t>(n) * k * dim;
    switch (method) {
        case Method::kmeans: return nkd + static_cast<std::uint64_t>(n) * dim;
        case Method::fca: return 3 * nkd;
        case Method::gmm: return nkd * (dim + 2) + nkd * dim;
    }
    return 0;
}

namespace {

std::uint64_t iteration_seed(std::uint64_t seed, std::size_t iteration) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(iteration)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace

DistributedResult cluster_distributed(const Topology& topology, std::span<const Eigen::MatrixXd> agent_data,
                                      const ClusterModel& init, const DistributedConfig& config,
                                      const ClusterOptions& options) {
    const auto m = topology.num_agents();
    if (agent_data.size() != m) {
        throw DimensionMismatch("got data for " + std::to_string(agent_data.size()) + " agents, topology has " +
                                std::to_string(m));
    }
    std::size_t total = 0;
    for (const auto& d : agent_data) {
        check_dims(d, init);
        total += static_cast<std::size_t>(d.rows());
    }
    if (init.k() > total) {
        throw ConfigError("more clusters than observations");
    }

    const StateLayout layout(init.method, init.k(), init.dim());
    const Consensus consensus(topology, config.variant);
    ConsensusOptions copts = config.consensus;
    copts.record_trajectory = copts.record_trajectory && config.keep_runs;

    DistributedResult r;
    r.models.assign(m, init);
    r.telemetry = Telemetry(topology);
    r.telemetry.state_dim = layout.size();

    while (r.iterations < options.max_iterations) {
        const std::size_t iteration = r.iterations + 1;
        Eigen::MatrixXd states(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(layout.size()));
        for (std::size_t i = 0; i < m; ++i) {
            const auto& data = agent_data[i];
            states.row(static_cast<Eigen::Index>(i)) = layout.pack(local_summaries(data, r.models[i]));
            r.telemetry.add_local(i, local_multiplies(init.method, static_cast<std::size_t>(data.rows()), init.k(),
                                                      init.dim()));
        }

        std::optional<DisturbanceParams> noise;
        if (is_private(config.variant)) {
            noise = config.disturbance;
            noise->seed = iteration_seed(config.disturbance.seed, iteration);
        }
        ConsensusRun run;
        try {
            run = consensus.run(states, copts, noise);
        } catch (const BudgetExhausted& e) {
            throw ConsensusBudgetExhausted(iteration, e);
        }
        r.telemetry.add_consensus(run);
        r.consensus.push_back({run.rounds, run.max_abs_error.back(), run.effective_tol, run.sum_drift(),
                               run.drift_bound()});

        Eigen::MatrixXd sums = run.sum_estimates();
        std::size_t settled = 0;
        double displacement = 0.0;
        std::vector<std::size_t> degenerate;
        for (std::size_t i = 0; i < m; ++i) {
            auto agg = layout.unpack_aggregate(sums.row(static_cast<Eigen::Index>(i)));
            const double count = agg.z.sum();
            auto u = update_model(agg, count, r.models[i], options);
            if (u.displacement < options.stop_tol) {
                ++settled;
            }
            if (i == 0) {
                displacement = u.displacement;
                degenerate = u.degenerate;
            }
            r.models[i] = std::move(u.model);
        }
        r.iterations = iteration;

        IterationRecord rec;
        rec.iteration = iteration;
        rec.displacement = displacement;
        rec.degenerate = std::move(degenerate);
        rec.consensus_rounds = run.rounds;
        for (std::size_t i = 1; i < m; ++i) {
            rec.agent_disagreement = std::max(
                rec.agent_disagreement, (r.models[i].centroids - r.models[0].centroids).cwiseAbs().maxCoeff());
        }
        if (options.track_objective) {
            double total_obj = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                if (agent_data[i].rows() > 0) {
                    total_obj += objective(agent_data[i], r.models[0]);
                }
            }
            rec.objective = total_obj;
        }
        r.history.push_back(std::move(rec));
        if (config.keep_runs) {
            r.runs.push_back(std::move(run));
        }

        if (settled > 0 && settled < m) {
            ++r.stop_disagreements;
        }
        if (settled == m) {
            r.converged = true;
            break;
        }
    }
    r.telemetry.outer_iterations = r.iterations;
    return r;
}

}  // namespace ppdc
