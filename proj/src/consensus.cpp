#include "ppdc/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace ppdc {

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::ac: return "ac";
        case Variant::aac: return "aac";
        case Variant::pp_ac: return "pp-ac";
        case Variant::pp_aac: return "pp-aac";
    }
    return "?";
}

Variant parse_variant(std::string_view name) {
    if (name == "ac") return Variant::ac;
    if (name == "aac") return Variant::aac;
    if (name == "pp-ac" || name == "pp_ac") return Variant::pp_ac;
    if (name == "pp-aac" || name == "pp_aac") return Variant::pp_aac;
    throw ConfigError("unknown consensus variant '" + std::string(name) + "'");
}

void DisturbanceParams::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw ConfigError("disturbance sigma must be positive and finite");
    }
    if (!(beta >= 0.0 && beta < 1.0)) {
        throw ConfigError("disturbance beta must lie in [0, 1)");
    }
}

double DisturbanceParams::radius(std::size_t t) const {
    return 0.5 * sigma * std::pow(beta, static_cast<double>(t + 1));
}

DisturbanceStream::DisturbanceStream(const DisturbanceParams& params, std::size_t num_agents, std::size_t dim,
                                     bool keep_history)
    : params_(params), dim_(dim), keep_history_(keep_history) {
    params_.validate();
    engines_.reserve(num_agents);
    for (std::size_t i = 0; i < num_agents; ++i) {
        std::seed_seq seq{static_cast<std::uint32_t>(params.seed & 0xffffffffu),
                          static_cast<std::uint32_t>(params.seed >> 32), static_cast<std::uint32_t>(i),
                          0x5eedu};
        engines_.emplace_back(seq);
    }
    last_delta_.assign(num_agents, Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(dim)));
    next_round_.assign(num_agents, 0);
    history_.resize(num_agents);
}

double DisturbanceStream::uniform_unit(std::size_t agent) {
    // 53 random mantissa bits, uniform on [0, 1).
    return static_cast<double>(engines_[agent]() >> 11) * 0x1.0p-53;
}

Eigen::RowVectorXd DisturbanceStream::sample(std::size_t agent, std::size_t t) {
    if (agent >= engines_.size()) {
        throw DimensionMismatch("disturbance requested for unknown agent " + std::to_string(agent));
    }
    if (t != next_round_[agent]) {
        throw ConfigError("disturbance rounds must be drawn in order");
    }
    const double r = params_.radius(t);
    Eigen::RowVectorXd delta(static_cast<Eigen::Index>(dim_));
    for (Eigen::Index e = 0; e < delta.size(); ++e) {
        delta[e] = r * (2.0 * uniform_unit(agent) - 1.0);
    }
    Eigen::RowVectorXd theta = delta - last_delta_[agent];
    last_delta_[agent] = delta;
    if (keep_history_) {
        history_[agent].push_back(delta);
    }
    ++next_round_[agent];
    return theta;
}

Protocol make_protocol(const Topology& topology, Variant variant, std::optional<double> alpha_override) {
    Protocol p;
    p.variant = variant;
    p.metropolis = metropolis_weights(topology);
    p.spectrum = spectral_summary(p.metropolis);
    switch (variant) {
        case Variant::ac:
        case Variant::pp_ac:
            p.alpha = 0.0;
            break;
        case Variant::aac:
        case Variant::pp_aac:
            p.alpha = alpha_override.value_or(p.spectrum.alpha_opt);
            break;
    }
    if (variant == Variant::ac) {
        p.mixing = p.metropolis;
    } else {
        p.mixing = accelerated_weights(p.metropolis, p.alpha);
    }
    p.radius = topology.num_agents() == 1 ? 0.0 : disagreement_radius(p.mixing.entries);
    return p;
}

Eigen::MatrixXd mix(const Topology& topology, const Eigen::MatrixXd& mixing, const Eigen::MatrixXd& shared) {
    const auto m = static_cast<Eigen::Index>(topology.num_agents());
    if (mixing.rows() != m || mixing.cols() != m || shared.rows() != m) {
        throw DimensionMismatch("state has " + std::to_string(shared.rows()) + " rows, weights are " +
                                std::to_string(mixing.rows()) + "x" + std::to_string(mixing.cols()) +
                                ", topology has " + std::to_string(m) + " agents");
    }
    Eigen::MatrixXd next(shared.rows(), shared.cols());
    for (Eigen::Index i = 0; i < m; ++i) {
        next.row(i) = mixing(i, i) * shared.row(i);
        for (auto j : topology.neighbors(static_cast<std::size_t>(i))) {
            const auto jj = static_cast<Eigen::Index>(j);
            next.row(i) += mixing(i, jj) * shared.row(jj);
        }
    }
    return next;
}

Eigen::MatrixXd step(const Topology& topology, const Eigen::MatrixXd& mixing, const Eigen::MatrixXd& states,
                     const Eigen::MatrixXd& disturbance) {
    if (disturbance.rows() != states.rows() || disturbance.cols() != states.cols()) {
        throw DimensionMismatch("disturbance shape differs from state shape");
    }
    return mix(topology, mixing, states + disturbance);
}

Eigen::MatrixXd predictor_step(const Topology& topology, const Eigen::MatrixXd& metropolis, double alpha,
                               const Eigen::MatrixXd& states) {
    Eigen::MatrixXd averaged = mix(topology, metropolis, states);
    Eigen::MatrixXd predicted = 2.0 * averaged - states;
    return alpha * predicted + (1.0 - alpha) * averaged;
}

const Eigen::MatrixXd& ConsensusRun::shared(std::size_t t) const {
    if (is_private(variant)) {
        return masked.at(t);
    }
    return trajectory.at(t);
}

Eigen::MatrixXd ConsensusRun::sum_estimates() const {
    return static_cast<double>(num_agents()) * final_state;
}

double ConsensusRun::sum_drift() const {
    return (final_state.colwise().sum() - initial.colwise().sum()).cwiseAbs().maxCoeff();
}

double ConsensusRun::drift_bound() const {
    if (!is_private(variant) || !disturbance) {
        return 0.0;
    }
    return static_cast<double>(num_agents()) * 0.5 * disturbance->sigma *
           std::pow(disturbance->beta, static_cast<double>(rounds));
}

nlohmann::json ConsensusRun::summary_json() const {
    nlohmann::json j{
        {"variant", std::string(to_string(variant))},
        {"alpha", alpha},
        {"agents", num_agents()},
        {"dim", dim()},
        {"rounds", rounds},
        {"termination", termination == Termination::tolerance ? "tolerance" : "budget"},
        {"effective_tol", effective_tol},
        {"final_max_error", max_abs_error.empty() ? 0.0 : max_abs_error.back()},
        {"final_mean_error", mean_abs_error.empty() ? 0.0 : mean_abs_error.back()},
        {"sum_drift", sum_drift()},
        {"drift_bound", drift_bound()},
        {"drift_within_bound", sum_drift() <= drift_bound() + 1e-10},
    };
    if (disturbance) {
        j["sigma"] = disturbance->sigma;
        j["beta"] = disturbance->beta;
        j["seed"] = disturbance->seed;
    }
    return j;
}

void ConsensusRun::write_csv(std::ostream& out) const {
    out << "round,agent,entry,value,masked_value,error\n";
    out.precision(17);
    for (std::size_t t = 0; t < trajectory.size(); ++t) {
        const auto& x = trajectory[t];
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            for (Eigen::Index e = 0; e < x.cols(); ++e) {
                out << t << ',' << i << ',' << e << ',' << x(i, e) << ',';
                if (t < masked.size()) {
                    out << masked[t](i, e);
                }
                out << ',' << std::abs(x(i, e) - true_mean[e]) << '\n';
            }
        }
    }
}

BudgetExhausted::BudgetExhausted(ConsensusRun partial)
    : Error("consensus did not reach tolerance within " + std::to_string(partial.rounds) + " rounds (error " +
            std::to_string(partial.max_abs_error.empty() ? 0.0 : partial.max_abs_error.back()) + ")"),
      run_(std::make_shared<const ConsensusRun>(std::move(partial))) {}

Consensus::Consensus(const Topology& topology, Variant variant, std::optional<double> alpha_override)
    : topology_(topology), protocol_(make_protocol(topology, variant, alpha_override)) {}

namespace {

void record_errors(ConsensusRun& run, const Eigen::MatrixXd& x) {
    Eigen::ArrayXXd dev = (x.rowwise() - run.true_mean).array().abs();
    run.mean_abs_error.push_back(dev.mean());
    run.max_abs_error.push_back(dev.maxCoeff());
}

}  // namespace

ConsensusRun Consensus::run(const Eigen::MatrixXd& initial, const ConsensusOptions& options,
                            const std::optional<DisturbanceParams>& disturbance) const {
    const auto m = topology_.num_agents();
    if (static_cast<std::size_t>(initial.rows()) != m || initial.cols() < 1) {
        throw DimensionMismatch("initial state must have one row per agent (" + std::to_string(m) +
                                ") and at least one column");
    }
    if (!initial.allFinite()) {
        throw DimensionMismatch("initial state contains non-finite entries");
    }
    if (is_private(protocol_.variant) != disturbance.has_value()) {
        throw ConfigError("disturbance parameters are required exactly for the masked variants");
    }
    if (!(options.tol > 0.0) || options.budget < 1) {
        throw ConfigError("consensus needs tol > 0 and a budget of at least one round");
    }

    ConsensusRun run;
    run.variant = protocol_.variant;
    run.mixing = protocol_.mixing.entries;
    run.alpha = protocol_.alpha;
    run.disturbance = disturbance;
    run.initial = initial;
    run.true_mean = initial.colwise().sum() / static_cast<double>(m);
    run.effective_tol = options.tol * std::max(1.0, run.true_mean.cwiseAbs().maxCoeff());
    run.messages.assign(m, 0);
    run.floats_sent.assign(m, 0);
    run.multiplies.assign(m, 0);

    Eigen::MatrixXd x = initial;
    if (options.record_trajectory) {
        run.trajectory.push_back(x);
    }
    record_errors(run, x);

    auto reached = [&] { return options.stop_at_tolerance && run.max_abs_error.back() <= run.effective_tol; };

    std::optional<DisturbanceStream> stream;
    if (disturbance) {
        stream.emplace(*disturbance, m, static_cast<std::size_t>(initial.cols()));
    }

    const auto dim = static_cast<std::uint64_t>(initial.cols());
    bool converged = reached();
    while (!converged && run.rounds < options.budget) {
        const std::size_t t = run.rounds;
        Eigen::MatrixXd next;
        if (stream) {
            Eigen::MatrixXd theta(x.rows(), x.cols());
            for (std::size_t i = 0; i < m; ++i) {
                theta.row(static_cast<Eigen::Index>(i)) = stream->sample(i, t);
            }
            Eigen::MatrixXd plus = x + theta;
            next = mix(topology_, protocol_.mixing.entries, plus);
            if (options.record_trajectory) {
                run.masked.push_back(std::move(plus));
                run.thetas.push_back(std::move(theta));
            }
        } else {
            next = mix(topology_, protocol_.mixing.entries, x);
        }
        for (std::size_t i = 0; i < m; ++i) {
            const auto d = static_cast<std::uint64_t>(topology_.degree(i));
            run.messages[i] += d;
            run.floats_sent[i] += d * dim;
            run.multiplies[i] += (d + 1) * dim;
        }
        x = std::move(next);
        ++run.rounds;
        if (options.record_trajectory) {
            run.trajectory.push_back(x);
        }
        record_errors(run, x);
        converged = reached();
    }

    run.final_state = x;
    if (options.stop_at_tolerance) {
        run.termination = converged ? Termination::tolerance : Termination::budget;
        if (!converged) {
            throw BudgetExhausted(std::move(run));
        }
    } else {
        run.termination = Termination::budget;
    }
    return run;
}

ConsensusRun run_consensus(Variant variant, const Topology& topology, const Eigen::MatrixXd& initial,
                           const std::optional<DisturbanceParams>& disturbance, const ConsensusOptions& options) {
    return Consensus(topology, variant).run(initial, options, disturbance);
}

const std::vector<double>& convergence_curve(const ConsensusRun& run) { return run.mean_abs_error; }

double tail_log_slope(std::span<const double> curve, std::size_t first, std::size_t last) {
    last = std::min(last, curve.size());
    if (last <= first + 1) {
        throw ConfigError("slope fit needs at least two points");
    }
    const double n = static_cast<double>(last - first);
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t t = first; t < last; ++t) {
        const double xv = static_cast<double>(t);
        const double yv = std::log10(std::max(curve[t], std::numeric_limits<double>::min()));
        sx += xv;
        sy += yv;
        sxx += xv * xv;
        sxy += xv * yv;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::size_t ConvergenceBound::rounds_for(double tol) const {
    if (constant <= tol || rate <= 0.0) {
        return 1;
    }
    if (rate >= 1.0) {
        throw ConfigError("convergence rate must be below 1 for a finite round budget");
    }
    auto t = std::ceil(std::log(tol / constant) / std::log(rate));
    return std::max<std::size_t>(1, static_cast<std::size_t>(t));
}

ConvergenceBound convergence_bound(const Eigen::MatrixXd& initial, double radius,
                                   const std::optional<DisturbanceParams>& disturbance) {
    const double m = static_cast<double>(initial.rows());
    Eigen::RowVectorXd mean = initial.colwise().sum() / m;
    // Disagreement in the 2-norm over agents bounds every per-agent deviation.
    const double spread = (initial.rowwise() - mean).colwise().norm().maxCoeff();

    ConvergenceBound b;
    if (!disturbance || disturbance->beta == 0.0) {
        b.rate = radius;
        b.constant = spread;
        return b;
    }
    const double beta = disturbance->beta;
    const double half = 0.5 * disturbance->sigma;
    const double top = std::max(radius, beta);
    const double ratio = std::min(radius, beta) / top;
    // sum_{s<t} radius^(t-s) beta^s <= factor * rate^t
    double factor = 0.0;
    if (ratio <= 0.9) {
        b.rate = top;
        factor = 1.0 / (1.0 - ratio);
    } else {
        // t * top^t <= rate^t / (e ln(rate / top)) with rate = sqrt(top)
        b.rate = std::sqrt(top);
        factor = 1.0 / (std::exp(1.0) * std::log(b.rate / top));
    }
    b.constant = spread + std::sqrt(m) * half * (1.0 + beta) * factor + half;
    return b;
}

std::size_t spectral_round_budget(double radius, double tol, double initial_error) {
    return ConvergenceBound{radius, initial_error}.rounds_for(tol);
}

}  // namespace ppdc
