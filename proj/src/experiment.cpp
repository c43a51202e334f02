#include "ppdc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include "ppdc/metrics.hpp"
#include "ppdc/privacy.hpp"

namespace ppdc {

namespace {

constexpr const char* kToolVersion = "ppdc 0.1.0";

// Independent streams for the partition, the public init and the masks.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

enum SeedTag : std::uint64_t { kData = 1, kPartition = 2, kInit = 3, kMask = 4, kStandardize = 5 };

DisturbanceParams mask_params(const ExperimentConfig& c) {
    return {c.sigma, c.beta, derive_seed(c.seed, kMask)};
}

ConsensusOptions consensus_options(const ExperimentConfig& c) {
    return {c.consensus_tol, c.consensus_budget, !c.fixed_budget, false};
}

class Output {
public:
    explicit Output(const std::string& dir) : dir_(dir) { std::filesystem::create_directories(dir_); }

    std::ofstream open(const std::string& name) {
        std::ofstream f(dir_ / name, std::ios::binary);
        if (!f) {
            throw ConfigError("cannot write " + (dir_ / name).string());
        }
        f.precision(17);
        files_.push_back(name);
        return f;
    }

    void json(const std::string& name, const nlohmann::json& doc) { open(name) << doc.dump(2) << '\n'; }

    const std::vector<std::string>& files() const { return files_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

void write_assignments(std::ostream& out, const Setup& setup, const std::vector<ClusterModel>& models) {
    const auto k = models.front().k();
    out << "owner,local_id,cluster";
    for (std::size_t c = 0; c < k; ++c) {
        out << ",w" << c;
    }
    out << '\n';
    for (std::size_t a = 0; a < setup.agent_data.size(); ++a) {
        const auto& data = setup.agent_data[a];
        const auto w = memberships(data, models[a]);
        const auto labels = hard_assignments(data, models[a]);
        for (Eigen::Index n = 0; n < data.rows(); ++n) {
            out << a << ',' << n << ',' << labels[static_cast<std::size_t>(n)];
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                out << ',' << w(n, c);
            }
            out << '\n';
        }
    }
}

void write_history(std::ostream& out, const std::vector<IterationRecord>& history) {
    out << "iteration,displacement,consensus_rounds,agent_disagreement,objective\n";
    for (const auto& r : history) {
        out << r.iteration << ',' << r.displacement << ',' << r.consensus_rounds << ',' << r.agent_disagreement << ',';
        if (r.objective) {
            out << *r.objective;
        }
        out << '\n';
    }
}

nlohmann::json consensus_records(const std::vector<ConsensusRecord>& records) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : records) {
        j.push_back({{"rounds", r.rounds},
                     {"final_max_error", r.final_max_error},
                     {"effective_tol", r.effective_tol},
                     {"sum_drift", r.sum_drift},
                     {"drift_bound", r.drift_bound}});
    }
    return j;
}

Eigen::MatrixXd pooled(const Setup& setup) {
    return setup.dataset.observations;
}

}  // namespace

std::string_view to_string(Recipe r) {
    switch (r) {
        case Recipe::consensus_compare: return "consensus-compare";
        case Recipe::cluster: return "cluster";
        case Recipe::compare_centralized: return "compare-centralized";
        case Recipe::ksweep: return "ksweep";
        case Recipe::topology_sweep: return "topology-sweep";
        case Recipe::attack: return "attack";
    }
    return "cluster";
}

Recipe parse_recipe(std::string_view name) {
    for (auto r : {Recipe::consensus_compare, Recipe::cluster, Recipe::compare_centralized, Recipe::ksweep,
                   Recipe::topology_sweep, Recipe::attack}) {
        if (to_string(r) == name) {
            return r;
        }
    }
    throw ConfigError("unknown recipe '" + std::string(name) + "'");
}

std::string_view to_string(StandardizeMode s) {
    switch (s) {
        case StandardizeMode::none: return "none";
        case StandardizeMode::zscore: return "zscore";
        case StandardizeMode::distributed: return "distributed";
    }
    return "zscore";
}

StandardizeMode parse_standardize(std::string_view name) {
    if (name == "none") return StandardizeMode::none;
    if (name == "zscore") return StandardizeMode::zscore;
    if (name == "distributed") return StandardizeMode::distributed;
    throw ConfigError("unknown standardization '" + std::string(name) + "'");
}

nlohmann::json ExperimentConfig::to_json() const {
    return {
        {"recipe", std::string(to_string(recipe))},
        {"method", std::string(to_string(method))},
        {"k", k},
        {"fuzziness", fuzziness},
        {"stop_tol", stop_tol},
        {"max_iterations", max_iterations},
        {"covariance_reg", covariance_reg},
        {"variant", std::string(to_string(variant))},
        {"sigma", sigma},
        {"beta", beta},
        {"consensus_tol", consensus_tol},
        {"consensus_budget", consensus_budget},
        {"fixed_budget", fixed_budget},
        {"topology", topology},
        {"agents", agents},
        {"topology_sequence", topology_sequence},
        {"data_files", data_files},
        {"components", components},
        {"per_component", per_component},
        {"dim", dim},
        {"spread", spread},
        {"standardize", std::string(to_string(standardize))},
        {"partition", to_string(partition)},
        {"proportions", proportions},
        {"k_min", k_min},
        {"k_max", k_max},
        {"compare_rounds", compare_rounds},
        {"sweep_tol", sweep_tol},
        {"equivalence_tol", equivalence_tol},
        {"observer", observer ? nlohmann::json(*observer) : nlohmann::json(nullptr)},
        {"target", target ? nlohmann::json(*target) : nlohmann::json(nullptr)},
        {"seed", seed},
        {"out", out},
    };
}

void ExperimentConfig::merge_json(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw ConfigError("configuration must be a JSON object");
    }
    using J = const nlohmann::json&;
    auto optional_index = [](J v) { return v.is_null() ? std::nullopt : std::optional<std::size_t>(v.get<std::size_t>()); };
    const std::map<std::string, std::function<void(J)>> setters{
        {"recipe", [&](J v) { recipe = parse_recipe(v.get<std::string>()); }},
        {"method", [&](J v) { method = parse_method(v.get<std::string>()); }},
        {"k", [&](J v) { k = v.get<std::size_t>(); }},
        {"fuzziness", [&](J v) { fuzziness = v.get<double>(); }},
        {"stop_tol", [&](J v) { stop_tol = v.get<double>(); }},
        {"max_iterations", [&](J v) { max_iterations = v.get<std::size_t>(); }},
        {"covariance_reg", [&](J v) { covariance_reg = v.get<double>(); }},
        {"variant", [&](J v) { variant = parse_variant(v.get<std::string>()); }},
        {"sigma", [&](J v) { sigma = v.get<double>(); }},
        {"beta", [&](J v) { beta = v.get<double>(); }},
        {"consensus_tol", [&](J v) { consensus_tol = v.get<double>(); }},
        {"consensus_budget", [&](J v) { consensus_budget = v.get<std::size_t>(); }},
        {"fixed_budget", [&](J v) { fixed_budget = v.get<bool>(); }},
        {"topology", [&](J v) { topology = v.get<std::string>(); }},
        {"agents", [&](J v) { agents = v.get<std::size_t>(); }},
        {"topology_sequence", [&](J v) { topology_sequence = v.get<std::vector<std::string>>(); }},
        {"data_files", [&](J v) { data_files = v.get<std::vector<std::string>>(); }},
        {"components", [&](J v) { components = v.get<std::size_t>(); }},
        {"per_component", [&](J v) { per_component = v.get<std::size_t>(); }},
        {"dim", [&](J v) { dim = v.get<std::size_t>(); }},
        {"spread", [&](J v) { spread = v.get<double>(); }},
        {"standardize", [&](J v) { standardize = parse_standardize(v.get<std::string>()); }},
        {"partition", [&](J v) { partition = parse_partition_policy(v.get<std::string>()); }},
        {"proportions", [&](J v) { proportions = v.get<std::vector<double>>(); }},
        {"k_min", [&](J v) { k_min = v.get<std::size_t>(); }},
        {"k_max", [&](J v) { k_max = v.get<std::size_t>(); }},
        {"compare_rounds", [&](J v) { compare_rounds = v.get<std::size_t>(); }},
        {"sweep_tol", [&](J v) { sweep_tol = v.get<double>(); }},
        {"equivalence_tol", [&](J v) { equivalence_tol = v.get<double>(); }},
        {"observer", [&](J v) { observer = optional_index(v); }},
        {"target", [&](J v) { target = optional_index(v); }},
        {"seed", [&](J v) { seed = v.get<std::uint64_t>(); }},
        {"out", [&](J v) { out = v.get<std::string>(); }},
    };
    for (const auto& [key, value] : doc.items()) {
        auto it = setters.find(key);
        if (it == setters.end()) {
            throw ConfigError("unknown configuration key '" + key + "'");
        }
        try {
            it->second(value);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("bad value for '" + key + "': " + e.what());
        }
    }
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc) {
    ExperimentConfig c;
    c.merge_json(doc);
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open configuration " + path);
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("malformed configuration " + path + ": " + e.what());
    }
    return from_json(doc);
}

void ExperimentConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) {
            throw ConfigError(what);
        }
    };
    require(k >= 1, "k must be at least 1");
    require(fuzziness > 1.0 && std::isfinite(fuzziness), "fuzziness must exceed 1");
    require(stop_tol > 0.0, "stop_tol must be positive");
    require(max_iterations >= 1, "max_iterations must be at least 1");
    require(covariance_reg >= 0.0 && std::isfinite(covariance_reg), "covariance_reg must be nonnegative");
    require(consensus_tol > 0.0, "consensus_tol must be positive");
    require(consensus_budget >= 1, "consensus_budget must be at least 1");
    DisturbanceParams{sigma, beta, seed}.validate();
    require(agents >= 1, "agents must be at least 1");
    require(components >= 1 && per_component >= 1, "component counts must be positive");
    require(dim >= 1, "dim must be at least 1");
    require(spread >= 0.0 && std::isfinite(spread), "spread must be nonnegative");
    require(k_min >= 2 && k_min <= k_max, "ksweep needs 2 <= k_min <= k_max");
    require(compare_rounds >= 2, "compare_rounds must be at least 2");
    require(sweep_tol > 0.0, "sweep_tol must be positive");
    require(equivalence_tol > 0.0, "equivalence_tol must be positive");
    require(partition != PartitionPolicy::proportions || !proportions.empty(),
            "proportions policy needs proportions");
    require(partition != PartitionPolicy::by_file || data_files.size() >= 1,
            "by-file policy needs one data file per agent");
    require(recipe != Recipe::topology_sweep || topology_sequence.size() >= 2,
            "topology-sweep needs at least two topologies");
    require(!out.empty(), "output directory must be set");
}

Topology resolve_topology(const std::string& source, std::size_t agents) {
    const std::string prefix = "builtin:";
    if (source.rfind(prefix, 0) == 0) {
        return builtin_topology(source.substr(prefix.size()), agents);
    }
    return Topology::load(source);
}

Setup prepare(const ExperimentConfig& config) {
    config.validate();
    Setup s{resolve_topology(config.topology, config.agents), {}, {}, 1.0, {}, {}};
    const auto m = s.topology.num_agents();

    if (config.data_files.empty()) {
        auto specs = template_components(config.components, config.per_component, config.dim, config.spread);
        s.dataset = synth_profiles(specs, derive_seed(config.seed, kData));
    } else if (config.partition == PartitionPolicy::by_file) {
        s.dataset = load_agent_files(config.data_files, false);
    } else {
        if (config.data_files.size() != 1) {
            throw ConfigError("several data files need the by-file partition policy");
        }
        s.dataset = load_profiles(config.data_files.front(), false);
    }

    Ownership own;
    switch (config.partition) {
        case PartitionPolicy::equal:
            own = partition_equal(s.dataset.size(), m, derive_seed(config.seed, kPartition));
            break;
        case PartitionPolicy::proportions:
            if (config.proportions.size() != m) {
                throw InfeasiblePolicy("need one proportion per agent");
            }
            own = partition_proportions(s.dataset.size(), config.proportions, derive_seed(config.seed, kPartition));
            break;
        case PartitionPolicy::by_file:
            own = partition_by_owner(s.dataset.owner, m);
            break;
    }
    apply_ownership(s.dataset, own);

    switch (config.standardize) {
        case StandardizeMode::none:
            break;
        case StandardizeMode::zscore:
            standardize(s.dataset);
            break;
        case StandardizeMode::distributed: {
            auto raw = s.dataset.agent_data();
            DisturbanceParams noise{config.sigma, config.beta, derive_seed(config.seed, kStandardize)};
            auto per_agent = distributed_standardization(s.topology, raw, noise, consensus_options(config));
            for (std::size_t n = 0; n < s.dataset.size(); ++n) {
                const auto row = static_cast<Eigen::Index>(n);
                const auto& st = per_agent[s.dataset.owner[n]];
                s.dataset.observations.row(row) =
                    (s.dataset.observations.row(row) - st.mean).array() / st.scale.array();
            }
            s.dataset.standardization = per_agent.front();
            break;
        }
    }
    s.agent_data = s.dataset.agent_data();

    const auto& obs = s.dataset.observations;
    s.data_variance = ((obs.rowwise() - obs.colwise().mean()).array().square().colwise().sum() /
                       static_cast<double>(obs.rows()))
                          .mean();
    if (!(s.data_variance > 0.0)) {
        s.data_variance = 1.0;
    }
    s.options.stop_tol = config.stop_tol;
    s.options.max_iterations = config.max_iterations;
    s.options.covariance_reg = config.covariance_reg * s.data_variance;
    s.distributed.variant = config.variant;
    s.distributed.consensus = consensus_options(config);
    s.distributed.disturbance = mask_params(config);
    return s;
}

ClusterModel public_init(const ExperimentConfig& config, const Setup& setup, std::size_t k) {
    auto centroids = forgy_init(pooled(setup), k, derive_seed(config.seed, kInit + 100 * k));
    return initial_model(config.method, centroids, setup.data_variance, config.fuzziness);
}

Eigen::MatrixXd summary_states(const Setup& setup, const ClusterModel& model) {
    const StateLayout layout(model.method, model.k(), model.dim());
    Eigen::MatrixXd states(static_cast<Eigen::Index>(setup.agent_data.size()), static_cast<Eigen::Index>(layout.size()));
    for (std::size_t a = 0; a < setup.agent_data.size(); ++a) {
        states.row(static_cast<Eigen::Index>(a)) = layout.pack(local_summaries(setup.agent_data[a], model));
    }
    return states;
}

std::vector<VariantCurve> compare_variants(const Topology& topology, const Eigen::MatrixXd& initial,
                                           const DisturbanceParams& disturbance, std::size_t rounds,
                                           std::size_t fit_first, double floor_ratio) {
    const ConsensusOptions options{1e-300, rounds, false, false};
    std::vector<VariantCurve> out;
    for (auto v : {Variant::ac, Variant::aac, Variant::pp_ac, Variant::pp_aac}) {
        const Consensus c(topology, v);
        std::optional<DisturbanceParams> noise;
        if (is_private(v)) {
            noise = disturbance;
        }
        auto run = c.run(initial, options, noise);
        VariantCurve curve;
        curve.variant = v;
        curve.alpha = run.alpha;
        curve.mean_abs_error = run.mean_abs_error;
        curve.max_abs_error = run.max_abs_error;
        const auto& e = curve.mean_abs_error;
        const double floor = floor_ratio * e.front();
        curve.fit_first = std::min(fit_first, e.size() - 2);
        curve.fit_last = curve.fit_first + 2;
        while (curve.fit_last < e.size() && e[curve.fit_last] >= floor) {
            ++curve.fit_last;
        }
        curve.tail_slope = tail_log_slope(e, curve.fit_first, curve.fit_last);
        out.push_back(std::move(curve));
    }
    return out;
}

nlohmann::json Equivalence::to_json() const {
    return {{"method", std::string(to_string(method))},
            {"k", k},
            {"iterations_centralized", iterations_centralized},
            {"iterations_distributed", iterations_distributed},
            {"centroid_gap", centroid_gap},
            {"sci_centralized", sci_centralized},
            {"sci_distributed", sci_distributed},
            {"sse_centralized", sse_centralized},
            {"sse_distributed", sse_distributed},
            {"stop_disagreements", stop_disagreements},
            {"consensus_rounds", consensus_rounds}};
}

Equivalence compare_centralized(const Setup& setup, const ClusterModel& init, DistributedResult* distributed) {
    const auto data = pooled(setup);
    const auto central = cluster_centralized(data, init, setup.options);
    const auto dist = cluster_distributed(setup.topology, setup.agent_data, init, setup.distributed, setup.options);

    Equivalence e;
    e.method = init.method;
    e.k = init.k();
    e.iterations_centralized = central.iterations;
    e.iterations_distributed = dist.iterations;
    for (const auto& m : dist.models) {
        e.centroid_gap = std::max(e.centroid_gap, (m.centroids - central.model.centroids).cwiseAbs().maxCoeff());
    }
    const auto labels_c = hard_assignments(data, central.model);
    const auto labels_d = hard_assignments(data, dist.models.front());
    e.sse_centralized = sse(data, central.model.centroids, labels_c);
    e.sse_distributed = sse(data, dist.models.front().centroids, labels_d);
    e.sci_centralized = silhouette(data, labels_c);
    e.sci_distributed = silhouette(data, labels_d);
    e.stop_disagreements = dist.stop_disagreements;
    e.consensus_rounds = dist.telemetry.total_rounds();
    if (distributed) {
        *distributed = dist;
    }
    return e;
}

std::vector<SweepRow> topology_sweep(const std::vector<std::string>& sources, std::size_t agents,
                                     const Eigen::MatrixXd& initial, const DisturbanceParams& disturbance,
                                     double tol, std::size_t budget) {
    std::vector<SweepRow> rows;
    for (const auto& src : sources) {
        const auto topo = resolve_topology(src, agents);
        if (topo.num_agents() != static_cast<std::size_t>(initial.rows())) {
            throw DimensionMismatch(src + " has " + std::to_string(topo.num_agents()) + " agents, expected " +
                                    std::to_string(initial.rows()));
        }
        const Consensus c(topo, Variant::pp_aac);
        const auto run = c.run(initial, {tol, budget, true, false}, disturbance);
        rows.push_back({src, topo.num_edges(), topo.mean_extended_degree(), c.protocol().spectrum.radius_gap,
                        run.rounds});
    }
    return rows;
}

namespace {

void recipe_consensus_compare(const ExperimentConfig& config, const Setup& setup, Output& out,
                              ExperimentResult& result) {
    const auto init = public_init(config, setup, config.k);
    const auto states = summary_states(setup, init);
    const auto curves = compare_variants(setup.topology, states, mask_params(config), config.compare_rounds);

    auto f = out.open("curves.csv");
    f << "variant,round,mean_abs_error,max_abs_error\n";
    nlohmann::json variants = nlohmann::json::array();
    for (const auto& c : curves) {
        for (std::size_t t = 0; t < c.mean_abs_error.size(); ++t) {
            f << to_string(c.variant) << ',' << t << ',' << c.mean_abs_error[t] << ',' << c.max_abs_error[t] << '\n';
        }
        variants.push_back({{"variant", std::string(to_string(c.variant))},
                            {"alpha", c.alpha},
                            {"tail_slope", c.tail_slope},
                            {"fit_rounds", {c.fit_first, c.fit_last}},
                            {"terminal_mean_error", c.mean_abs_error.back()}});
    }
    const auto spectrum = spectral_summary(metropolis_weights(setup.topology));
    result.report["spectrum"] = spectrum.to_json();
    result.report["variants"] = variants;
    result.report["state_dim"] = states.cols();
}

void recipe_cluster(const ExperimentConfig& config, const Setup& setup, Output& out, ExperimentResult& result) {
    const auto init = public_init(config, setup, config.k);
    auto options = setup.options;
    options.track_objective = true;
    const auto dist = cluster_distributed(setup.topology, setup.agent_data, init, setup.distributed, options);

    auto curves = out.open("curves.csv");
    write_history(curves, dist.history);
    auto assignments = out.open("assignments.csv");
    write_assignments(assignments, setup, dist.models);
    auto telemetry = out.open("telemetry.csv");
    dist.telemetry.write_csv(telemetry);

    const auto data = pooled(setup);
    const auto labels = hard_assignments(data, dist.models.front());
    result.report["model"] = dist.models.front().to_json();
    result.report["iterations"] = dist.iterations;
    result.report["converged"] = dist.converged;
    result.report["stop_disagreements"] = dist.stop_disagreements;
    result.report["sse"] = sse(data, dist.models.front().centroids, labels);
    try {
        result.report["sci"] = silhouette(data, labels);
    } catch (const DegenerateClustering&) {
        result.report["sci"] = nullptr;
    }
    result.report["consensus"] = consensus_records(dist.consensus);
    result.report["telemetry"] = dist.telemetry.to_json();
}

void recipe_compare_centralized(const ExperimentConfig& config, const Setup& setup, Output& out,
                                ExperimentResult& result) {
    const auto init = public_init(config, setup, config.k);
    DistributedResult dist;
    const auto eq = compare_centralized(setup, init, &dist);

    auto curves = out.open("curves.csv");
    write_history(curves, dist.history);
    auto assignments = out.open("assignments.csv");
    write_assignments(assignments, setup, dist.models);
    auto telemetry = out.open("telemetry.csv");
    dist.telemetry.write_csv(telemetry);

    const bool centroids_ok = eq.centroid_gap <= config.equivalence_tol;
    const bool iterations_ok = eq.iterations_centralized == eq.iterations_distributed;
    result.passed = centroids_ok && iterations_ok;
    result.report["equivalence"] = eq.to_json();
    result.report["checks"] = {{"centroid_gap_within_tol", centroids_ok},
                               {"equal_iterations", iterations_ok},
                               {"tolerance", config.equivalence_tol}};
    result.report["telemetry"] = dist.telemetry.to_json();
}

void recipe_ksweep(const ExperimentConfig& config, const Setup& setup, Output& out, ExperimentResult& result) {
    const auto data = pooled(setup);
    auto f = out.open("curves.csv");
    f << "k,sse,sci,iterations,consensus_rounds\n";
    nlohmann::json rows = nlohmann::json::array();
    std::vector<double> sse_curve;
    for (std::size_t k = config.k_min; k <= config.k_max; ++k) {
        const auto init = public_init(config, setup, k);
        const auto dist = cluster_distributed(setup.topology, setup.agent_data, init, setup.distributed, setup.options);
        const auto labels = hard_assignments(data, dist.models.front());
        const double e = sse(data, dist.models.front().centroids, labels);
        std::optional<double> sci;
        try {
            sci = silhouette(data, labels);
        } catch (const DegenerateClustering&) {
        }
        sse_curve.push_back(e);
        f << k << ',' << e << ',';
        if (sci) {
            f << *sci;
        }
        f << ',' << dist.iterations << ',' << dist.telemetry.total_rounds() << '\n';
        rows.push_back({{"k", k},
                        {"sse", e},
                        {"sci", sci ? nlohmann::json(*sci) : nlohmann::json(nullptr)},
                        {"iterations", dist.iterations},
                        {"consensus_rounds", dist.telemetry.total_rounds()}});
    }
    result.report["sweep"] = rows;
    if (sse_curve.size() >= 3) {
        result.report["elbow_k"] = config.k_min + elbow_index(sse_curve);
    }
}

void recipe_topology_sweep(const ExperimentConfig& config, const Setup& setup, Output& out,
                           ExperimentResult& result) {
    const auto init = public_init(config, setup, config.k);
    const auto states = summary_states(setup, init);
    const auto rows = topology_sweep(config.topology_sequence, config.agents, states, mask_params(config),
                                     config.sweep_tol, config.consensus_budget);
    auto f = out.open("curves.csv");
    f << "index,source,edges,mean_extended_degree,radius_gap,rounds\n";
    nlohmann::json j = nlohmann::json::array();
    std::vector<double> gaps, rounds;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        f << i << ',' << r.source << ',' << r.edges << ',' << r.mean_extended_degree << ',' << r.radius_gap << ','
          << r.rounds << '\n';
        j.push_back({{"source", r.source},
                     {"edges", r.edges},
                     {"mean_extended_degree", r.mean_extended_degree},
                     {"radius_gap", r.radius_gap},
                     {"rounds", r.rounds}});
        gaps.push_back(r.radius_gap);
        rounds.push_back(static_cast<double>(r.rounds));
    }
    result.report["topologies"] = j;
    result.report["spearman_rounds_vs_radius_gap"] = spearman(rounds, gaps);
}

void recipe_attack(const ExperimentConfig& config, const Setup& setup, Output& out, ExperimentResult& result) {
    const auto& topo = setup.topology;
    const auto pairs = vulnerable_pairs(topo);
    std::size_t observer = config.observer.value_or(0);
    std::size_t target = 0;
    if (config.target) {
        target = *config.target;
    } else if (!config.observer && !pairs.empty()) {
        target = pairs.front().first;
        observer = pairs.front().second;
    } else if (observer < topo.num_agents() && topo.degree(observer) > 0) {
        target = topo.neighbors(observer).front();
    }
    if (observer >= topo.num_agents() || target >= topo.num_agents() || !topo.adjacent(observer, target)) {
        throw NotNeighbors(observer, target);
    }

    const auto init = public_init(config, setup, config.k);
    const StateLayout layout(init.method, init.k(), init.dim());
    const auto truth_summary = local_summaries(setup.agent_data[target], init);
    const auto truth = privacy_set(truth_summary, layout);
    const auto states = summary_states(setup, init);

    ConsensusOptions options = consensus_options(config);
    options.record_trajectory = true;
    std::optional<DisturbanceParams> noise;
    if (is_private(config.variant)) {
        noise = mask_params(config);
    }
    const auto run = Consensus(topo, config.variant).run(states, options, noise);
    const auto view = attack_run(run, topo, layout, observer, target, truth);

    auto f = out.open("curves.csv");
    f << "round,entry,true_value,shared_value\n";
    const auto j = static_cast<Eigen::Index>(target);
    for (std::size_t t = 0; t < run.rounds; ++t) {
        const auto& x = run.trajectory[t];
        const auto& shared = run.shared(t);
        for (Eigen::Index e = 0; e < x.cols(); ++e) {
            f << t << ',' << e << ',' << x(j, e) << ',' << shared(j, e) << '\n';
        }
    }
    nlohmann::json vp = nlohmann::json::array();
    for (auto [a, b] : pairs) {
        vp.push_back({a, b});
    }
    result.report["vulnerable_pairs"] = vp;
    result.report["view"] = view.to_json();
    result.report["truth"] = truth.to_json();
    result.report["round0_max_mask"] = (run.shared(0).row(j) - states.row(j)).cwiseAbs().maxCoeff();
    result.report["consensus"] = run.summary_json();
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    ExperimentResult result;
    try {
        const auto setup = prepare(config);
        Output out(config.out);
        result.report["recipe"] = std::string(to_string(config.recipe));
        result.report["agents"] = setup.topology.num_agents();
        result.report["observations"] = setup.dataset.size();
        result.report["dim"] = setup.dataset.dim();
        result.report["topology"] = setup.topology.to_json();
        switch (config.recipe) {
            case Recipe::consensus_compare: recipe_consensus_compare(config, setup, out, result); break;
            case Recipe::cluster: recipe_cluster(config, setup, out, result); break;
            case Recipe::compare_centralized: recipe_compare_centralized(config, setup, out, result); break;
            case Recipe::ksweep: recipe_ksweep(config, setup, out, result); break;
            case Recipe::topology_sweep: recipe_topology_sweep(config, setup, out, result); break;
            case Recipe::attack: recipe_attack(config, setup, out, result); break;
        }
        result.report["passed"] = result.passed;
        result.report["config"] = config.to_json();
        out.json("report.json", result.report);
        auto files = out.files();
        files.push_back("manifest.json");
        out.json("manifest.json", {{"tool", kToolVersion},
                                   {"state_layout_version", StateLayout::kVersion},
                                   {"seed", config.seed},
                                   {"config", config.to_json()},
                                   {"files", files}});
        result.files = files;
    } catch (const RecipeError&) {
        throw;
    } catch (const Error& e) {
        throw RecipeError(config.recipe, e.what());
    }
    return result;
}

}  // namespace ppdc
