// Command-line front end: one subcommand per experiment recipe.
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ppdc/experiment.hpp"

namespace {

using ppdc::ExperimentConfig;

// Raw flag values. Enumerations stay strings until merged so the config file
// and the flags go through the same parsers.
struct Flags {
    ExperimentConfig cfg;
    std::string method, variant, standardize, partition;
    std::size_t observer = 0, target = 0;
    std::string config_path;
};

using Apply = std::function<void(ExperimentConfig&, const Flags&)>;

struct Binding {
    CLI::Option* option;
    Apply apply;
};

std::vector<Binding> add_flags(CLI::App& app, Flags& f) {
    std::vector<Binding> b;
    auto& c = f.cfg;
    app.add_option("--config", f.config_path, "JSON configuration; flags override its fields");
    b.push_back({app.add_option("--method", f.method, "kmeans | fca | gmm"),
                 [](auto& d, const auto& s) { d.method = ppdc::parse_method(s.method); }});
    b.push_back({app.add_option("--k", c.k, "number of clusters"), [](auto& d, const auto& s) { d.k = s.cfg.k; }});
    b.push_back({app.add_option("--fuzziness", c.fuzziness, "FCA exponent m > 1"),
                 [](auto& d, const auto& s) { d.fuzziness = s.cfg.fuzziness; }});
    b.push_back({app.add_option("--stop-tol", c.stop_tol, "max centroid displacement that stops clustering"),
                 [](auto& d, const auto& s) { d.stop_tol = s.cfg.stop_tol; }});
    b.push_back({app.add_option("--max-iterations", c.max_iterations, "outer iteration budget"),
                 [](auto& d, const auto& s) { d.max_iterations = s.cfg.max_iterations; }});
    b.push_back({app.add_option("--covariance-reg", c.covariance_reg, "GMM ridge, relative to data variance"),
                 [](auto& d, const auto& s) { d.covariance_reg = s.cfg.covariance_reg; }});
    b.push_back({app.add_option("--variant", f.variant, "ac | aac | pp-ac | pp-aac"),
                 [](auto& d, const auto& s) { d.variant = ppdc::parse_variant(s.variant); }});
    b.push_back({app.add_option("--sigma", c.sigma, "disturbance amplitude"),
                 [](auto& d, const auto& s) { d.sigma = s.cfg.sigma; }});
    b.push_back({app.add_option("--beta", c.beta, "disturbance decay in [0, 1)"),
                 [](auto& d, const auto& s) { d.beta = s.cfg.beta; }});
    b.push_back({app.add_option("--tol", c.consensus_tol, "consensus tolerance (relative to the average's scale)"),
                 [](auto& d, const auto& s) { d.consensus_tol = s.cfg.consensus_tol; }});
    b.push_back({app.add_option("--budget", c.consensus_budget, "consensus round budget"),
                 [](auto& d, const auto& s) { d.consensus_budget = s.cfg.consensus_budget; }});
    b.push_back({app.add_flag("--fixed-budget", c.fixed_budget, "always run the full round budget"),
                 [](auto& d, const auto& s) { d.fixed_budget = s.cfg.fixed_budget; }});
    b.push_back({app.add_option("--topology", c.topology, "builtin:NAME or a JSON edge file"),
                 [](auto& d, const auto& s) { d.topology = s.cfg.topology; }});
    b.push_back({app.add_option("--agents", c.agents, "agent count for builtin families"),
                 [](auto& d, const auto& s) { d.agents = s.cfg.agents; }});
    b.push_back({app.add_option("--topology-sequence", c.topology_sequence, "topology sources for the sweep")->delimiter(','),
                 [](auto& d, const auto& s) { d.topology_sequence = s.cfg.topology_sequence; }});
    b.push_back({app.add_option("--data", c.data_files, "profile CSV files (omit for synthetic data)")->delimiter(','),
                 [](auto& d, const auto& s) { d.data_files = s.cfg.data_files; }});
    b.push_back({app.add_option("--components", c.components, "synthetic daily shapes"),
                 [](auto& d, const auto& s) { d.components = s.cfg.components; }});
    b.push_back({app.add_option("--per-component", c.per_component, "synthetic profiles per shape"),
                 [](auto& d, const auto& s) { d.per_component = s.cfg.per_component; }});
    b.push_back({app.add_option("--dim", c.dim, "synthetic profile length"),
                 [](auto& d, const auto& s) { d.dim = s.cfg.dim; }});
    b.push_back({app.add_option("--spread", c.spread, "synthetic noise standard deviation"),
                 [](auto& d, const auto& s) { d.spread = s.cfg.spread; }});
    b.push_back({app.add_option("--standardize", f.standardize, "none | zscore | distributed"),
                 [](auto& d, const auto& s) { d.standardize = ppdc::parse_standardize(s.standardize); }});
    b.push_back({app.add_option("--partition", f.partition, "equal | proportions | by-file"),
                 [](auto& d, const auto& s) { d.partition = ppdc::parse_partition_policy(s.partition); }});
    b.push_back({app.add_option("--proportions", c.proportions, "per-agent shares for the proportions policy")->delimiter(','),
                 [](auto& d, const auto& s) { d.proportions = s.cfg.proportions; }});
    b.push_back({app.add_option("--k-min", c.k_min, "smallest K of the sweep"),
                 [](auto& d, const auto& s) { d.k_min = s.cfg.k_min; }});
    b.push_back({app.add_option("--k-max", c.k_max, "largest K of the sweep"),
                 [](auto& d, const auto& s) { d.k_max = s.cfg.k_max; }});
    b.push_back({app.add_option("--compare-rounds", c.compare_rounds, "rounds per variant in consensus-compare"),
                 [](auto& d, const auto& s) { d.compare_rounds = s.cfg.compare_rounds; }});
    b.push_back({app.add_option("--sweep-tol", c.sweep_tol, "consensus tolerance of the topology sweep"),
                 [](auto& d, const auto& s) { d.sweep_tol = s.cfg.sweep_tol; }});
    b.push_back({app.add_option("--equivalence-tol", c.equivalence_tol, "allowed centroid gap"),
                 [](auto& d, const auto& s) { d.equivalence_tol = s.cfg.equivalence_tol; }});
    b.push_back({app.add_option("--observer", f.observer, "attacking agent"),
                 [](auto& d, const auto& s) { d.observer = s.observer; }});
    b.push_back({app.add_option("--target", f.target, "attacked neighbor"),
                 [](auto& d, const auto& s) { d.target = s.target; }});
    b.push_back({app.add_option("--seed", c.seed, "master seed"), [](auto& d, const auto& s) { d.seed = s.cfg.seed; }});
    b.push_back({app.add_option("--out", c.out, "output directory"), [](auto& d, const auto& s) { d.out = s.cfg.out; }});
    return b;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Privacy-preserving distributed clustering simulator"};
    app.require_subcommand(1);

    struct Sub {
        ppdc::Recipe recipe;
        const char* help;
    };
    const std::vector<Sub> subs{
        {ppdc::Recipe::consensus_compare, "error curves of AC, AAC, PP-AC and PP-AAC from the same states"},
        {ppdc::Recipe::cluster, "distributed clustering over the network"},
        {ppdc::Recipe::compare_centralized, "distributed vs pooled clustering; exits 1 if they differ"},
        {ppdc::Recipe::ksweep, "SSE and silhouette over a range of K"},
        {ppdc::Recipe::topology_sweep, "consensus rounds and radius gap over a topology sequence"},
        {ppdc::Recipe::attack, "what one agent infers about a neighbor from the shares it receives"},
    };

    std::vector<Flags> flags(subs.size());
    std::vector<std::vector<Binding>> bindings;
    std::vector<CLI::App*> apps;
    for (std::size_t i = 0; i < subs.size(); ++i) {
        auto* sub = app.add_subcommand(std::string(ppdc::to_string(subs[i].recipe)), subs[i].help);
        bindings.push_back(add_flags(*sub, flags[i]));
        apps.push_back(sub);
    }
    CLI11_PARSE(app, argc, argv);

    try {
        for (std::size_t i = 0; i < subs.size(); ++i) {
            if (!apps[i]->parsed()) {
                continue;
            }
            ExperimentConfig cfg;
            if (!flags[i].config_path.empty()) {
                cfg = ExperimentConfig::load(flags[i].config_path);
            }
            for (const auto& b : bindings[i]) {
                if (b.option->count() > 0) {
                    b.apply(cfg, flags[i]);
                }
            }
            cfg.recipe = subs[i].recipe;
            const auto result = ppdc::run_experiment(cfg);
            std::cout << "wrote";
            for (const auto& f : result.files) {
                std::cout << ' ' << f;
            }
            std::cout << " to " << cfg.out << '\n';
            if (!result.passed) {
                std::cerr << ppdc::to_string(cfg.recipe) << ": check failed, see " << cfg.out << "/report.json\n";
                return 1;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
