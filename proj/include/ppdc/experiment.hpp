#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "ppdc/clustering.hpp"
#include "ppdc/consensus.hpp"
#include "ppdc/dataset.hpp"
#include "ppdc/error.hpp"
#include "ppdc/topology.hpp"

namespace ppdc {

enum class Recipe { consensus_compare, cluster, compare_centralized, ksweep, topology_sweep, attack };

std::string_view to_string(Recipe r);
Recipe parse_recipe(std::string_view name);

enum class StandardizeMode { none, zscore, distributed };

std::string_view to_string(StandardizeMode s);
StandardizeMode parse_standardize(std::string_view name);

/// Everything a run depends on. Serialized into every report.
struct ExperimentConfig {
    Recipe recipe = Recipe::cluster;

    // clustering
    Method method = Method::kmeans;
    std::size_t k = 6;
    double fuzziness = 2.0;
    double stop_tol = 1e-6;
    std::size_t max_iterations = 300;
    double covariance_reg = 1e-6;  // multiple of the mean per-dimension data variance

    // consensus
    Variant variant = Variant::pp_aac;
    double sigma = 2.0;
    double beta = 0.2;
    double consensus_tol = 1e-12;
    std::size_t consensus_budget = 5000;
    bool fixed_budget = false;  // run exactly consensus_budget rounds

    // network
    std::string topology = "builtin:retailers";  // builtin:NAME or a JSON edge file
    std::size_t agents = 10;                     // for builtin families
    std::vector<std::string> topology_sequence;  // topology-sweep

    // data
    std::vector<std::string> data_files;  // empty: synthetic
    std::size_t components = 6;
    std::size_t per_component = 100;
    std::size_t dim = 48;
    double spread = 0.3;
    StandardizeMode standardize = StandardizeMode::zscore;
    PartitionPolicy partition = PartitionPolicy::equal;
    std::vector<double> proportions;

    // recipe parameters
    std::size_t k_min = 2;
    std::size_t k_max = 10;
    std::size_t compare_rounds = 100;
    double sweep_tol = 1e-8;
    double equivalence_tol = 1e-6;
    std::optional<std::size_t> observer;
    std::optional<std::size_t> target;

    std::uint64_t seed = 1;
    std::string out = "out";

    nlohmann::json to_json() const;
    /// Fields absent from `doc` keep their current values; unknown keys are rejected.
    void merge_json(const nlohmann::json& doc);
    static ExperimentConfig from_json(const nlohmann::json& doc);
    static ExperimentConfig load(const std::string& path);
    void validate() const;
};

/// A module error annotated with the recipe that raised it.
class RecipeError : public Error {
public:
    RecipeError(Recipe recipe, const std::string& what)
        : Error(std::string(to_string(recipe)) + ": " + what) {}
};

/// "builtin:NAME" (retailers, path, ring, complete, star) or a JSON edge file.
Topology resolve_topology(const std::string& source, std::size_t agents);

/// Topology, partitioned data and public starting model for a config.
struct Setup {
    Topology topology;
    Dataset dataset;
    std::vector<Eigen::MatrixXd> agent_data;
    double data_variance = 1.0;
    ClusterOptions options;
    DistributedConfig distributed;
};

Setup prepare(const ExperimentConfig& config);

/// Public initial model with K centroids drawn from the pooled data.
ClusterModel public_init(const ExperimentConfig& config, const Setup& setup, std::size_t k);

/// Round-0 consensus states: every agent's packed local summary under `model`.
Eigen::MatrixXd summary_states(const Setup& setup, const ClusterModel& model);

struct VariantCurve {
    Variant variant = Variant::ac;
    double alpha = 0.0;
    std::vector<double> mean_abs_error;
    std::vector<double> max_abs_error;
    std::size_t fit_first = 0;
    std::size_t fit_last = 0;
    double tail_slope = 0.0;  // log10 error per round
};

/// Runs all four variants for a fixed number of rounds from the same states.
/// Slopes are fitted from round `fit_first` until the curve falls below
/// `floor_ratio` times its starting value.
std::vector<VariantCurve> compare_variants(const Topology& topology, const Eigen::MatrixXd& initial,
                                           const DisturbanceParams& disturbance, std::size_t rounds,
                                           std::size_t fit_first = 10, double floor_ratio = 1e-10);

struct Equivalence {
    Method method = Method::kmeans;
    std::size_t k = 0;
    std::size_t iterations_centralized = 0;
    std::size_t iterations_distributed = 0;
    double centroid_gap = 0.0;  // max over agents and entries
    double sci_centralized = 0.0;
    double sci_distributed = 0.0;
    double sse_centralized = 0.0;
    double sse_distributed = 0.0;
    std::size_t stop_disagreements = 0;
    std::size_t consensus_rounds = 0;

    nlohmann::json to_json() const;
};

/// Centralized and distributed runs from the same public init. The
/// distributed result is handed back through `distributed` when given.
Equivalence compare_centralized(const Setup& setup, const ClusterModel& init,
                                DistributedResult* distributed = nullptr);

struct SweepRow {
    std::string source;
    std::size_t edges = 0;
    double mean_extended_degree = 0.0;
    double radius_gap = 0.0;
    std::size_t rounds = 0;  // masked accelerated consensus to sweep_tol
};

std::vector<SweepRow> topology_sweep(const std::vector<std::string>& sources, std::size_t agents,
                                     const Eigen::MatrixXd& initial, const DisturbanceParams& disturbance,
                                     double tol, std::size_t budget);

struct ExperimentResult {
    nlohmann::json report;
    bool passed = true;  // compare-centralized checks
    std::vector<std::string> files;
};

/// Runs the configured recipe and writes report.json, manifest.json and the
/// recipe's CSV files into config.out. Module errors surface as RecipeError.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace ppdc
