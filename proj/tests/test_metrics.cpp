#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "ppdc/dataset.hpp"
#include "ppdc/error.hpp"
#include "ppdc/metrics.hpp"
#include "support.hpp"

using namespace ppdc;

TEST_CASE("sse of exact fits and a hand example") {
    Eigen::MatrixXd x(3, 2);
    x << 0, 0, 0, 0, 5, 5;
    std::vector<std::size_t> a{0, 0, 1};
    Eigen::MatrixXd at_points(2, 2);
    at_points << 0, 0, 5, 5;
    CHECK(sse(x, at_points, a) == 0.0);

    Eigen::MatrixXd y(2, 1);
    y << 1, 7;
    Eigen::MatrixXd mu(2, 1);
    mu << 0, 5;
    std::vector<std::size_t> l{0, 1};
    CHECK(sse(y, mu, l) == 5.0);
    std::vector<std::size_t> bad{0, 2};
    CHECK_THROWS_AS(sse(y, mu, bad), DimensionMismatch);
}

TEST_CASE("sse elbow sits at the planted component count") {
    auto ds = synth_profiles(template_components(6, 100, 48, 0.05), 3);
    standardize(ds);
    std::vector<double> curve;
    for (std::size_t k = 2; k <= 10; ++k) {
        double best = 1e300;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            auto init = initial_model(Method::kmeans, forgy_init(ds.observations, k, seed));
            auto fit = cluster_centralized(ds.observations, init, {});
            best = std::min(best, sse(ds.observations, fit.model));
        }
        curve.push_back(best);
    }
    CHECK(elbow_index(curve) + 2 == 6);
    CHECK_THROWS_AS(elbow_index(std::vector<double>{1.0, 2.0}), ConfigError);
}

TEST_CASE("silhouette of duplicate-point clusters is one") {
    Eigen::MatrixXd x(4, 2);
    x << 0, 0, 0, 0, 100, 100, 100, 100;
    std::vector<std::size_t> l{0, 0, 1, 1};
    CHECK(silhouette(x, l) == 1.0);
}

TEST_CASE("silhouette rejects a single cluster") {
    Eigen::MatrixXd x(3, 1);
    x << 0, 1, 2;
    std::vector<std::size_t> l{4, 4, 4};
    CHECK_THROWS_AS(silhouette(x, l), DegenerateClustering);
}

TEST_CASE("silhouette on an eight point fixture") {
    Eigen::MatrixXd x(8, 2);
    x << 0.0, 0.0, 1.0, 0.5, 0.3, 1.2, 4.0, 4.0, 5.0, 3.5, 4.2, 5.1, 9.0, 0.0, 2.5, 2.5;
    std::vector<std::size_t> l{0, 0, 0, 1, 1, 1, 2, 0};
    CHECK(std::abs(silhouette(x, l) - testing::silhouette_oracle(x, l)) <= 1e-12);
    // Singleton cluster 2 contributes zero.
    std::vector<std::size_t> two{0, 0, 0, 1, 1, 1, 1, 1};
    CHECK(std::abs(silhouette(x, two) - testing::silhouette_oracle(x, two)) <= 1e-12);
}

TEST_CASE("silhouette matches the oracle on random labelings") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 5 + static_cast<std::size_t>(trial);
        auto x = testing::random_matrix(n, 1 + trial % 4, rng);
        std::uniform_int_distribution<std::size_t> pick(0, 1 + trial % 4);
        std::vector<std::size_t> l(n);
        for (auto& v : l) {
            v = pick(rng);
        }
        l[0] = 0;
        l[1] = 1;
        const double s = silhouette(x, l);
        CHECK(std::abs(s - testing::silhouette_oracle(x, l)) <= 1e-12);
        CHECK(s >= -1.0);
        CHECK(s <= 1.0);

        // Reordering observations and scaling the data leave it unchanged.
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Eigen::MatrixXd xp(x.rows(), x.cols());
        std::vector<std::size_t> lp(n);
        for (std::size_t i = 0; i < n; ++i) {
            xp.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(perm[i]));
            lp[i] = l[perm[i]];
        }
        CHECK(silhouette(xp, lp) == doctest::Approx(s).epsilon(1e-12));
        CHECK(silhouette(x * 3.7, l) == doctest::Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("spearman rank correlation") {
    std::vector<double> a{1, 2, 3, 4, 5};
    std::vector<double> b{10, 20, 30, 40, 50};
    std::vector<double> c{5, 4, 3, 2, 1};
    CHECK(spearman(a, b) == doctest::Approx(1.0));
    CHECK(spearman(a, c) == doctest::Approx(-1.0));
    // Tied ranks: x ranks 1, 2.5, 2.5, 4 against 1..4.
    std::vector<double> t{1, 2, 2, 3};
    std::vector<double> u{1, 2, 3, 4};
    CHECK(spearman(t, u) == doctest::Approx(4.5 / std::sqrt(4.5 * 5.0)));
    CHECK_THROWS_AS(spearman(std::vector<double>{1}, std::vector<double>{1}), ConfigError);
}

TEST_CASE("kmeans share is 294 floats per neighbor per round") {
    const auto t = retailer_topology();
    StateLayout layout(Method::kmeans, 6, 48);
    CHECK(layout.size() == 294);
    std::mt19937_64 rng(2);
    auto states = testing::random_matrix(10, layout.size(), rng);
    auto run = run_consensus(Variant::pp_aac, t, states, DisturbanceParams{2.0, 0.2, 1}, {1e-12, 27, false, false});
    CHECK(run.rounds == 27);
    std::vector<ConsensusRun> runs(7, run);
    auto tel = record_telemetry(t, runs);
    CHECK(tel.state_dim == 294);
    CHECK(tel.outer_iterations == 7);
    CHECK(tel.total_rounds() == 27 * 7);
    std::uint64_t most = 0;
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(tel.messages[i] == t.degree(i) * 27 * 7);
        CHECK(tel.messages[i] == tel.expected_messages(i));
        CHECK(tel.floats_shared[i] == tel.messages[i] * 294);
        most = std::max(most, tel.floats_shared[i]);
    }
    CHECK(most == 294ULL * 5 * 27 * 7);
}

TEST_CASE("single agent sends nothing") {
    auto t = Topology::build(1, {});
    Eigen::MatrixXd s(1, 4);
    s << 1, 2, 3, 4;
    auto run = run_consensus(Variant::aac, t, s, std::nullopt, {1e-12, 5, false, false});
    Telemetry tel(t);
    tel.add_consensus(run);
    CHECK(tel.messages[0] == 0);
    CHECK(tel.floats_shared[0] == 0);
}

TEST_CASE("distributed clustering telemetry obeys the message identity") {
    auto ds = synth_profiles(template_components(3, 20, 6, 0.1), 8);
    standardize(ds);
    apply_ownership(ds, partition_equal(ds.size(), 10, 8));
    auto init = initial_model(Method::kmeans, forgy_init(ds.observations, 3, 2));
    DistributedConfig cfg;
    cfg.disturbance = {2.0, 0.2, 4};
    auto res = cluster_distributed(retailer_topology(), ds.agent_data(), init, cfg, {});
    const auto& tel = res.telemetry;
    CHECK(tel.outer_iterations == res.iterations);
    CHECK(tel.consensus_rounds.size() == res.iterations);
    CHECK(tel.state_dim == 3 * 6 + 3);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(tel.messages[i] == tel.expected_messages(i));
        CHECK(tel.floats_shared[i] == tel.messages[i] * tel.state_dim);
        CHECK(tel.multiplies[i] > 0);
    }
    auto j = tel.to_json();
    CHECK(j["floats_per_neighbor_per_round"] == 21);
    std::ostringstream csv;
    tel.write_csv(csv);
    CHECK(csv.str().rfind("agent,degree,messages,floats_shared,multiplies\n0,5,", 0) == 0);
}
