#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "ppdc/clustering.hpp"
#include "ppdc/dataset.hpp"
#include "ppdc/error.hpp"
#include "ppdc/metrics.hpp"
#include "support.hpp"

using namespace ppdc;

namespace {

Eigen::MatrixXd blobs(std::size_t per, std::size_t dim, const std::vector<double>& offsets, double spread,
                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, spread);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(per * offsets.size()), static_cast<Eigen::Index>(dim));
    Eigen::Index row = 0;
    for (double o : offsets) {
        for (std::size_t n = 0; n < per; ++n, ++row) {
            for (Eigen::Index j = 0; j < x.cols(); ++j) {
                x(row, j) = o * (j % 2 == 0 ? 1.0 : -1.0) + noise(rng);
            }
        }
    }
    return x;
}

std::vector<Eigen::MatrixXd> split_rows(const Eigen::MatrixXd& x, std::size_t parts) {
    std::vector<Eigen::MatrixXd> out;
    const Eigen::Index base = x.rows() / static_cast<Eigen::Index>(parts);
    Eigen::Index row = 0;
    for (std::size_t p = 0; p < parts; ++p) {
        const Eigen::Index n = p + 1 == parts ? x.rows() - row : base;
        out.push_back(x.middleRows(row, n));
        row += n;
    }
    return out;
}

}  // namespace

TEST_CASE("method names") {
    for (auto m : {Method::kmeans, Method::fca, Method::gmm}) {
        CHECK(parse_method(to_string(m)) == m);
    }
    CHECK_THROWS_AS(parse_method("dbscan"), ConfigError);
}

TEST_CASE("initial gmm model") {
    Eigen::MatrixXd c(3, 2);
    c << 0, 0, 1, 1, 2, 2;
    auto m = initial_model(Method::gmm, c, 4.0);
    CHECK(m.weights.sum() == doctest::Approx(1.0));
    CHECK(m.weights[1] == doctest::Approx(1.0 / 3.0));
    CHECK(m.covariances.size() == 3);
    CHECK((m.covariances[2] - 4.0 * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forgy init draws distinct observations deterministically") {
    std::mt19937_64 rng(1);
    auto x = testing::random_matrix(30, 3, rng);
    auto a = forgy_init(x, 5, 99);
    auto b = forgy_init(x, 5, 99);
    CHECK(a == b);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        int found = 0;
        for (Eigen::Index n = 0; n < x.rows(); ++n) {
            found += (x.row(n) == a.row(i)) ? 1 : 0;
        }
        CHECK(found == 1);
        for (Eigen::Index j = 0; j < i; ++j) {
            CHECK(a.row(i) != a.row(j));
        }
    }
    CHECK(forgy_init(x, 5, 100) != a);
    CHECK_THROWS(forgy_init(x, 31, 1));
}

TEST_CASE("nearest centroid breaks ties toward the lower index") {
    Eigen::MatrixXd c(2, 1);
    c << -1, 1;
    Eigen::RowVectorXd y(1);
    y << 0.0;
    CHECK(assign_kmeans(y, c) == 0);
    y << 0.1;
    CHECK(assign_kmeans(y, c) == 1);
}

TEST_CASE("fixed point: K distinct points initialized at themselves") {
    Eigen::MatrixXd x(4, 2);
    x << 0, 0, 5, 0, 0, 5, 5, 5;
    for (auto m : {Method::kmeans, Method::fca}) {
        auto r = cluster_centralized(x, initial_model(m, x), {});
        CHECK(r.iterations == 1);
        CHECK(r.converged);
        CHECK((r.model.centroids - x).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("two separated pairs give the pair means") {
    Eigen::MatrixXd x(4, 1);
    x << 0, 1, 10, 11;
    Eigen::MatrixXd init(2, 1);
    init << 0, 10;
    auto r = cluster_centralized(x, initial_model(Method::kmeans, init), {});
    CHECK(r.model.centroids(0, 0) == doctest::Approx(0.5));
    CHECK(r.model.centroids(1, 0) == doctest::Approx(10.5));
}

TEST_CASE("kmeans agrees with an independent Lloyd implementation") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<int> nd(6, 60), dd(1, 3), kd(2, 5);
        const auto n = static_cast<std::size_t>(nd(rng));
        const auto d = static_cast<std::size_t>(dd(rng));
        const auto k = std::min<std::size_t>(static_cast<std::size_t>(kd(rng)), n);
        auto x = testing::random_matrix(n, d, rng, 0.0, 10.0);
        auto init = forgy_init(x, k, static_cast<std::uint64_t>(trial));
        ClusterOptions opts;
        opts.track_objective = true;
        auto ours = cluster_centralized(x, initial_model(Method::kmeans, init), opts);
        auto oracle = testing::lloyd_oracle(testing::to_rows(x), testing::to_rows(init));
        CHECK(ours.iterations == oracle.iterations);
        CHECK(hard_assignments(x, ours.model) == oracle.labels);
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t j = 0; j < d; ++j) {
                CHECK(ours.model.centroids(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) ==
                      doctest::Approx(oracle.centroids[c][j]).epsilon(1e-12));
            }
        }
        for (std::size_t i = 1; i < ours.history.size(); ++i) {
            CHECK(*ours.history[i].objective <= *ours.history[i - 1].objective + 1e-9);
        }
    }
}

TEST_CASE("60-point 2-D mixture: SSE never increases") {
    auto x = blobs(20, 2, {-4.0, 0.0, 4.0}, 1.2, 5);
    ClusterOptions opts;
    opts.track_objective = true;
    auto init = forgy_init(x, 3, 8);
    auto r = cluster_centralized(x, initial_model(Method::kmeans, init), opts);
    auto oracle = testing::lloyd_oracle(testing::to_rows(x), testing::to_rows(init));
    CHECK(hard_assignments(x, r.model) == oracle.labels);
    for (std::size_t i = 1; i < r.history.size(); ++i) {
        CHECK(*r.history[i].objective <= *r.history[i - 1].objective);
    }
}

TEST_CASE("fuzzy memberships: hand-evaluated one-dimensional update") {
    Eigen::MatrixXd x(4, 1);
    x << 0, 1, 3, 4;
    Eigen::MatrixXd c(2, 1);
    c << 0.5, 3.5;
    auto model = initial_model(Method::fca, c, 1.0, 2.0);
    // With m = 2, rho_1 = d2^2 / (d1^2 + d2^2).
    const double r0 = 12.25 / 12.5, r1 = 6.25 / 6.5;
    Eigen::MatrixXd expected(4, 2);
    expected << r0, 1 - r0, r1, 1 - r1, 1 - r1, r1, 1 - r0, r0;
    auto w = memberships(x, model);
    CHECK((w - expected).cwiseAbs().maxCoeff() < 1e-14);

    auto u = update_model(aggregate(std::vector{local_summaries(x, model)}), 4.0, model, {});
    const double a = r0 * r0, b = r1 * r1, p = (1 - r1) * (1 - r1), q = (1 - r0) * (1 - r0);
    const double mu1 = (a * 0 + b * 1 + p * 3 + q * 4) / (a + b + p + q);
    const double mu2 = (q * 0 + p * 1 + b * 3 + a * 4) / (a + b + p + q);
    CHECK(u.model.centroids(0, 0) == doctest::Approx(mu1).epsilon(1e-14));
    CHECK(u.model.centroids(1, 0) == doctest::Approx(mu2).epsilon(1e-14));
}

TEST_CASE("fuzzy membership snaps to one-hot on a centroid") {
    Eigen::MatrixXd c(3, 2);
    c << 0, 0, 1, 1, 2, 2;
    Eigen::RowVectorXd y(2);
    y << 1, 1;
    auto w = fca_membership(y, c, 2.0);
    CHECK(w(1) == 1.0);
    CHECK(w(0) == 0.0);
    CHECK_THROWS_AS(fca_membership(y, c, 1.0), ConfigError);
}

TEST_CASE("gaussian mixture: hand-evaluated one-dimensional EM step") {
    Eigen::MatrixXd x(4, 1);
    x << 0, 1, 3, 4;
    Eigen::MatrixXd c(2, 1);
    c << 0.5, 3.5;
    auto model = initial_model(Method::gmm, c, 1.0);
    // Equal weights and variances: r_1(y) = 1 / (1 + exp(-(d2^2 - d1^2) / 2)).
    auto resp = [](double y) {
        const double d1 = (y - 0.5) * (y - 0.5), d2 = (y - 3.5) * (y - 3.5);
        return 1.0 / (1.0 + std::exp(-(d2 - d1) / 2.0));
    };
    auto w = memberships(x, model);
    for (Eigen::Index n = 0; n < 4; ++n) {
        CHECK(w(n, 0) == doctest::Approx(resp(x(n, 0))).epsilon(1e-14));
        CHECK(w(n, 0) + w(n, 1) == doctest::Approx(1.0).epsilon(1e-15));
    }

    ClusterOptions opts;
    opts.covariance_reg = 1e-6;
    auto u = update_model(aggregate(std::vector{local_summaries(x, model)}), 4.0, model, opts);
    double z = 0, s = 0, h = 0;
    for (double y : {0.0, 1.0, 3.0, 4.0}) {
        z += resp(y);
        s += resp(y) * y;
        h += resp(y) * (y - 0.5) * (y - 0.5);  // scatter about the previous mean
    }
    CHECK(u.model.weights[0] == doctest::Approx(z / 4.0).epsilon(1e-14));
    CHECK(u.model.centroids(0, 0) == doctest::Approx(s / z).epsilon(1e-14));
    CHECK(u.model.covariances[0](0, 0) == doctest::Approx(h / z + 1e-6).epsilon(1e-14));

    // log-likelihood by direct density evaluation
    double ll = 0;
    for (double y : {0.0, 1.0, 3.0, 4.0}) {
        double p = 0;
        for (double mu : {0.5, 3.5}) {
            p += 0.5 * std::exp(-0.5 * (y - mu) * (y - mu)) / std::sqrt(2 * M_PI);
        }
        ll += std::log(p);
    }
    CHECK(objective(x, model) == doctest::Approx(ll).epsilon(1e-13));
}

TEST_CASE("gmm densities stay finite far from every component") {
    Eigen::MatrixXd c(2, 3);
    c << 0, 0, 0, 1, 1, 1;
    auto model = initial_model(Method::gmm, c, 1e-3);
    Eigen::MatrixXd y(1, 3);
    y << 500, 500, 500;
    auto w = memberships(y, model);
    CHECK(w.allFinite());
    CHECK(w.sum() == doctest::Approx(1.0));
    CHECK(w(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("singular covariance is reported") {
    Eigen::MatrixXd c(1, 2);
    c << 0, 0;
    auto model = initial_model(Method::gmm, c, 1.0);
    model.covariances[0] = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(GaussianMixture{model}, SingularCovariance);

    // Collinear data with no ridge collapses the covariance.
    Eigen::MatrixXd x(4, 2);
    x << 0, 0, 1, 1, 2, 2, 3, 3;
    ClusterOptions opts;
    opts.covariance_reg = 0.0;
    CHECK_THROWS_AS(cluster_centralized(x, initial_model(Method::gmm, c, 1.0), opts), SingularCovariance);
}

TEST_CASE("empty clusters keep their previous parameters") {
    Eigen::MatrixXd x(3, 1);
    x << 0, 0.5, 1;
    Eigen::MatrixXd c(2, 1);
    c << 0.5, 100;
    for (auto m : {Method::kmeans, Method::gmm}) {
        auto model = initial_model(m, c, 1.0);
        auto u = update_model(aggregate(std::vector{local_summaries(x, model)}), 3.0, model, {});
        CHECK(u.model.centroids(1, 0) == 100.0);
        CHECK(u.degenerate == std::vector<std::size_t>{1});
        if (m == Method::gmm) {
            CHECK(u.model.weights.sum() == doctest::Approx(1.0));
            CHECK(u.model.covariances[1](0, 0) == 1.0);
        }
    }
}

TEST_CASE("membership rows sum to one") {
    std::mt19937_64 rng(3);
    auto x = testing::random_matrix(50, 4, rng);
    auto init = forgy_init(x, 4, 1);
    for (auto m : {Method::kmeans, Method::fca, Method::gmm}) {
        auto w = memberships(x, initial_model(m, init, 30.0));
        CHECK((w.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
        CHECK(w.minCoeff() >= 0.0);
    }
}

TEST_CASE("hard assignments treat near-equal memberships as ties") {
    Eigen::MatrixXd c(3, 1);
    c << 0.0, 2.0, 2.0 + 1e-13;
    auto model = initial_model(Method::fca, c, 1.0);
    Eigen::MatrixXd y(1, 1);
    y << 3.0;
    CHECK(hard_assignments(y, model).front() == 1);
}

TEST_CASE("local summaries decompose the pooled statistics") {
    auto x = blobs(25, 3, {-2.0, 2.0}, 1.0, 4);
    auto parts = split_rows(x, 4);
    auto init = forgy_init(x, 3, 2);
    for (auto m : {Method::kmeans, Method::fca, Method::gmm}) {
        auto model = initial_model(m, init, 4.0);
        std::vector<LocalSummary> locals;
        for (const auto& p : parts) {
            locals.push_back(local_summaries(p, model));
        }
        auto agg = aggregate(locals);
        // Pooled statistics by direct summation over observations.
        auto w = memberships(x, model);
        if (m == Method::fca) {
            w = w.array().square().matrix();
        }
        for (Eigen::Index c = 0; c < 3; ++c) {
            double z = 0.0;
            Eigen::RowVectorXd s = Eigen::RowVectorXd::Zero(3);
            Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 3);
            for (Eigen::Index n = 0; n < x.rows(); ++n) {
                z += w(n, c);
                s += w(n, c) * x.row(n);
                Eigen::RowVectorXd dv = x.row(n) - init.row(c);
                h += w(n, c) * dv.transpose() * dv;
            }
            CHECK(agg.z[c] == doctest::Approx(z).epsilon(1e-12));
            CHECK((agg.s.row(c) - s).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, s.cwiseAbs().maxCoeff()));
            if (m == Method::gmm) {
                CHECK((agg.h[static_cast<std::size_t>(c)] - h).cwiseAbs().maxCoeff() < 1e-11);
            } else {
                CHECK(agg.h.empty());
            }
        }
        if (m == Method::fca) {
            // Weights are rho^m, so the total falls short of N.
            CHECK(agg.z.sum() == doctest::Approx(w.sum()).epsilon(1e-12));
            CHECK(agg.z.sum() < static_cast<double>(x.rows()));
        } else {
            CHECK(agg.z.sum() == doctest::Approx(static_cast<double>(x.rows())).epsilon(1e-12));
        }
        if (m == Method::kmeans) {
            for (const auto& l : locals) {
                for (Eigen::Index c = 0; c < 3; ++c) {
                    CHECK(l.z[c] == std::round(l.z[c]));
                }
            }
        }
    }
}

TEST_CASE("state layout") {
    StateLayout km(Method::kmeans, 6, 48);
    CHECK(km.size() == 294);
    CHECK(km.z_offset() == 288);
    StateLayout g(Method::gmm, 2, 3);
    CHECK(g.size() == 2 * 3 + 2 + 2 * 9);
    CHECK(g.h_offset() == 8);

    std::mt19937_64 rng(4);
    auto x = testing::random_matrix(10, 3, rng);
    auto model = initial_model(Method::gmm, forgy_init(x, 2, 1), 20.0);
    auto l = local_summaries(x, model);
    auto packed = g.pack(l);
    CHECK(packed(2) == l.s(0, 2));
    CHECK(packed(3) == l.s(1, 0));
    CHECK(packed(7) == l.z(1));
    CHECK(packed(8 + 9 + 1) == l.h[1](0, 1));  // row-major
    auto back = g.unpack(packed);
    CHECK(back.s == l.s);
    CHECK(back.z == l.z);
    CHECK(back.h[1] == l.h[1]);
    CHECK_THROWS_AS(g.unpack(Eigen::RowVectorXd::Zero(5)), DimensionMismatch);
}

TEST_CASE("relabeling the initial centroids permutes the result") {
    auto x = blobs(15, 2, {-3.0, 0.0, 3.0}, 0.8, 9);
    auto init = forgy_init(x, 3, 5);
    const std::vector<Eigen::Index> perm{2, 0, 1};
    Eigen::MatrixXd permuted(3, 2);
    for (Eigen::Index c = 0; c < 3; ++c) {
        permuted.row(c) = init.row(perm[static_cast<std::size_t>(c)]);
    }
    for (auto m : {Method::kmeans, Method::fca, Method::gmm}) {
        auto a = cluster_centralized(x, initial_model(m, init, 4.0), {});
        auto b = cluster_centralized(x, initial_model(m, permuted, 4.0), {});
        CHECK(a.iterations == b.iterations);
        for (Eigen::Index c = 0; c < 3; ++c) {
            CHECK((b.model.centroids.row(c) - a.model.centroids.row(perm[static_cast<std::size_t>(c)]))
                      .cwiseAbs()
                      .maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("fuzzy objective decreases and gmm likelihood increases") {
    auto x = blobs(30, 2, {-3.0, 0.0, 3.0}, 1.0, 10);
    auto init = forgy_init(x, 3, 2);
    ClusterOptions opts;
    opts.track_objective = true;
    auto f = cluster_centralized(x, initial_model(Method::fca, init), opts);
    for (std::size_t i = 1; i < f.history.size(); ++i) {
        CHECK(*f.history[i].objective <= *f.history[i - 1].objective + 1e-9);
    }
    auto g = cluster_centralized(x, initial_model(Method::gmm, init, 9.0), opts);
    for (std::size_t i = 1; i < g.history.size(); ++i) {
        CHECK(*g.history[i].objective >= *g.history[i - 1].objective - 1e-9);
    }
}

TEST_CASE("single agent reproduces the pooled run") {
    auto x = blobs(20, 3, {-2.0, 2.0}, 1.0, 11);
    auto t = Topology::build(1, {});
    std::vector<Eigen::MatrixXd> data{x};
    for (auto m : {Method::kmeans, Method::fca, Method::gmm}) {
        auto init = initial_model(m, forgy_init(x, 2, 3), 4.0);
        auto c = cluster_centralized(x, init, {});
        DistributedConfig cfg;
        auto d = cluster_distributed(t, data, init, cfg, {});
        CHECK(d.iterations == c.iterations);
        CHECK((d.models[0].centroids - c.model.centroids).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(d.telemetry.messages[0] == 0);
    }
}

TEST_CASE("ten agents match the pooled run on 48-dimensional profiles") {
    auto specs = template_components(6, 100, 48, 0.3);
    auto ds = synth_profiles(specs, 21);
    standardize(ds);
    apply_ownership(ds, partition_equal(ds.size(), 10, 4));
    auto parts = ds.agent_data();
    auto init = initial_model(Method::kmeans, forgy_init(ds.observations, 6, 7));
    auto c = cluster_centralized(ds.observations, init, {});
    auto d = cluster_distributed(retailer_topology(), parts, init, DistributedConfig{}, {});
    CHECK(d.converged);
    CHECK(d.iterations == c.iterations);
    CHECK(d.stop_disagreements == 0);
    for (const auto& m : d.models) {
        CHECK((m.centroids - c.model.centroids).cwiseAbs().maxCoeff() <= 1e-6);
    }
    CHECK(d.telemetry.state_dim == 294);
    CHECK(d.history.back().agent_disagreement < 1e-6);
}

TEST_CASE("unmasked and masked distributed runs agree") {
    auto x = blobs(20, 2, {-3.0, 3.0}, 1.0, 12);
    auto parts = split_rows(x, 5);
    auto t = builtin_topology("ring", 5);
    auto init = initial_model(Method::fca, forgy_init(x, 2, 1));
    DistributedConfig plain;
    plain.variant = Variant::aac;
    auto a = cluster_distributed(t, parts, init, plain, {});
    auto b = cluster_distributed(t, parts, init, DistributedConfig{}, {});
    CHECK(a.iterations == b.iterations);
    CHECK((a.models[3].centroids - b.models[3].centroids).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("consensus budget exhaustion names the outer iteration") {
    auto x = blobs(10, 2, {-3.0, 3.0}, 1.0, 13);
    auto parts = split_rows(x, 5);
    DistributedConfig cfg;
    cfg.consensus.budget = 3;
    try {
        cluster_distributed(builtin_topology("path", 5), parts, initial_model(Method::kmeans, forgy_init(x, 2, 1)),
                            cfg, {});
        FAIL("expected ConsensusBudgetExhausted");
    } catch (const ConsensusBudgetExhausted& e) {
        CHECK(e.outer_iteration() == 1);
        CHECK(e.run().rounds == 3);
    }
}

TEST_CASE("distributed driver validates its inputs") {
    auto x = blobs(4, 2, {0.0}, 1.0, 14);
    std::vector<Eigen::MatrixXd> parts{x};
    auto init = initial_model(Method::kmeans, forgy_init(x, 2, 1));
    CHECK_THROWS_AS(cluster_distributed(builtin_topology("ring", 3), parts, init, {}, {}), DimensionMismatch);
    Eigen::MatrixXd wide = Eigen::MatrixXd::Zero(4, 3);
    std::vector<Eigen::MatrixXd> bad{wide};
    CHECK_THROWS_AS(cluster_distributed(Topology::build(1, {}), bad, init, {}, {}), DimensionMismatch);
}

TEST_CASE("model json") {
    Eigen::MatrixXd c(2, 2);
    c << 0, 1, 2, 3;
    auto j = initial_model(Method::gmm, c, 2.0).to_json();
    CHECK(j["method"] == "gmm");
    CHECK(j["centroids"].size() == 2);
    CHECK(j["weights"].size() == 2);
}
