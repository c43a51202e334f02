#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "ppdc/topology.hpp"

namespace ppdc::testing {

// Random spanning tree plus each remaining pair with probability p.
inline Topology random_connected(std::size_t m, double p, std::mt19937_64& rng) {
    std::set<Edge> edges;
    for (std::size_t i = 1; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> parent(0, i - 1);
        edges.insert({parent(rng), i});
    }
    std::bernoulli_distribution coin(p);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            if (coin(rng)) {
                edges.insert({i, j});
            }
        }
    }
    std::vector<Edge> list(edges.begin(), edges.end());
    return Topology::build(m, list);
}

inline Eigen::MatrixXd random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -10.0,
                                     double hi = 10.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            x(i, j) = u(rng);
        }
    }
    return x;
}

// Dense Metropolis matrix straight from the definition.
inline Eigen::MatrixXd metropolis_oracle(const Topology& t) {
    const auto m = static_cast<Eigen::Index>(t.num_agents());
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
    for (auto [a, b] : t.edges()) {
        const double v = 1.0 / (1.0 + static_cast<double>(std::max(t.degree(a), t.degree(b))));
        w(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
        w(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        w(i, i) = 1.0 - w.row(i).sum();
    }
    return w;
}

using Rows = std::vector<std::vector<double>>;

inline Rows to_rows(const Eigen::MatrixXd& m) {
    Rows r(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            r[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
        }
    }
    return r;
}

// Textbook Lloyd on plain vectors: nearest centroid (first on ties), mean of
// members, empty clusters keep their centroid, stop when no centroid moves
// by 1e-6 or more.
struct LloydResult {
    Rows centroids;
    std::vector<std::size_t> labels;
    std::size_t iterations = 0;
    std::vector<double> sse;
};

inline LloydResult lloyd_oracle(const Rows& data, Rows centroids) {
    LloydResult r;
    const auto k = centroids.size();
    const auto d = data.front().size();
    auto dist2 = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            s += (a[j] - b[j]) * (a[j] - b[j]);
        }
        return s;
    };
    while (r.iterations < 300) {
        std::vector<std::size_t> labels(data.size());
        for (std::size_t n = 0; n < data.size(); ++n) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < k; ++c) {
                if (dist2(data[n], centroids[c]) < dist2(data[n], centroids[best])) {
                    best = c;
                }
            }
            labels[n] = best;
        }
        Rows next = centroids;
        double moved = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            std::vector<double> sum(d, 0.0);
            double count = 0.0;
            for (std::size_t n = 0; n < data.size(); ++n) {
                if (labels[n] == c) {
                    for (std::size_t j = 0; j < d; ++j) {
                        sum[j] += data[n][j];
                    }
                    count += 1.0;
                }
            }
            if (count > 0.0) {
                for (std::size_t j = 0; j < d; ++j) {
                    next[c][j] = sum[j] / count;
                }
            }
            moved = std::max(moved, std::sqrt(dist2(next[c], centroids[c])));
        }
        centroids = next;
        ++r.iterations;
        double total = 0.0;
        for (std::size_t n = 0; n < data.size(); ++n) {
            double best = dist2(data[n], centroids[0]);
            for (std::size_t c = 1; c < k; ++c) {
                best = std::min(best, dist2(data[n], centroids[c]));
            }
            total += best;
        }
        r.sse.push_back(total);
        r.labels = labels;
        if (moved < 1e-6) {
            break;
        }
    }
    r.centroids = centroids;
    return r;
}

// Mean of (b - a) / max(a, b) straight from the definition, singletons 0.
inline double silhouette_oracle(const Eigen::MatrixXd& x, const std::vector<std::size_t>& labels) {
    const auto n = labels.size();
    const std::size_t k = *std::max_element(labels.begin(), labels.end()) + 1;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> sum(k, 0.0), count(k, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) {
                continue;
            }
            double d2 = 0.0;
            for (Eigen::Index c = 0; c < x.cols(); ++c) {
                const double diff = x(static_cast<Eigen::Index>(i), c) - x(static_cast<Eigen::Index>(j), c);
                d2 += diff * diff;
            }
            sum[labels[j]] += std::sqrt(d2);
            count[labels[j]] += 1.0;
        }
        if (count[labels[i]] == 0.0) {
            continue;
        }
        const double a = sum[labels[i]] / count[labels[i]];
        double b = 1e300;
        for (std::size_t c = 0; c < k; ++c) {
            if (c != labels[i] && count[c] > 0.0) {
                b = std::min(b, sum[c] / count[c]);
            }
        }
        total += (b - a) / std::max(a, b);
    }
    return total / static_cast<double>(n);
}

}  // namespace ppdc::testing
