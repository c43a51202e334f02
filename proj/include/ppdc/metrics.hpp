#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ppdc/clustering.hpp"
#include "ppdc/telemetry.hpp"

namespace ppdc {

/// Sum of squared distances of observations to their assigned centroids.
double sse(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centroids, std::span<const std::size_t> assignments);

/// SSE under the model's hard assignments.
double sse(const Eigen::MatrixXd& data, const ClusterModel& model);

/// Mean silhouette coefficient over all observations.
///
/// Observations alone in their cluster score 0. Throws DegenerateClustering
/// when fewer than two clusters are populated.
double silhouette(const Eigen::MatrixXd& data, std::span<const std::size_t> assignments);

/// Index into `sse_curve` of the maximum second difference. Needs >= 3 points.
std::size_t elbow_index(std::span<const double> sse_curve);

/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace ppdc
