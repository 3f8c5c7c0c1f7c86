#pragma once

#include <string>
#include <utility>
#include <vector>

#include "liepose/lie.hpp"

namespace liepose {

struct PoseError {
  double rot_deg = 0.0;
  double trans_m = 0.0;
};

/// Geodesic rotation angle (degrees) and Euclidean translation distance
/// between two poses: 2 * acos(|<q_a, q_b>|) on quaternions derived from the
/// rotation matrices. Symmetric in its arguments.
PoseError pose_error(const PoseSE3& a, const PoseSE3& b);

/// Median; the mean of the two central values for even length. Throws
/// EmptyInput.
double median(std::vector<double> values);

struct SceneReport {
  std::string scene_name;
  double median_rot_deg = 0.0;
  double median_trans_m = 0.0;
  int n_samples = 0;
};

struct MetricsReport {
  std::vector<SceneReport> per_scene;
  double avg_trans_m = 0.0;
  double avg_rot_deg = 0.0;
};

/// Unweighted average of the per-scene medians. Throws EmptyInput.
MetricsReport aggregate(const std::vector<SceneReport>& scenes);

struct TableOutput {
  std::string text;
  std::string csv;
};

/// Side-by-side method table. Cells are "trans / rot" with two decimals;
/// every method must report the same scene set (SceneMismatch otherwise).
TableOutput format_table(
    const std::vector<std::pair<std::string, MetricsReport>>& methods);

}  // namespace liepose
