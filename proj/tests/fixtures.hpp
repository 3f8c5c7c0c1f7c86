#pragma once

// Frozen reference values for the unit and acceptance tests.

#include <array>
#include <limits>

#include "liepose/metrics.hpp"

namespace liepose::fixtures {

// Median geodesic angle (degrees) between a uniform random rotation and the
// identity. The angle density for uniform rotations is (1 - cos t)/pi on
// [0, pi], so the median solves t - sin t = pi/2.
inline constexpr double kUniformRotationMedianDeg = 132.34645883409294;

// Training configuration used by the long-run regression tests. The learning
// rate is tuned for this harness (see README); the default rate of 1e-4
// moves the small regressor too slowly to converge within the epoch budgets
// exercised here.
inline constexpr double kReferenceLearningRate = 1e-2;
inline constexpr int kReferenceHidden = 64;
inline constexpr int kReferenceFeatureDim = 32;

// Per-scene medians reported for the heteroscedastic L1 variant after a
// 10-epoch budget on the seven-scene indoor relocalization benchmark, and
// the averages they reproduce.
inline const std::array<SceneReport, 7> seven_scene_medians() {
  return {{
      {"chess", 5.39, 0.18, 1},
      {"fire", 10.05, 0.36, 1},
      {"heads", 14.86, 0.20, 1},
      {"office", 6.66, 0.24, 1},
      {"pumpkin", 6.06, 0.29, 1},
      {"redkitchen", 6.66, 0.30, 1},
      {"stairs", 12.49, 0.34, 1},
  }};
}
inline constexpr double kSevenSceneAvgTransM = 0.27;
inline constexpr double kSevenSceneAvgRotDeg = 8.88;

// Scene-averaged median rotation errors (degrees) from the reference run of
// configs/benchmark.json on this implementation, frozen as thresholds for
// the training-speed comparison. Regenerate by running the benchmark and
// reading epoch 10 and epoch 100 from the per-run CSVs.
inline constexpr double kBenchmarkLieRot10Deg = 17.3307917;
inline constexpr double kBenchmarkLogqRot10Deg = 18.4629515;
inline constexpr double kBenchmarkLogqRot100Deg = 16.2170276;

}  // namespace liepose::fixtures
