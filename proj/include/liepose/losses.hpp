#pragma once

// Training losses over a 28-entry regressor output. Entry layout:
//   0..2   translation estimate (meters)
//   3..6   raw quaternion (w, x, y, z), normalized inside each loss
//   7..27  covariance parameters (log-diagonal first), used only by lie_nll
//
// Each loss has a value form and a gradient form; gradients are exact and a
// central-difference oracle is provided for verification.

#include <Eigen/Core>

#include <optional>
#include <string>
#include <string_view>

#include "liepose/gaussian.hpp"
#include "liepose/lie.hpp"

namespace liepose {

inline constexpr int kPredictionDim = 28;
inline constexpr int kTranslationOffset = 0;
inline constexpr int kQuaternionOffset = 3;
inline constexpr int kCovarianceOffset = 7;

using Vec28 = Eigen::Matrix<double, 28, 1>;
using Vec30 = Eigen::Matrix<double, 30, 1>;

struct Prediction {
  Vec28 v = Vec28::Zero();

  Eigen::Vector3d translation() const {
    return v.segment<3>(kTranslationOffset);
  }
  Vec4 quat_raw() const { return v.segment<4>(kQuaternionOffset); }
  RawCovParams21 cov_raw() const { return v.segment<21>(kCovarianceOffset); }
};

struct PoseTarget {
  PoseSE3 pose;
};

/// Learnable log-variances of the homoscedastic baselines.
struct HomoscedasticParams {
  double s_x = -3.0;
  double s_q = -3.0;
};

struct LossGradient {
  Vec28 d_pred = Vec28::Zero();
  double d_sx = 0.0;
  double d_sq = 0.0;
};

struct LossEval {
  double value = 0.0;
  LossGradient grad;
};

enum class LossId { PosenetL2, HomoL2, LogqL1, LieNll };

const char* loss_id_name(LossId id);
std::optional<LossId> parse_loss_id(std::string_view name);

/// ||t_hat - t||^2 + beta * min_{sign} ||q_hat -+ q||^2.
double loss_posenet_l2(const Prediction& pred, const PoseTarget& target,
                       double beta);

/// exp(-s_x) ||t_hat - t||^2 + s_x + exp(-s_q) min_{sign} ||q_hat -+ q||^2 + s_q.
double loss_homoscedastic_l2(const Prediction& pred, const PoseTarget& target,
                             const HomoscedasticParams& s);

/// L1 on translation and on quaternion log coordinates, with the same
/// learnable weighting as the homoscedastic L2 loss.
double loss_logq_l1(const Prediction& pred, const PoseTarget& target,
                    const HomoscedasticParams& s);

/// Negative log density of the target under the predicted concentrated
/// Gaussian: 0.5 ||L^T log(mu^{-1} x)||^2 + 0.5 log det Sigma + 3 log(2 pi).
double loss_lie_nll(const Prediction& pred, const PoseTarget& target);

LossEval grad_posenet_l2(const Prediction& pred, const PoseTarget& target,
                         double beta);
LossEval grad_homoscedastic_l2(const Prediction& pred, const PoseTarget& target,
                               const HomoscedasticParams& s);
LossEval grad_logq_l1(const Prediction& pred, const PoseTarget& target,
                      const HomoscedasticParams& s);
LossEval grad_lie_nll(const Prediction& pred, const PoseTarget& target);

double loss_value(LossId id, const Prediction& pred, const PoseTarget& target,
                  double beta, const HomoscedasticParams& s);
LossEval loss_grad(LossId id, const Prediction& pred, const PoseTarget& target,
                   double beta, const HomoscedasticParams& s);

/// Central differences over the 28 prediction entries plus s_x, s_q.
/// Verification oracle; step must lie in [1e-8, 1e-3].
Vec30 finite_difference_gradient(LossId id, const Prediction& pred,
                                 const PoseTarget& target, double beta,
                                 const HomoscedasticParams& s, double step);

}  // namespace liepose
