#include "liepose/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "liepose/dual.hpp"

namespace liepose {

namespace {

using D7 = Dual<7>;

template <typename S>
S square(const S& x) {
  return x * x;
}

// Squared L2 residuals of the quaternion baselines. The quaternion residual
// is taken against whichever of +-q_target is closer, so the loss does not
// penalize the double cover.
template <typename S>
void l2_residuals(const Vec3T<S>& t, const Vec4T<S>& q_raw,
                  const PoseSE3& target, S& r_t, S& r_q) {
  const QuatT<S> q = quat_normalize(q_raw);
  const UnitQuaternion qt = quat_from_rotmat(target.rotation);
  const S plus = square(q.w - qt.w) + square(q.x - qt.x) + square(q.y - qt.y) +
                 square(q.z - qt.z);
  const S minus = square(q.w + qt.w) + square(q.x + qt.x) +
                  square(q.y + qt.y) + square(q.z + qt.z);
  r_q = value_of(plus) <= value_of(minus) ? plus : minus;
  r_t = S(0);
  for (int i = 0; i < 3; ++i) {
    r_t += square(S(t[i] - target.translation[i]));
  }
}

template <typename S>
void l1_residuals(const Vec3T<S>& t, const Vec4T<S>& q_raw,
                  const PoseSE3& target, S& r_t, S& r_q) {
  using std::abs;
  const QuatT<S> q = quat_normalize(q_raw);
  const Vec3T<S> lq = quat_log(q);
  const Vec3 lt = quat_log(quat_from_rotmat(target.rotation));
  r_t = S(0);
  r_q = S(0);
  for (int i = 0; i < 3; ++i) {
    r_t += abs(t[i] - S(target.translation[i]));
    r_q += abs(lq[i] - S(lt[i]));
  }
}

template <typename S>
Vec6T<S> pose_residual(const Vec3T<S>& t, const Vec4T<S>& q_raw,
                       const PoseSE3& target) {
  const QuatT<S> q = quat_normalize(q_raw);
  const PoseT<S> mu{quat_to_rotmat(q), t};
  return se3_log(se3_compose(se3_inverse(mu), pose_cast<S>(target)));
}

void seed_pose(const Prediction& pred, Vec3T<D7>& t, Vec4T<D7>& q_raw) {
  for (int i = 0; i < 3; ++i) {
    t[i] = D7::seeded(pred.v[kTranslationOffset + i], i);
  }
  for (int i = 0; i < 4; ++i) {
    q_raw[i] = D7::seeded(pred.v[kQuaternionOffset + i], 3 + i);
  }
}

void write_pose_grad(const D7& loss, LossGradient& out) {
  for (int i = 0; i < 7; ++i) {
    out.d_pred[i] = loss.g[i];
  }
}

}  // namespace

const char* loss_id_name(LossId id) {
  switch (id) {
    case LossId::PosenetL2:
      return "posenet_l2";
    case LossId::HomoL2:
      return "homo_l2";
    case LossId::LogqL1:
      return "logq_l1";
    case LossId::LieNll:
      return "lie_nll";
  }
  throw std::invalid_argument("unknown loss id");
}

std::optional<LossId> parse_loss_id(std::string_view name) {
  if (name == "posenet_l2") return LossId::PosenetL2;
  if (name == "homo_l2") return LossId::HomoL2;
  if (name == "logq_l1") return LossId::LogqL1;
  if (name == "lie_nll") return LossId::LieNll;
  return std::nullopt;
}

double loss_posenet_l2(const Prediction& pred, const PoseTarget& target,
                       double beta) {
  double r_t, r_q;
  l2_residuals(pred.translation(), pred.quat_raw(), target.pose, r_t,
               r_q);
  return r_t + beta * r_q;
}

double loss_homoscedastic_l2(const Prediction& pred, const PoseTarget& target,
                             const HomoscedasticParams& s) {
  double r_t, r_q;
  l2_residuals(pred.translation(), pred.quat_raw(), target.pose, r_t,
               r_q);
  return std::exp(-s.s_x) * r_t + s.s_x + std::exp(-s.s_q) * r_q + s.s_q;
}

double loss_logq_l1(const Prediction& pred, const PoseTarget& target,
                    const HomoscedasticParams& s) {
  double r_t, r_q;
  l1_residuals(pred.translation(), pred.quat_raw(), target.pose, r_t,
               r_q);
  return std::exp(-s.s_x) * r_t + s.s_x + std::exp(-s.s_q) * r_q + s.s_q;
}

double loss_lie_nll(const Prediction& pred, const PoseTarget& target) {
  const CholeskyFactor factor = factor_from_raw(pred.cov_raw());
  const ConcentratedGaussian d{
      {quat_to_rotmat(quat_normalize(pred.quat_raw())), pred.translation()},
      factor};
  return nll(d, target.pose);
}

LossEval grad_posenet_l2(const Prediction& pred, const PoseTarget& target,
                         double beta) {
  Vec3T<D7> t;
  Vec4T<D7> q_raw;
  seed_pose(pred, t, q_raw);
  D7 r_t, r_q;
  l2_residuals(t, q_raw, target.pose, r_t, r_q);
  const D7 loss = r_t + beta * r_q;
  LossEval out;
  out.value = loss.v;
  write_pose_grad(loss, out.grad);
  return out;
}

LossEval grad_homoscedastic_l2(const Prediction& pred, const PoseTarget& target,
                               const HomoscedasticParams& s) {
  Vec3T<D7> t;
  Vec4T<D7> q_raw;
  seed_pose(pred, t, q_raw);
  D7 r_t, r_q;
  l2_residuals(t, q_raw, target.pose, r_t, r_q);
  const double w_t = std::exp(-s.s_x);
  const double w_q = std::exp(-s.s_q);
  const D7 loss = w_t * r_t + s.s_x + w_q * r_q + s.s_q;
  LossEval out;
  out.value = loss.v;
  write_pose_grad(loss, out.grad);
  out.grad.d_sx = 1.0 - w_t * r_t.v;
  out.grad.d_sq = 1.0 - w_q * r_q.v;
  return out;
}

LossEval grad_logq_l1(const Prediction& pred, const PoseTarget& target,
                      const HomoscedasticParams& s) {
  Vec3T<D7> t;
  Vec4T<D7> q_raw;
  seed_pose(pred, t, q_raw);
  D7 r_t, r_q;
  l1_residuals(t, q_raw, target.pose, r_t, r_q);
  const double w_t = std::exp(-s.s_x);
  const double w_q = std::exp(-s.s_q);
  const D7 loss = w_t * r_t + s.s_x + w_q * r_q + s.s_q;
  LossEval out;
  out.value = loss.v;
  write_pose_grad(loss, out.grad);
  out.grad.d_sx = 1.0 - w_t * r_t.v;
  out.grad.d_sq = 1.0 - w_q * r_q.v;
  return out;
}

LossEval grad_lie_nll(const Prediction& pred, const PoseTarget& target) {
  const CholeskyFactor factor = factor_from_raw(pred.cov_raw());
  detail::require_invertible(factor);

  Vec3T<D7> t;
  Vec4T<D7> q_raw;
  seed_pose(pred, t, q_raw);
  const Vec6T<D7> v_dual = pose_residual(t, q_raw, target.pose);

  Vec6 v;
  Eigen::Matrix<double, 6, 7> jac;
  for (int i = 0; i < 6; ++i) {
    v[i] = v_dual[i].v;
    jac.row(i) = v_dual[i].g.transpose();
  }
  if (!v.allFinite()) {
    throw NonFiniteResidual();
  }

  const Mat6& L = factor.upper();
  const Vec6 u = L.transpose() * v;  // L^T v
  const Vec6 w = L * u;              // (L L^T) v

  LossEval out;
  out.value =
      0.5 * u.squaredNorm() + 0.5 * log_det_sigma(factor) + kGaussianNormalizer6;

  const Eigen::Matrix<double, 7, 1> d_pose = jac.transpose() * w;
  for (int i = 0; i < 7; ++i) {
    out.grad.d_pred[i] = d_pose[i];
  }

  // d(0.5 v^T L L^T v)/dL = v (L^T v)^T on the upper triangle; the diagonal
  // picks up the log-determinant term and the log-parametrization chain rule.
  for (int i = 0; i < 6; ++i) {
    out.grad.d_pred[kCovarianceOffset + i] = v[i] * u[i] * L(i, i) - 1.0;
  }
  int k = 6;
  for (int i = 0; i < 6; ++i) {
    for (int j = i + 1; j < 6; ++j) {
      out.grad.d_pred[kCovarianceOffset + k++] = v[i] * u[j];
    }
  }
  return out;
}

double loss_value(LossId id, const Prediction& pred, const PoseTarget& target,
                  double beta, const HomoscedasticParams& s) {
  switch (id) {
    case LossId::PosenetL2:
      return loss_posenet_l2(pred, target, beta);
    case LossId::HomoL2:
      return loss_homoscedastic_l2(pred, target, s);
    case LossId::LogqL1:
      return loss_logq_l1(pred, target, s);
    case LossId::LieNll:
      return loss_lie_nll(pred, target);
  }
  throw std::invalid_argument("unknown loss id");
}

LossEval loss_grad(LossId id, const Prediction& pred, const PoseTarget& target,
                   double beta, const HomoscedasticParams& s) {
  switch (id) {
    case LossId::PosenetL2:
      return grad_posenet_l2(pred, target, beta);
    case LossId::HomoL2:
      return grad_homoscedastic_l2(pred, target, s);
    case LossId::LogqL1:
      return grad_logq_l1(pred, target, s);
    case LossId::LieNll:
      return grad_lie_nll(pred, target);
  }
  throw std::invalid_argument("unknown loss id");
}

Vec30 finite_difference_gradient(LossId id, const Prediction& pred,
                                 const PoseTarget& target, double beta,
                                 const HomoscedasticParams& s, double step) {
  if (!(step >= 1e-8 && step <= 1e-3)) {
    throw std::invalid_argument("finite difference step must lie in [1e-8, 1e-3]");
  }
  Vec30 grad = Vec30::Zero();
  for (int k = 0; k < 30; ++k) {
    Prediction lo = pred;
    Prediction hi = pred;
    HomoscedasticParams s_lo = s;
    HomoscedasticParams s_hi = s;
    if (k < kPredictionDim) {
      lo.v[k] -= step;
      hi.v[k] += step;
    } else if (k == kPredictionDim) {
      s_lo.s_x -= step;
      s_hi.s_x += step;
    } else {
      s_lo.s_q -= step;
      s_hi.s_q += step;
    }
    const double f_lo = loss_value(id, lo, target, beta, s_lo);
    const double f_hi = loss_value(id, hi, target, beta, s_hi);
    grad[k] = (f_hi - f_lo) / (2.0 * step);
  }
  return grad;
}

}  // namespace liepose
