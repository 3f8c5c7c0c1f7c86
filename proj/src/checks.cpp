#include "liepose/checks.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "liepose/gaussian.hpp"
#include "liepose/lie.hpp"
#include "liepose/losses.hpp"
#include "liepose/rng.hpp"

namespace liepose {

namespace {

constexpr std::uint64_t kRoundtripSeed = 90101;
constexpr std::uint64_t kGradSeed = 90201;
constexpr std::uint64_t kSampleSeed = 90301;
constexpr std::uint64_t kDensitySeed = 90401;

Vec3 random_direction(Rng& rng) {
  Vec3 v;
  do {
    for (int i = 0; i < 3; ++i) {
      v[i] = rng.normal();
    }
  } while (v.norm() < 1e-6);
  return v.normalized();
}

SuiteResult suite_roundtrip() {
  SuiteResult result;
  result.suite = "roundtrip";
  Rng rng(kRoundtripSeed);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    Twist6 xi;
    xi.head<3>() = random_direction(rng) * (10.0 * rng.uniform());
    xi.tail<3>() = random_direction(rng) * rng.uniform(0.0, 2.0);
    const Twist6 back = se3_log(se3_exp(xi));
    worst = std::max(worst, (back - xi).cwiseAbs().maxCoeff());
  }
  result.lines.push_back(
      {"se3 exp/log round trip, 10000 twists", worst, 1e-9, worst <= 1e-9});
  return result;
}

struct GradCase {
  Prediction pred;
  PoseTarget target;
  HomoscedasticParams s;
};

GradCase random_grad_case(Rng& rng) {
  GradCase c;
  for (int i = 0; i < 3; ++i) {
    c.pred.v[kTranslationOffset + i] = rng.uniform(-2.0, 2.0);
  }
  Vec4 q_raw;
  do {
    for (int i = 0; i < 4; ++i) {
      q_raw[i] = rng.normal();
    }
  } while (q_raw.norm() <= 0.1);
  c.pred.v.segment<4>(kQuaternionOffset) = q_raw;
  for (int i = 0; i < 6; ++i) {
    c.pred.v[kCovarianceOffset + i] = rng.uniform(-1.5, 1.5);
  }
  for (int i = 6; i < 21; ++i) {
    c.pred.v[kCovarianceOffset + i] = 0.4 * rng.normal();
  }

  // Target offset from the predicted pose: translation components bounded
  // away from zero (the L1 losses have kinks there) and rotation angle kept
  // below pi - 0.1.
  Twist6 xi;
  for (int i = 0; i < 3; ++i) {
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    xi[i] = sign * rng.uniform(0.05, 1.0);
  }
  xi.tail<3>() = random_direction(rng) * rng.uniform(0.2, 2.5);
  const PoseSE3 mu =
      pose_from_quat(quat_normalize(c.pred.quat_raw()), c.pred.translation());
  c.target.pose = se3_compose(mu, se3_exp(xi));

  c.s.s_x = rng.uniform(-4.0, 1.0);
  c.s.s_q = rng.uniform(-4.0, 1.0);
  return c;
}

double max_grad_error(LossId id, const GradCase& c, double beta) {
  const LossEval eval = loss_grad(id, c.pred, c.target, beta, c.s);
  const Vec30 fd =
      finite_difference_gradient(id, c.pred, c.target, beta, c.s, 1e-5);
  Vec30 analytic;
  analytic.head<28>() = eval.grad.d_pred;
  analytic[28] = eval.grad.d_sx;
  analytic[29] = eval.grad.d_sq;
  double worst = 0.0;
  for (int k = 0; k < 30; ++k) {
    const double denom = std::max(1.0, std::abs(analytic[k]));
    worst = std::max(worst, std::abs(analytic[k] - fd[k]) / denom);
  }
  return worst;
}

SuiteResult suite_grad() {
  SuiteResult result;
  result.suite = "grad";
  const LossId ids[] = {LossId::PosenetL2, LossId::HomoL2, LossId::LogqL1,
                        LossId::LieNll};
  for (const LossId id : ids) {
    Rng rng(Rng::derive(kGradSeed, static_cast<std::uint64_t>(id)));
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      const GradCase c = random_grad_case(rng);
      worst = std::max(worst, max_grad_error(id, c, 500.0));
    }
    result.lines.push_back({std::string(loss_id_name(id)) +
                                " analytic vs central differences, 200 inputs",
                            worst, 1e-4, worst <= 1e-4});
  }
  return result;
}

ConcentratedGaussian sample_suite_distribution() {
  RawCovParams21 raw;
  raw << std::log(5.0), std::log(8.0), std::log(4.0), std::log(10.0),
      std::log(7.0), std::log(12.0),  //
      0.3, -0.2, 0.1, 0.4, -0.1,      //
      0.2, -0.3, 0.1, 0.2,            //
      -0.2, 0.3, 0.1,                 //
      0.2, -0.1,                      //
      0.3;
  Twist6 xi;
  xi << 0.3, -0.2, 0.5, 0.2, -0.4, 0.1;
  return {se3_exp(xi), factor_from_raw(raw)};
}

SuiteResult suite_sample() {
  SuiteResult result;
  result.suite = "sample";
  const ConcentratedGaussian dist = sample_suite_distribution();
  const Mat6 sigma = covariance(dist.factor);
  const PoseSE3 mean_inv = se3_inverse(dist.mean);

  const int n = 100000;
  Rng rng(kSampleSeed);
  Vec6 mean_acc = Vec6::Zero();
  Mat6 outer_acc = Mat6::Zero();
  std::vector<Twist6> residuals;
  residuals.reserve(n);
  for (int i = 0; i < n; ++i) {
    const PoseSE3 x = sample(dist, rng);
    const Twist6 delta = se3_log(se3_compose(mean_inv, x));
    residuals.push_back(delta);
    mean_acc += delta;
  }
  const Vec6 mean = mean_acc / static_cast<double>(n);
  for (const Twist6& delta : residuals) {
    const Vec6 centered = delta - mean;
    outer_acc += centered * centered.transpose();
  }
  const Mat6 empirical = outer_acc / static_cast<double>(n - 1);

  const double frob_rel = (empirical - sigma).norm() / sigma.norm();
  result.lines.push_back({"empirical covariance vs sigma (relative Frobenius, "
                          "100000 samples)",
                          frob_rel, 0.05, frob_rel <= 0.05});

  double worst_mean = 0.0;
  for (int i = 0; i < 6; ++i) {
    const double bound = 4.0 * std::sqrt(sigma(i, i) / n);
    worst_mean = std::max(worst_mean, std::abs(mean[i]) / bound);
  }
  result.lines.push_back({"residual mean within CLT bound (fraction of "
                          "4 sigma/sqrt(n))",
                          worst_mean, 1.0, worst_mean <= 1.0});
  return result;
}

// Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / dp;
      x -= step;
      if (std::abs(step) < 1e-15) {
        break;
      }
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (x * p1 - p0) / (x * x - 1.0);
    nodes[i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

SuiteResult suite_density() {
  SuiteResult result;
  result.suite = "density";

  // Tight isotropic factor (sigma = 0.1 per axis); the density mass then
  // lives well inside the integration box of +-0.45 = 4.5 sigma.
  RawCovParams21 raw = RawCovParams21::Zero();
  for (int i = 0; i < 6; ++i) {
    raw[i] = std::log(10.0);
  }
  const ConcentratedGaussian dist{PoseSE3{}, factor_from_raw(raw)};

  const int n_pts = 10;
  const double half = 0.45;
  std::vector<double> nodes, weights;
  gauss_legendre(n_pts, nodes, weights);

  double integral = 0.0;
  Twist6 delta;
  for (int i0 = 0; i0 < n_pts; ++i0)
    for (int i1 = 0; i1 < n_pts; ++i1)
      for (int i2 = 0; i2 < n_pts; ++i2)
        for (int i3 = 0; i3 < n_pts; ++i3)
          for (int i4 = 0; i4 < n_pts; ++i4)
            for (int i5 = 0; i5 < n_pts; ++i5) {
              delta << nodes[i0], nodes[i1], nodes[i2], nodes[i3], nodes[i4],
                  nodes[i5];
              delta *= half;
              const double w = weights[i0] * weights[i1] * weights[i2] *
                               weights[i3] * weights[i4] * weights[i5] *
                               std::pow(half, 6);
              integral += w * std::exp(log_density(dist, se3_exp(delta)));
            }
  const double quad_err = std::abs(integral - 1.0);
  result.lines.push_back(
      {"density integrates to 1 over a 6-D grid (L = 10 I)", quad_err, 0.02,
       quad_err <= 0.02});

  Rng rng(kDensitySeed);
  double worst_identity = 0.0;
  for (int i = 0; i < 1000; ++i) {
    RawCovParams21 p;
    for (int k = 0; k < 6; ++k) {
      p[k] = rng.uniform(-1.0, 2.0);
    }
    for (int k = 6; k < 21; ++k) {
      p[k] = 0.5 * rng.normal();
    }
    Twist6 xi_mean, xi_off;
    for (int k = 0; k < 6; ++k) {
      xi_mean[k] = rng.uniform(-1.0, 1.0);
      xi_off[k] = 0.3 * rng.normal();
    }
    const ConcentratedGaussian d{se3_exp(xi_mean), factor_from_raw(p)};
    const PoseSE3 x = se3_compose(d.mean, se3_exp(xi_off));
    worst_identity =
        std::max(worst_identity, std::abs(nll(d, x) + log_density(d, x)));
  }
  result.lines.push_back({"nll + log_density = 0 on 1000 inputs",
                          worst_identity, 1e-12, worst_identity <= 1e-12});
  return result;
}

}  // namespace

const std::vector<std::string>& check_suite_names() {
  static const std::vector<std::string> names = {"roundtrip", "grad", "sample",
                                                 "density"};
  return names;
}

SuiteResult run_check_suite(const std::string& name) {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteResult result;
  if (name == "roundtrip") {
    result = suite_roundtrip();
  } else if (name == "grad") {
    result = suite_grad();
  } else if (name == "sample") {
    result = suite_sample();
  } else if (name == "density") {
    result = suite_density();
  } else {
    throw std::invalid_argument("unknown check suite: " + name);
  }
  result.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

}  // namespace liepose
