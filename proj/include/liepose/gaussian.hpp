#pragma once

// Concentrated Gaussian on SE(3). A sample is x = mean * se3_exp(delta) with
// delta ~ N(0, Sigma) in the tangent space at the mean, and the information
// matrix is parametrized through its Cholesky factor: Sigma^{-1} = L L^T with
// L upper triangular and a positive diagonal.
//
// The raw 21-parameter encoding is 6 log-diagonal entries followed by the 15
// strict upper-triangle entries in row-major order.

#include <Eigen/Core>
#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "liepose/errors.hpp"
#include "liepose/lie.hpp"
#include "liepose/rng.hpp"

namespace liepose {

using RawCovParams21 = Eigen::Matrix<double, 21, 1>;

inline constexpr double kSingularDiag = 1e-150;

class CholeskyFactor {
 public:
  static CholeskyFactor identity() { return CholeskyFactor(Mat6::Identity()); }

  /// Validates upper-triangular shape and a positive diagonal.
  static CholeskyFactor from_upper(const Mat6& L) {
    for (int i = 0; i < 6; ++i) {
      if (!(L(i, i) > 0.0)) {
        throw std::invalid_argument("factor diagonal must be positive");
      }
      for (int j = 0; j < i; ++j) {
        if (L(i, j) != 0.0) {
          throw std::invalid_argument("factor must be upper triangular");
        }
      }
    }
    return CholeskyFactor(L);
  }

  const Mat6& upper() const { return L_; }

  /// Sigma^{-1} = L L^T.
  Mat6 information() const { return L_ * L_.transpose(); }

 private:
  explicit CholeskyFactor(const Mat6& L) : L_(L) {}
  friend CholeskyFactor factor_from_raw(const RawCovParams21&);
  Mat6 L_;
};

namespace detail {

inline void require_invertible(const CholeskyFactor& f) {
  for (int i = 0; i < 6; ++i) {
    if (!(f.upper()(i, i) > kSingularDiag)) {
      throw SingularFactor();
    }
  }
}

}  // namespace detail

inline CholeskyFactor factor_from_raw(const RawCovParams21& p) {
  if (!p.allFinite()) {
    throw NonFiniteInput("covariance parameters must be finite");
  }
  Mat6 L = Mat6::Zero();
  for (int i = 0; i < 6; ++i) {
    // exp underflows to 0 near -745; keep the stored diagonal positive so the
    // singularity check is the single rejection point.
    L(i, i) = std::max(std::exp(p[i]), std::numeric_limits<double>::min());
  }
  int k = 6;
  for (int i = 0; i < 6; ++i) {
    for (int j = i + 1; j < 6; ++j) {
      L(i, j) = p[k++];
    }
  }
  return CholeskyFactor(L);
}

/// Sigma = (L L^T)^{-1}, by two triangular solves. Symmetrized on return.
inline Mat6 covariance(const CholeskyFactor& f) {
  detail::require_invertible(f);
  const Mat6& L = f.upper();
  const Mat6 y = L.triangularView<Eigen::Upper>().solve(Mat6::Identity());
  const Mat6 sigma = L.transpose().triangularView<Eigen::Lower>().solve(y);
  return 0.5 * (sigma + sigma.transpose());
}

/// log det Sigma = -2 sum_i log L_ii.
inline double log_det_sigma(const CholeskyFactor& f) {
  detail::require_invertible(f);
  double acc = 0.0;
  for (int i = 0; i < 6; ++i) {
    acc += std::log(f.upper()(i, i));
  }
  return -2.0 * acc;
}

/// v^T (L L^T) v = ||L^T v||^2, evaluated without forming the information
/// matrix. Templated so the residual may carry derivatives.
template <typename S>
S mahalanobis_sq(const CholeskyFactor& f, const Eigen::Matrix<S, 6, 1>& v) {
  const Mat6& L = f.upper();
  S acc(0.0);
  for (int j = 0; j < 6; ++j) {
    S u(0.0);
    for (int i = 0; i <= j; ++i) {
      u += L(i, j) * v[i];
    }
    acc += u * u;
  }
  return acc;
}

struct ConcentratedGaussian {
  PoseSE3 mean;
  CholeskyFactor factor = CholeskyFactor::identity();
};

inline const double kGaussianNormalizer6 =
    3.0 * std::log(2.0 * std::numbers::pi);

/// Sample with an externally supplied standard-normal vector z: the tangent
/// perturbation solves L^T delta = z, so delta ~ N(0, (L L^T)^{-1}).
inline PoseSE3 sample_with_noise(const ConcentratedGaussian& d, const Vec6& z) {
  detail::require_invertible(d.factor);
  const Vec6 delta = d.factor.upper()
                         .transpose()
                         .triangularView<Eigen::Lower>()
                         .solve(z);
  return se3_compose(d.mean, se3_exp(delta));
}

/// Draws z components in index order 0..5 from rng.normal().
inline PoseSE3 sample(const ConcentratedGaussian& d, Rng& rng) {
  Vec6 z;
  for (int i = 0; i < 6; ++i) {
    z[i] = rng.normal();
  }
  return sample_with_noise(d, z);
}

inline double nll(const ConcentratedGaussian& d, const PoseSE3& x) {
  detail::require_invertible(d.factor);
  const Twist6 v = se3_log(se3_compose(se3_inverse(d.mean), x));
  if (!v.allFinite()) {
    throw NonFiniteResidual();
  }
  return 0.5 * mahalanobis_sq(d.factor, v) + 0.5 * log_det_sigma(d.factor) +
         kGaussianNormalizer6;
}

inline double log_density(const ConcentratedGaussian& d, const PoseSE3& x) {
  return -nll(d, x);
}

}  // namespace liepose
