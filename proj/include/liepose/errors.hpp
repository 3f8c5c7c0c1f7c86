#pragma once

#include <stdexcept>
#include <string>

namespace liepose {

struct ZeroNormQuaternion : std::runtime_error {
  ZeroNormQuaternion() : std::runtime_error("quaternion norm is below 1e-12") {}
};

struct NonFiniteInput : std::runtime_error {
  explicit NonFiniteInput(const std::string& what) : std::runtime_error(what) {}
};

struct SingularFactor : std::runtime_error {
  SingularFactor() : std::runtime_error("factor diagonal entry below 1e-150") {}
};

struct NonFiniteResidual : std::runtime_error {
  NonFiniteResidual() : std::runtime_error("pose residual is not finite") {}
};

struct DimensionMismatch : std::runtime_error {
  explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyInput : std::runtime_error {
  explicit EmptyInput(const std::string& what) : std::runtime_error(what) {}
};

struct SceneMismatch : std::runtime_error {
  explicit SceneMismatch(const std::string& what) : std::runtime_error(what) {}
};

struct DivergedTraining : std::runtime_error {
  explicit DivergedTraining(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace liepose
