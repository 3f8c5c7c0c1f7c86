#include <cmath>
#include <numeric>

#include <doctest.h>

#include "fixtures.hpp"
#include "liepose/errors.hpp"
#include "liepose/gaussian.hpp"
#include "liepose/harness.hpp"
#include "liepose/metrics.hpp"
#include "liepose/rng.hpp"

using namespace liepose;

namespace {

SceneConfig small_scene(std::uint64_t seed) {
  SceneConfig cfg;
  cfg.scene_name = "unit";
  cfg.n_train = 256;
  cfg.n_test = 64;
  cfg.feature_dim = 12;
  cfg.symmetry_fraction = 0.0;
  cfg.feature_noise_sigma = 0.05;
  cfg.seed = seed;
  return cfg;
}

TrainConfig small_train(const std::string& loss_id, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.loss_id = loss_id;
  cfg.epochs = 2;
  cfg.batch_size = 32;
  cfg.learning_rate = 1e-3;
  cfg.seed = seed;
  cfg.hidden = 16;
  return cfg;
}

RegressorParams constant_params(int feature_dim, int hidden, const Vec28& out) {
  RegressorParams p;
  p.hidden = hidden;
  p.W1 = Eigen::MatrixXd::Zero(feature_dim, hidden);
  p.b1 = Eigen::VectorXd::Zero(hidden);
  p.W2 = Eigen::MatrixXd::Zero(hidden, 28);
  p.b2 = out;
  return p;
}

Vec28 identity_output() {
  Vec28 out = Vec28::Zero();
  out[kQuaternionOffset] = 1.0;
  return out;
}

double mean_rot_variance(const RegressorParams& params,
                         const SyntheticDataset& data, bool symmetric) {
  double acc = 0.0;
  int count = 0;
  for (int r = 0; r < data.n(); ++r) {
    if ((data.is_symmetric[r] != 0) != symmetric) {
      continue;
    }
    const Prediction pred = forward(params, data.features.row(r).transpose());
    const Mat6 sigma = covariance(factor_from_raw(pred.cov_raw()));
    acc += (sigma(3, 3) + sigma(4, 4) + sigma(5, 5)) / 3.0;
    ++count;
  }
  REQUIRE(count > 0);
  return acc / count;
}

}  // namespace

TEST_CASE("generate_scene is deterministic") {
  const SceneConfig cfg = small_scene(31);
  const SyntheticDataset a = generate_scene(cfg);
  const SyntheticDataset b = generate_scene(cfg);
  CHECK(a.features == b.features);
  REQUIRE(a.targets.size() == b.targets.size());
  for (std::size_t i = 0; i < a.targets.size(); ++i) {
    CHECK(a.targets[i].rotation == b.targets[i].rotation);
    CHECK(a.targets[i].translation == b.targets[i].translation);
  }
  CHECK(a.is_symmetric == b.is_symmetric);
  CHECK(a.n_train == cfg.n_train);
  CHECK(a.n() == cfg.n_train + cfg.n_test);
}

TEST_CASE("generate_scene with zero symmetry marks no rows") {
  const SyntheticDataset data = generate_scene(small_scene(32));
  for (const auto flag : data.is_symmetric) {
    CHECK(flag == 0);
  }
}

TEST_CASE("symmetric row count follows the configured fraction") {
  SceneConfig cfg = small_scene(33);
  cfg.n_train = 9000;
  cfg.n_test = 1000;
  cfg.symmetry_fraction = 0.3;
  const SyntheticDataset data = generate_scene(cfg);
  const int count = std::accumulate(data.is_symmetric.begin(),
                                    data.is_symmetric.end(), 0);
  const double bound = 3.0 * std::sqrt(10000 * 0.3 * 0.7);
  CHECK(std::abs(count - 3000) <= bound);
}

TEST_CASE("generate_scene targets are valid rotations") {
  const SyntheticDataset data = generate_scene(small_scene(34));
  for (const PoseSE3& pose : data.targets) {
    CHECK(is_rotation_matrix(pose.rotation, 1e-12));
    CHECK(pose.translation.cwiseAbs().maxCoeff() <= 2.0);
  }
  CHECK(data.features.allFinite());
}

TEST_CASE("scene config validation rejects bad values") {
  SceneConfig cfg = small_scene(35);
  cfg.scene_name = "AVERAGE";
  CHECK_THROWS_AS(generate_scene(cfg), ConfigError);
  cfg.scene_name = "a,b";
  CHECK_THROWS_AS(generate_scene(cfg), ConfigError);
  cfg = small_scene(35);
  cfg.symmetry_fraction = 1.5;
  CHECK_THROWS_AS(generate_scene(cfg), ConfigError);
  cfg = small_scene(35);
  cfg.n_test = 0;
  CHECK_THROWS_AS(generate_scene(cfg), ConfigError);
}

TEST_CASE("slice_rows preserves row content") {
  const SyntheticDataset data = generate_scene(small_scene(36));
  const SyntheticDataset tail = slice_rows(data, data.n_train, data.n());
  CHECK(tail.n() == data.n_test());
  CHECK(tail.features.row(0) == data.features.row(data.n_train));
  CHECK(tail.targets.front().translation ==
        data.targets[data.n_train].translation);
  CHECK_THROWS_AS(slice_rows(data, -1, 3), DimensionMismatch);
  CHECK_THROWS_AS(slice_rows(data, 0, data.n() + 1), DimensionMismatch);
}

TEST_CASE("init_regressor biases the quaternion and covariance slots") {
  TrainConfig cfg = small_train("lie_nll", 40);
  const RegressorParams p = init_regressor(12, cfg);
  CHECK(p.b2[kQuaternionOffset] == 1.0);
  CHECK(p.b2[kQuaternionOffset + 1] == 0.0);
  CHECK(p.b2[kQuaternionOffset + 2] == 0.0);
  CHECK(p.b2[kQuaternionOffset + 3] == 0.0);
  for (int i = 0; i < 6; ++i) {
    CHECK(p.b2[kCovarianceOffset + i] == 1.5);
  }
  const double r1 = 1.0 / std::sqrt(12.0);
  CHECK(p.W1.cwiseAbs().maxCoeff() <= r1);
  CHECK(p.W1.cwiseAbs().maxCoeff() > 0.0);

  const RegressorParams q = init_regressor(12, cfg);
  CHECK(p.W1 == q.W1);
  CHECK(p.W2 == q.W2);
}

TEST_CASE("forward with zero weights returns the output bias") {
  const RegressorParams p = constant_params(8, 4, identity_output());
  const Prediction pred = forward(p, Eigen::VectorXd::Constant(8, 0.7));
  CHECK(pred.translation().norm() == 0.0);
  CHECK(pred.quat_raw() == Vec4(1, 0, 0, 0));
  CHECK_THROWS_AS(forward(p, Eigen::VectorXd::Zero(5)), DimensionMismatch);
}

TEST_CASE("forward stays finite for large inputs") {
  Rng rng(41);
  TrainConfig cfg = small_train("lie_nll", 41);
  cfg.hidden = 8;
  const RegressorParams p = init_regressor(6, cfg);
  Eigen::VectorXd f(6);
  for (int i = 0; i < 6; ++i) {
    f[i] = 1e6 * rng.normal();
  }
  CHECK(forward(p, f).v.allFinite());
}

TEST_CASE("backward matches the affine structure") {
  Rng rng(42);
  TrainConfig cfg = small_train("lie_nll", 42);
  cfg.hidden = 5;
  const RegressorParams p = init_regressor(7, cfg);
  Eigen::VectorXd f(7);
  for (int i = 0; i < 7; ++i) {
    f[i] = rng.normal();
  }

  const ParamGrads zero = backward(p, f, Vec28::Zero());
  CHECK(zero.d_W1.norm() == 0.0);
  CHECK(zero.d_b1.norm() == 0.0);
  CHECK(zero.d_W2.norm() == 0.0);
  CHECK(zero.d_b2.norm() == 0.0);

  Vec28 upstream;
  for (int i = 0; i < 28; ++i) {
    upstream[i] = rng.normal();
  }
  const ParamGrads g = backward(p, f, upstream);
  CHECK(g.d_b2 == upstream);
}

TEST_CASE("chained loss and regressor gradients match finite differences") {
  const int feature_dim = 5;
  const double step = 1e-5;
  for (const LossId id : {LossId::PosenetL2, LossId::HomoL2, LossId::LogqL1,
                          LossId::LieNll}) {
    Rng rng(900 + static_cast<std::uint64_t>(id));
    TrainConfig cfg = small_train(loss_id_name(id), 43);
    cfg.hidden = 6;
    const HomoscedasticParams s{-1.0, 0.5};
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      RegressorParams p = init_regressor(feature_dim, cfg);
      // Perturb so the quaternion block is not exactly at the bias point.
      for (int j = 0; j < p.W2.cols(); ++j) {
        for (int i = 0; i < p.W2.rows(); ++i) {
          p.W2(i, j) += 0.3 * rng.normal();
        }
      }
      Eigen::VectorXd f(feature_dim);
      for (int i = 0; i < feature_dim; ++i) {
        f[i] = rng.normal();
      }
      Twist6 xi;
      for (int i = 0; i < 3; ++i) {
        xi[i] = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.1, 1.0);
      }
      Vec3 axis(rng.normal(), rng.normal(), rng.normal());
      xi.tail<3>() = axis.normalized() * rng.uniform(0.3, 2.0);
      const Prediction at = forward(p, f);
      const PoseSE3 mu =
          pose_from_quat(quat_normalize(at.quat_raw()), at.translation());
      const PoseTarget target{se3_compose(mu, se3_exp(xi))};

      const LossEval eval = loss_grad(id, at, target, 500.0, s);
      const ParamGrads analytic = backward(p, f, eval.grad.d_pred);

      Eigen::VectorXd flat = pack_params(p);
      Eigen::VectorXd analytic_flat(flat.size());
      {
        int pos = 0;
        analytic_flat.segment(pos, analytic.d_W1.size()) =
            Eigen::Map<const Eigen::VectorXd>(analytic.d_W1.data(),
                                              analytic.d_W1.size());
        pos += static_cast<int>(analytic.d_W1.size());
        analytic_flat.segment(pos, analytic.d_b1.size()) = analytic.d_b1;
        pos += static_cast<int>(analytic.d_b1.size());
        analytic_flat.segment(pos, analytic.d_W2.size()) =
            Eigen::Map<const Eigen::VectorXd>(analytic.d_W2.data(),
                                              analytic.d_W2.size());
        pos += static_cast<int>(analytic.d_W2.size());
        analytic_flat.segment(pos, analytic.d_b2.size()) = analytic.d_b2;
      }

      for (int k = 0; k < flat.size(); ++k) {
        Eigen::VectorXd plus = flat, minus = flat;
        plus[k] += step;
        minus[k] -= step;
        const RegressorParams pp =
            unpack_params(plus, feature_dim, cfg.hidden);
        const RegressorParams pm =
            unpack_params(minus, feature_dim, cfg.hidden);
        const double fp = loss_value(id, forward(pp, f), target, 500.0, s);
        const double fm = loss_value(id, forward(pm, f), target, 500.0, s);
        const double fd = (fp - fm) / (2.0 * step);
        const double denom = std::max(1.0, std::abs(analytic_flat[k]));
        worst = std::max(worst, std::abs(analytic_flat[k] - fd) / denom);
      }
    }
    INFO("loss " << loss_id_name(id));
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("adam_step with zero gradients applies only weight decay") {
  TrainConfig cfg = small_train("lie_nll", 44);
  cfg.learning_rate = 0.01;
  cfg.weight_decay = 0.1;
  AdamState state;
  state.params = Eigen::VectorXd::Constant(4, 2.0);
  state.m = Eigen::VectorXd::Zero(4);
  state.v = Eigen::VectorXd::Zero(4);
  adam_step(state, Eigen::VectorXd::Zero(4), cfg, 1);
  CHECK(state.params.isApproxToConstant(2.0 * (1.0 - 0.01 * 0.1), 1e-12));
}

TEST_CASE("adam_step under a constant gradient moves by the learning rate") {
  TrainConfig cfg = small_train("lie_nll", 45);
  cfg.learning_rate = 0.01;
  cfg.weight_decay = 0.0;
  AdamState state;
  state.params = Eigen::VectorXd::Constant(1, 1.0);
  state.m = Eigen::VectorXd::Zero(1);
  state.v = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd g = Eigen::VectorXd::Constant(1, 3.0);
  for (int t = 1; t <= 200; ++t) {
    adam_step(state, g, cfg, t);
  }
  CHECK(state.params[0] == doctest::Approx(1.0 - 200 * 0.01).epsilon(1e-6));
}

TEST_CASE("adam_step honors a zero learning rate and rejects t below one") {
  TrainConfig cfg = small_train("lie_nll", 46);
  cfg.learning_rate = 0.0;
  AdamState state;
  state.params = Eigen::VectorXd::Constant(3, 1.5);
  state.m = Eigen::VectorXd::Zero(3);
  state.v = Eigen::VectorXd::Zero(3);
  adam_step(state, Eigen::VectorXd::Constant(3, 2.0), cfg, 1);
  CHECK(state.params.isApproxToConstant(1.5, 1e-15));
  CHECK_THROWS_AS(adam_step(state, Eigen::VectorXd::Zero(3), cfg, 0),
                  std::invalid_argument);
}

TEST_CASE("train is deterministic") {
  const SyntheticDataset data = generate_scene(small_scene(47));
  const TrainConfig cfg = small_train("homo_l2", 47);
  const TrainResult a = train(data, cfg);
  const TrainResult b = train(data, cfg);
  REQUIRE(a.epochs.size() == b.epochs.size());
  for (std::size_t i = 0; i < a.epochs.size(); ++i) {
    CHECK(a.epochs[i].mean_train_loss == b.epochs[i].mean_train_loss);
    CHECK(a.epochs[i].median_rot_deg == b.epochs[i].median_rot_deg);
    CHECK(a.epochs[i].median_trans_m == b.epochs[i].median_trans_m);
  }
  CHECK(pack_params(a.params) == pack_params(b.params));
  CHECK(a.s.s_x == b.s.s_x);
  CHECK(a.s.s_q == b.s.s_q);
}

TEST_CASE("train updates the homoscedastic scalars") {
  const SyntheticDataset data = generate_scene(small_scene(48));
  TrainConfig cfg = small_train("logq_l1", 48);
  cfg.epochs = 3;
  const TrainResult result = train(data, cfg);
  CHECK(result.s.s_x != cfg.s_init);
  CHECK(result.s.s_q != cfg.s_init);

  TrainConfig fixed = small_train("lie_nll", 48);
  const TrainResult lie = train(data, fixed);
  CHECK(lie.s.s_x == fixed.s_init);
  CHECK(lie.s.s_q == fixed.s_init);
}

TEST_CASE("train reports each epoch through the callback") {
  const SyntheticDataset data = generate_scene(small_scene(49));
  TrainConfig cfg = small_train("posenet_l2", 49);
  cfg.epochs = 4;
  int calls = 0;
  const TrainResult result = train(data, cfg, [&](const EpochRecord& r) {
    ++calls;
    CHECK(r.epoch == calls);
    CHECK(std::isfinite(r.mean_train_loss));
  });
  CHECK(calls == 4);
  CHECK(result.epochs.size() == 4);
}

TEST_CASE("train throws DivergedTraining on an exploding configuration") {
  // With s_init = 10 the homoscedastic gradients are ~1, so the first Adam
  // step drops s by almost the full learning rate and exp(-s) overflows on
  // the next batch.
  const SyntheticDataset data = generate_scene(small_scene(50));
  TrainConfig cfg = small_train("homo_l2", 50);
  cfg.learning_rate = 1e3;
  cfg.s_init = 10.0;
  cfg.epochs = 5;
  CHECK_THROWS_AS(train(data, cfg), DivergedTraining);
}

TEST_CASE("train propagates a singular covariance factor from the loss") {
  // lie_nll at an absurd learning rate drives raw diagonal entries so far
  // negative that the factor hits the invertibility floor; that loss error
  // passes through untranslated.
  const SyntheticDataset data = generate_scene(small_scene(50));
  TrainConfig cfg = small_train("lie_nll", 50);
  cfg.learning_rate = 1e3;
  cfg.epochs = 5;
  CHECK_THROWS_AS(train(data, cfg), SingularFactor);
}

TEST_CASE("train rejects unknown losses and empty splits") {
  const SyntheticDataset data = generate_scene(small_scene(51));
  TrainConfig cfg = small_train("nope", 51);
  CHECK_THROWS_AS(train(data, cfg), ConfigError);

  SyntheticDataset no_test = generate_scene(small_scene(51));
  no_test.n_train = no_test.n();
  CHECK_THROWS_AS(train(no_test, small_train("lie_nll", 51)), EmptyInput);
}

TEST_CASE("evaluate scores an exact constant regressor at zero") {
  SceneConfig cfg = small_scene(52);
  cfg.n_train = 1;
  cfg.n_test = 1;
  SyntheticDataset data = generate_scene(cfg);
  const PoseSE3 pose = data.targets[0];
  for (auto& t : data.targets) {
    t = pose;
  }
  const UnitQuaternion q = quat_from_rotmat(pose.rotation);
  Vec28 out = Vec28::Zero();
  out.segment<3>(kTranslationOffset) = pose.translation;
  out.segment<4>(kQuaternionOffset) = Vec4(q.w, q.x, q.y, q.z);
  const EvalResult result =
      evaluate(constant_params(cfg.feature_dim, 4, out), data);
  CHECK(result.skipped == 0);
  for (const PoseError& e : result.errors) {
    CHECK(e.rot_deg <= 1e-5);
    CHECK(e.trans_m <= 1e-12);
  }
}

TEST_CASE("a constant identity regressor lands at the uniform-rotation median") {
  SceneConfig cfg = small_scene(53);
  cfg.n_train = 1;
  cfg.n_test = 9999;
  const SyntheticDataset data = generate_scene(cfg);
  const EvalResult result =
      evaluate(constant_params(cfg.feature_dim, 4, identity_output()), data);
  std::vector<double> rot;
  for (const PoseError& e : result.errors) {
    rot.push_back(e.rot_deg);
  }
  CHECK(std::abs(median(rot) - fixtures::kUniformRotationMedianDeg) <= 3.0);
}

TEST_CASE("evaluate skips rows whose quaternion output collapses") {
  SceneConfig cfg = small_scene(54);
  cfg.n_train = 4;
  cfg.n_test = 4;
  const SyntheticDataset data = generate_scene(cfg);
  const EvalResult result =
      evaluate(constant_params(cfg.feature_dim, 4, Vec28::Zero()), data);
  CHECK(result.skipped == data.n());
  CHECK(result.errors.empty());

  SyntheticDataset empty = slice_rows(data, 0, 0);
  CHECK_THROWS_AS(
      evaluate(constant_params(cfg.feature_dim, 4, identity_output()), empty),
      EmptyInput);
}

TEST_CASE("long lie_nll training solves a symmetry-free scene") {
  SceneConfig scene = small_scene(55);
  scene.n_train = 2000;
  scene.n_test = 500;
  scene.feature_dim = fixtures::kReferenceFeatureDim;
  scene.feature_noise_sigma = 0.01;
  const SyntheticDataset data = generate_scene(scene);

  TrainConfig cfg;
  cfg.loss_id = "lie_nll";
  cfg.epochs = 100;
  cfg.learning_rate = fixtures::kReferenceLearningRate;
  cfg.hidden = fixtures::kReferenceHidden;
  cfg.seed = 55;
  const TrainResult result = train(data, cfg);
  const EpochRecord& last = result.epochs.back();
  CHECK(last.median_rot_deg < 5.0);
  CHECK(last.median_trans_m < 0.1);
}

TEST_CASE("lie_nll learns larger rotation variance on symmetric rows") {
  SceneConfig scene = small_scene(56);
  scene.n_train = 2000;
  scene.n_test = 500;
  scene.feature_dim = fixtures::kReferenceFeatureDim;
  scene.symmetry_fraction = 0.3;
  const SyntheticDataset data = generate_scene(scene);

  TrainConfig cfg;
  cfg.loss_id = "lie_nll";
  cfg.epochs = 100;
  cfg.learning_rate = fixtures::kReferenceLearningRate;
  cfg.hidden = fixtures::kReferenceHidden;
  cfg.seed = 56;
  const TrainResult result = train(data, cfg);

  const SyntheticDataset test = slice_rows(data, data.n_train, data.n());
  const double sym_var = mean_rot_variance(result.params, test, true);
  const double plain_var = mean_rot_variance(result.params, test, false);
  CHECK(sym_var > plain_var);
}
