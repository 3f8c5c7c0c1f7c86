#include "liepose/harness.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "liepose/errors.hpp"

namespace liepose {

namespace {

// Substream tags; fixed so that seeded runs are reproducible.
constexpr std::uint64_t kStreamEmbedding = 1;
constexpr std::uint64_t kStreamRows = 2;
constexpr std::uint64_t kStreamInit = 1;
constexpr std::uint64_t kStreamShuffle = 2;

Mat3 random_rotation(Rng& rng) {
  Vec4 q_raw;
  for (int i = 0; i < 4; ++i) {
    q_raw[i] = rng.normal();
  }
  return quat_to_rotmat(quat_normalize(q_raw));
}

// 180 degree rotation about z.
const Mat3 kZFlip = (Mat3() << -1, 0, 0, 0, -1, 0, 0, 0, 1).finished();

// Twist-free representative of the orbit {R * Rz(angle)}: the swing part of
// the swing-twist decomposition about the object z axis. Every rotation of
// the orbit maps to the same swing, so features computed from it carry no
// information about the twist angle. For a unit quaternion (w, x, y, z) the
// swing is ((w x - z y)/s, (w y + z x)/s, 0) with real part s = sqrt(w^2 +
// z^2); when s vanishes the rotation is already a 180 degree swing and is
// its own representative.
Mat3 canonical_swing(const Mat3& R) {
  const UnitQuaternion q = quat_from_rotmat(R);
  const double s = std::sqrt(q.w * q.w + q.z * q.z);
  if (s < 1e-12) {
    return R;
  }
  UnitQuaternion swing;
  swing.w = s;
  swing.x = (q.w * q.x - q.z * q.y) / s;
  swing.y = (q.w * q.y + q.z * q.x) / s;
  swing.z = 0.0;
  return quat_to_rotmat(swing);
}

}  // namespace

void validate(const SceneConfig& cfg) {
  if (cfg.scene_name.empty() ||
      cfg.scene_name.find(',') != std::string::npos) {
    throw ConfigError("scene_name must be non-empty and free of ','");
  }
  if (cfg.scene_name == "AVERAGE") {
    throw ConfigError("scene_name AVERAGE is reserved for the aggregate row");
  }
  if (cfg.n_train < 1 || cfg.n_test < 1) {
    throw ConfigError("n_train and n_test must be at least 1");
  }
  if (cfg.feature_dim < 1) {
    throw ConfigError("feature_dim must be at least 1");
  }
  if (!(cfg.symmetry_fraction >= 0.0 && cfg.symmetry_fraction <= 1.0)) {
    throw ConfigError("symmetry_fraction must lie in [0, 1]");
  }
  if (!(cfg.feature_noise_sigma >= 0.0)) {
    throw ConfigError("feature_noise_sigma must be nonnegative");
  }
}

void validate(const TrainConfig& cfg) {
  if (!parse_loss_id(cfg.loss_id)) {
    throw ConfigError("loss_id must be one of posenet_l2, homo_l2, logq_l1, lie_nll");
  }
  if (cfg.epochs < 1) {
    throw ConfigError("epochs must be at least 1");
  }
  if (cfg.batch_size < 1) {
    throw ConfigError("batch_size must be at least 1");
  }
  if (!(cfg.learning_rate > 0.0)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (!(cfg.weight_decay >= 0.0)) {
    throw ConfigError("weight_decay must be nonnegative");
  }
  if (!(cfg.beta1 > 0.0 && cfg.beta1 < 1.0) ||
      !(cfg.beta2 > 0.0 && cfg.beta2 < 1.0)) {
    throw ConfigError("beta1 and beta2 must lie in (0, 1)");
  }
  if (!(cfg.adam_eps > 0.0)) {
    throw ConfigError("adam_eps must be positive");
  }
  if (!std::isfinite(cfg.s_init)) {
    throw ConfigError("s_init must be finite");
  }
  if (cfg.hidden < 1) {
    throw ConfigError("hidden must be at least 1");
  }
  if (!(cfg.beta > 0.0)) {
    throw ConfigError("beta must be positive");
  }
}

SyntheticDataset generate_scene(const SceneConfig& cfg) {
  validate(cfg);
  const int n = cfg.n_train + cfg.n_test;
  SyntheticDataset data;
  data.features.resize(n, cfg.feature_dim);
  data.targets.resize(n);
  data.is_symmetric.assign(n, 0);
  data.n_train = cfg.n_train;

  // Fixed per-scene embedding of the 6-D pose coordinates into feature space.
  // Each feature reads one coordinate through a randomly gained and shifted
  // tanh, normalized by the coordinate's range so the units stay in the
  // informative part of the nonlinearity. Coordinates are covered in a
  // round-robin order with any leftover features assigned to the rotation
  // axes, which are the harder ones to pin down.
  Rng embed_rng(Rng::derive(cfg.seed, kStreamEmbedding));
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(cfg.feature_dim, 6);
  Eigen::VectorXd b(cfg.feature_dim);
  constexpr double kCoordRange[6] = {2.0, 2.0, 2.0, std::numbers::pi,
                                     std::numbers::pi, std::numbers::pi};
  constexpr int kLeftoverOrder[6] = {3, 4, 5, 0, 1, 2};
  for (int i = 0; i < cfg.feature_dim; ++i) {
    const int round = i / 6;
    const int slot = i % 6;
    const int coord = (round < cfg.feature_dim / 6)
                          ? slot
                          : kLeftoverOrder[slot];
    const double gain = embed_rng.uniform(1.0, 1.6);
    const double sign = embed_rng.uniform() < 0.5 ? -1.0 : 1.0;
    A(i, coord) = sign * gain / kCoordRange[coord];
    b[i] = embed_rng.uniform(-0.5, 0.5);
  }

  // Per-row draw order: translation (3 uniforms), rotation (4 normals),
  // symmetry coin, flip coin, feature noise. Training rows come first.
  Rng row_rng(Rng::derive(cfg.seed, kStreamRows));
  for (int r = 0; r < n; ++r) {
    Vec3 t;
    for (int i = 0; i < 3; ++i) {
      t[i] = row_rng.uniform(-2.0, 2.0);
    }
    const Mat3 R = random_rotation(row_rng);
    const bool symmetric = row_rng.uniform() < cfg.symmetry_fraction;
    const bool flip = row_rng.uniform() < 0.5;

    Mat3 feature_rot = R;
    Mat3 target_rot = R;
    if (symmetric) {
      // Features see only the twist-free swing while the stored target keeps
      // the full rotation (with an extra coin-flipped 180 degree turn), so
      // the twist about z is unrecoverable from the features for these rows.
      feature_rot = canonical_swing(R);
      target_rot = flip ? Mat3(R * kZFlip) : R;
    }

    Vec6 coords;
    coords.head<3>() = t;
    coords.tail<3>() = so3_log(feature_rot);
    Eigen::VectorXd f = (A * coords + b).array().tanh().matrix();
    for (int i = 0; i < cfg.feature_dim; ++i) {
      f[i] += cfg.feature_noise_sigma * row_rng.normal();
    }

    data.features.row(r) = f.transpose();
    data.targets[r] = PoseSE3{target_rot, t};
    data.is_symmetric[r] = symmetric ? 1 : 0;
  }
  return data;
}

SyntheticDataset slice_rows(const SyntheticDataset& data, int begin, int end) {
  if (begin < 0 || end > data.n() || begin > end) {
    throw DimensionMismatch("row slice out of range");
  }
  SyntheticDataset out;
  const int m = end - begin;
  out.features = data.features.middleRows(begin, m);
  out.targets.assign(data.targets.begin() + begin, data.targets.begin() + end);
  out.is_symmetric.assign(data.is_symmetric.begin() + begin,
                          data.is_symmetric.begin() + end);
  out.n_train = m;
  return out;
}

RegressorParams init_regressor(int feature_dim, const TrainConfig& cfg) {
  Rng rng(Rng::derive(cfg.seed, kStreamInit));
  RegressorParams p;
  p.hidden = cfg.hidden;
  p.W1.resize(feature_dim, cfg.hidden);
  p.b1.resize(cfg.hidden);
  p.W2.resize(cfg.hidden, kPredictionDim);
  p.b2.resize(kPredictionDim);

  const double r1 = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  for (int j = 0; j < p.W1.cols(); ++j) {
    for (int i = 0; i < p.W1.rows(); ++i) {
      p.W1(i, j) = rng.uniform(-r1, r1);
    }
  }
  for (int i = 0; i < p.b1.size(); ++i) {
    p.b1[i] = rng.uniform(-r1, r1);
  }
  const double r2 = 1.0 / std::sqrt(static_cast<double>(cfg.hidden));
  for (int j = 0; j < p.W2.cols(); ++j) {
    for (int i = 0; i < p.W2.rows(); ++i) {
      p.W2(i, j) = rng.uniform(-r2, r2);
    }
  }
  for (int i = 0; i < p.b2.size(); ++i) {
    p.b2[i] = rng.uniform(-r2, r2);
  }

  p.b2[kQuaternionOffset] = 1.0;
  p.b2[kQuaternionOffset + 1] = 0.0;
  p.b2[kQuaternionOffset + 2] = 0.0;
  p.b2[kQuaternionOffset + 3] = 0.0;
  for (int i = 0; i < 6; ++i) {
    p.b2[kCovarianceOffset + i] = -0.5 * cfg.s_init;
  }
  return p;
}

Prediction forward(const RegressorParams& params,
                   const Eigen::VectorXd& feature) {
  if (feature.size() != params.W1.rows()) {
    throw DimensionMismatch("feature length does not match W1 rows");
  }
  const Eigen::VectorXd h =
      ((params.W1.transpose() * feature + params.b1).array().tanh()).matrix();
  Prediction pred;
  pred.v = params.W2.transpose() * h + params.b2;
  return pred;
}

ParamGrads backward(const RegressorParams& params,
                    const Eigen::VectorXd& feature, const Vec28& upstream) {
  if (feature.size() != params.W1.rows()) {
    throw DimensionMismatch("feature length does not match W1 rows");
  }
  const Eigen::VectorXd h =
      ((params.W1.transpose() * feature + params.b1).array().tanh()).matrix();
  ParamGrads g;
  g.d_b2 = upstream;
  g.d_W2 = h * upstream.transpose();
  const Eigen::VectorXd dh = params.W2 * upstream;
  const Eigen::VectorXd dz =
      (dh.array() * (1.0 - h.array().square())).matrix();
  g.d_b1 = dz;
  g.d_W1 = feature * dz.transpose();
  return g;
}

void adam_step(AdamState& state, const Eigen::VectorXd& grads,
               const TrainConfig& cfg, int t) {
  if (t < 1) {
    throw std::invalid_argument("adam step index starts at 1");
  }
  if (grads.size() != state.params.size()) {
    throw DimensionMismatch("gradient length does not match parameters");
  }
  state.params *= (1.0 - cfg.learning_rate * cfg.weight_decay);
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grads;
  state.v =
      (cfg.beta2 * state.v.array() + (1.0 - cfg.beta2) * grads.array().square())
          .matrix();
  const double mc = 1.0 - std::pow(cfg.beta1, t);
  const double vc = 1.0 - std::pow(cfg.beta2, t);
  state.params.array() -= cfg.learning_rate * (state.m.array() / mc) /
                          ((state.v.array() / vc).sqrt() + cfg.adam_eps);
}

Eigen::VectorXd pack_params(const RegressorParams& p) {
  Eigen::VectorXd flat(p.W1.size() + p.b1.size() + p.W2.size() + p.b2.size());
  int at = 0;
  flat.segment(at, p.W1.size()) =
      Eigen::Map<const Eigen::VectorXd>(p.W1.data(), p.W1.size());
  at += static_cast<int>(p.W1.size());
  flat.segment(at, p.b1.size()) = p.b1;
  at += static_cast<int>(p.b1.size());
  flat.segment(at, p.W2.size()) =
      Eigen::Map<const Eigen::VectorXd>(p.W2.data(), p.W2.size());
  at += static_cast<int>(p.W2.size());
  flat.segment(at, p.b2.size()) = p.b2;
  return flat;
}

RegressorParams unpack_params(const Eigen::VectorXd& flat, int feature_dim,
                              int hidden) {
  RegressorParams p;
  p.hidden = hidden;
  const int n_w1 = feature_dim * hidden;
  const int n_w2 = hidden * kPredictionDim;
  if (flat.size() != n_w1 + hidden + n_w2 + kPredictionDim) {
    throw DimensionMismatch("flat parameter length mismatch");
  }
  int at = 0;
  p.W1 = Eigen::Map<const Eigen::MatrixXd>(flat.data() + at, feature_dim,
                                           hidden);
  at += n_w1;
  p.b1 = flat.segment(at, hidden);
  at += hidden;
  p.W2 = Eigen::Map<const Eigen::MatrixXd>(flat.data() + at, hidden,
                                           kPredictionDim);
  at += n_w2;
  p.b2 = flat.segment(at, kPredictionDim);
  return p;
}

namespace {

Eigen::VectorXd pack_grads(const ParamGrads& g) {
  Eigen::VectorXd flat(g.d_W1.size() + g.d_b1.size() + g.d_W2.size() +
                       g.d_b2.size());
  int at = 0;
  flat.segment(at, g.d_W1.size()) =
      Eigen::Map<const Eigen::VectorXd>(g.d_W1.data(), g.d_W1.size());
  at += static_cast<int>(g.d_W1.size());
  flat.segment(at, g.d_b1.size()) = g.d_b1;
  at += static_cast<int>(g.d_b1.size());
  flat.segment(at, g.d_W2.size()) =
      Eigen::Map<const Eigen::VectorXd>(g.d_W2.data(), g.d_W2.size());
  at += static_cast<int>(g.d_W2.size());
  flat.segment(at, g.d_b2.size()) = g.d_b2;
  return flat;
}

}  // namespace

TrainResult train(const SyntheticDataset& data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  validate(cfg);
  const LossId loss = *parse_loss_id(cfg.loss_id);
  const bool has_s = loss == LossId::HomoL2 || loss == LossId::LogqL1;
  const int feature_dim = static_cast<int>(data.features.cols());
  const int n_train = data.n_train;
  if (n_train < 1 || data.n_test() < 1) {
    throw EmptyInput("training requires non-empty train and test splits");
  }

  RegressorParams params = init_regressor(feature_dim, cfg);
  const int n_net = static_cast<int>(pack_params(params).size());
  const int n_all = n_net + (has_s ? 2 : 0);

  AdamState state;
  state.params.resize(n_all);
  state.params.head(n_net) = pack_params(params);
  if (has_s) {
    state.params[n_net] = cfg.s_init;
    state.params[n_net + 1] = cfg.s_init;
  }
  state.m = Eigen::VectorXd::Zero(n_all);
  state.v = Eigen::VectorXd::Zero(n_all);

  Rng shuffle_rng(Rng::derive(cfg.seed, kStreamShuffle));
  std::vector<int> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  const SyntheticDataset test = slice_rows(data, n_train, data.n());

  TrainResult result;
  int step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (int start = 0; start < n_train; start += cfg.batch_size) {
      const int count = std::min(cfg.batch_size, n_train - start);
      params = unpack_params(state.params.head(n_net), feature_dim, cfg.hidden);
      HomoscedasticParams s;
      if (has_s) {
        s.s_x = state.params[n_net];
        s.s_q = state.params[n_net + 1];
      }

      Eigen::VectorXd batch_grad = Eigen::VectorXd::Zero(n_all);
      double batch_loss = 0.0;
      for (int k = 0; k < count; ++k) {
        const int row = order[start + k];
        const Eigen::VectorXd feature = data.features.row(row).transpose();
        const Prediction pred = forward(params, feature);
        const PoseTarget target{data.targets[row]};
        const LossEval eval = loss_grad(loss, pred, target, cfg.beta, s);
        batch_loss += eval.value;
        const ParamGrads pg = backward(params, feature, eval.grad.d_pred);
        batch_grad.head(n_net) += pack_grads(pg);
        if (has_s) {
          batch_grad[n_net] += eval.grad.d_sx;
          batch_grad[n_net + 1] += eval.grad.d_sq;
        }
      }
      if (!std::isfinite(batch_loss)) {
        throw DivergedTraining("non-finite loss at epoch " +
                               std::to_string(epoch));
      }
      loss_sum += batch_loss;
      batch_grad /= static_cast<double>(count);
      adam_step(state, batch_grad, cfg, ++step);
    }

    params = unpack_params(state.params.head(n_net), feature_dim, cfg.hidden);
    const EvalResult eval = evaluate(params, test);
    std::vector<double> rot, trans;
    rot.reserve(eval.errors.size());
    trans.reserve(eval.errors.size());
    for (const PoseError& e : eval.errors) {
      rot.push_back(e.rot_deg);
      trans.push_back(e.trans_m);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.mean_train_loss = loss_sum / static_cast<double>(n_train);
    record.median_rot_deg = median(rot);
    record.median_trans_m = median(trans);
    result.epochs.push_back(record);
    result.skipped_eval = eval.skipped;
    if (on_epoch) {
      on_epoch(record);
    }
  }

  result.params = unpack_params(state.params.head(n_net), feature_dim,
                                cfg.hidden);
  if (has_s) {
    result.s.s_x = state.params[n_net];
    result.s.s_q = state.params[n_net + 1];
  } else {
    result.s.s_x = cfg.s_init;
    result.s.s_q = cfg.s_init;
  }
  return result;
}

EvalResult evaluate(const RegressorParams& params,
                    const SyntheticDataset& data) {
  if (data.n() == 0) {
    throw EmptyInput("evaluation over an empty dataset");
  }
  EvalResult out;
  out.errors.reserve(data.n());
  for (int r = 0; r < data.n(); ++r) {
    const Prediction pred = forward(params, data.features.row(r).transpose());
    PoseSE3 pose;
    try {
      pose = pose_from_quat(quat_normalize(pred.quat_raw()),
                            pred.translation());
    } catch (const ZeroNormQuaternion&) {
      ++out.skipped;
      continue;
    }
    out.errors.push_back(pose_error(pose, data.targets[r]));
  }
  return out;
}

}  // namespace liepose
