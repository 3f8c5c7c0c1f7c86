#include "liepose/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "liepose/errors.hpp"

namespace liepose {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) {
    fail(path, "expected an object");
  }
}

void reject_unknown(const json& j, const std::string& path,
                    const std::set<std::string>& known) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      fail(path + "." + key, "unknown field");
    }
  }
}

template <typename T>
T get_number(const json& j, const std::string& path, const char* key,
             bool required, T fallback) {
  if (!j.contains(key)) {
    if (required) {
      fail(path + "." + key, "missing required field");
    }
    return fallback;
  }
  const json& v = j.at(key);
  if constexpr (std::is_same_v<T, std::uint64_t>) {
    if (!v.is_number_unsigned()) {
      fail(path + "." + key, "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  } else if constexpr (std::is_same_v<T, int>) {
    if (!v.is_number_integer()) {
      fail(path + "." + key, "expected an integer");
    }
    return v.get<int>();
  } else {
    if (!v.is_number()) {
      fail(path + "." + key, "expected a number");
    }
    return v.get<double>();
  }
}

std::string get_string(const json& j, const std::string& path, const char* key,
                       bool required, const std::string& fallback) {
  if (!j.contains(key)) {
    if (required) {
      fail(path + "." + key, "missing required field");
    }
    return fallback;
  }
  if (!j.at(key).is_string()) {
    fail(path + "." + key, "expected a string");
  }
  return j.at(key).get<std::string>();
}

SceneConfig parse_scene(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path,
                 {"scene_name", "n_train", "n_test", "feature_dim",
                  "symmetry_fraction", "feature_noise_sigma", "seed"});
  SceneConfig cfg;
  cfg.scene_name = get_string(j, path, "scene_name", true, "");
  cfg.n_train = get_number<int>(j, path, "n_train", true, 0);
  cfg.n_test = get_number<int>(j, path, "n_test", true, 0);
  cfg.feature_dim = get_number<int>(j, path, "feature_dim", false, 32);
  cfg.symmetry_fraction =
      get_number<double>(j, path, "symmetry_fraction", false, 0.0);
  cfg.feature_noise_sigma =
      get_number<double>(j, path, "feature_noise_sigma", false, 0.05);
  cfg.seed = get_number<std::uint64_t>(j, path, "seed", true, 0);
  try {
    validate(cfg);
  } catch (const ConfigError& e) {
    fail(path, e.what());
  }
  return cfg;
}

TrainConfig parse_train(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path,
                 {"loss_id", "epochs", "batch_size", "learning_rate",
                  "weight_decay", "beta1", "beta2", "adam_eps", "s_init",
                  "seed", "hidden", "beta"});
  TrainConfig cfg;
  cfg.loss_id = get_string(j, path, "loss_id", true, "");
  cfg.epochs = get_number<int>(j, path, "epochs", true, 0);
  cfg.batch_size = get_number<int>(j, path, "batch_size", false, cfg.batch_size);
  cfg.learning_rate =
      get_number<double>(j, path, "learning_rate", false, cfg.learning_rate);
  cfg.weight_decay =
      get_number<double>(j, path, "weight_decay", false, cfg.weight_decay);
  cfg.beta1 = get_number<double>(j, path, "beta1", false, cfg.beta1);
  cfg.beta2 = get_number<double>(j, path, "beta2", false, cfg.beta2);
  cfg.adam_eps = get_number<double>(j, path, "adam_eps", false, cfg.adam_eps);
  cfg.s_init = get_number<double>(j, path, "s_init", false, cfg.s_init);
  cfg.seed = get_number<std::uint64_t>(j, path, "seed", true, 0);
  cfg.hidden = get_number<int>(j, path, "hidden", false, cfg.hidden);
  cfg.beta = get_number<double>(j, path, "beta", false, cfg.beta);
  try {
    validate(cfg);
  } catch (const ConfigError& e) {
    fail(path, e.what());
  }
  return cfg;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("not valid JSON: ") + e.what());
  }
  require_object(root, "$");
  reject_unknown(root, "$", {"output_dir", "scenes", "train"});

  ExperimentConfig cfg;
  cfg.raw_text = text;
  cfg.output_dir = get_string(root, "$", "output_dir", false, "runs");

  if (!root.contains("scenes") || !root.at("scenes").is_array() ||
      root.at("scenes").empty()) {
    fail("$.scenes", "expected a non-empty array of scene objects");
  }
  std::set<std::string> scene_names;
  int idx = 0;
  for (const json& j : root.at("scenes")) {
    const std::string path = "$.scenes[" + std::to_string(idx++) + "]";
    SceneConfig scene = parse_scene(j, path);
    if (!scene_names.insert(scene.scene_name).second) {
      fail(path + ".scene_name", "duplicate scene name '" + scene.scene_name + "'");
    }
    cfg.scenes.push_back(std::move(scene));
  }

  if (!root.contains("train") || !root.at("train").is_object() ||
      root.at("train").empty()) {
    fail("$.train", "expected a non-empty object mapping method names to "
                    "training configs");
  }
  for (const auto& [name, j] : root.at("train").items()) {
    if (name.empty() || name.find('_') != std::string::npos ||
        name.find(',') != std::string::npos) {
      fail("$.train." + name,
           "method names must be non-empty and free of '_' and ','");
    }
    MethodConfig method;
    method.name = name;
    method.train = parse_train(j, "$.train." + name);
    cfg.methods.push_back(std::move(method));
  }
  // nlohmann object iteration is name-sorted; method order inherits it.
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_config(buffer.str());
}

std::string make_run_id(const std::string& method, const std::string& scene,
                        std::uint64_t seed) {
  return method + "_" + scene + "_" + std::to_string(seed);
}

}  // namespace liepose
