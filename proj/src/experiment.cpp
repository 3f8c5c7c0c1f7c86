#include "liepose/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "liepose/errors.hpp"
#include "liepose/harness.hpp"

namespace liepose {

namespace {

using nlohmann::json;

std::string format_value(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

// Hyperparameters with no established setting in the methods being compared;
// their defaults are this harness's own choices. Echoed into every summary so
// downstream readers can tell which knobs carry that caveat.
const std::vector<std::string> kUnsourcedDefaults = {
    "batch_size", "hidden", "beta", "adam_eps", "feature_dim"};

json scene_json(const SceneConfig& s) {
  return json{{"scene_name", s.scene_name},
              {"n_train", s.n_train},
              {"n_test", s.n_test},
              {"feature_dim", s.feature_dim},
              {"symmetry_fraction", s.symmetry_fraction},
              {"feature_noise_sigma", s.feature_noise_sigma},
              {"seed", s.seed}};
}

json train_json(const TrainConfig& t) {
  return json{{"loss_id", t.loss_id},
              {"epochs", t.epochs},
              {"batch_size", t.batch_size},
              {"learning_rate", t.learning_rate},
              {"weight_decay", t.weight_decay},
              {"beta1", t.beta1},
              {"beta2", t.beta2},
              {"adam_eps", t.adam_eps},
              {"s_init", t.s_init},
              {"seed", t.seed},
              {"hidden", t.hidden},
              {"beta", t.beta}};
}

struct RunTask {
  MethodConfig method;
  SceneConfig scene;
  std::filesystem::path output_dir;
};

RunOutcome execute_run(const RunTask& task, const json& experiment_echo,
                       const std::optional<std::uint64_t>& seed_override) {
  const std::string run_id = make_run_id(
      task.method.name, task.scene.scene_name, task.method.train.seed);
  RunOutcome outcome;
  outcome.run_id = run_id;
  outcome.method = task.method.name;
  outcome.scene = task.scene.scene_name;

  const auto csv_path = task.output_dir / (run_id + ".csv");
  const auto json_path = task.output_dir / (run_id + ".json");
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) {
    throw std::runtime_error("cannot write " + csv_path.string());
  }
  csv << "run_id,epoch,loss_id,mean_train_loss,median_rot_deg,median_trans_m\n";
  csv.flush();

  const auto t0 = std::chrono::steady_clock::now();
  json summary;
  summary["run_id"] = run_id;
  summary["method"] = task.method.name;
  summary["scene"] = task.scene.scene_name;
  summary["loss_id"] = task.method.train.loss_id;
  summary["config"] = {{"scene", scene_json(task.scene)},
                       {"train", train_json(task.method.train)},
                       {"output_dir", task.output_dir.string()}};
  if (seed_override) {
    summary["config"]["seed_override"] = *seed_override;
  }
  summary["experiment_config"] = experiment_echo;
  summary["unsourced_defaults"] = kUnsourcedDefaults;

  int epochs_completed = 0;
  try {
    const SyntheticDataset data = generate_scene(task.scene);
    const TrainResult result =
        train(data, task.method.train, [&](const EpochRecord& r) {
          csv << run_id << ',' << r.epoch << ',' << task.method.train.loss_id
              << ',' << format_value(r.mean_train_loss) << ','
              << format_value(r.median_rot_deg) << ','
              << format_value(r.median_trans_m) << '\n';
          csv.flush();
          ++epochs_completed;
        });
    const EpochRecord& last = result.epochs.back();
    const double wall = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    summary["diverged"] = false;
    summary["epochs_completed"] = epochs_completed;
    summary["skipped_eval"] = result.skipped_eval;
    summary["wall_time_s"] = wall;
    summary["final"] = {
        {"epoch", last.epoch},
        {"mean_train_loss", last.mean_train_loss},
        {"median_rot_deg", last.median_rot_deg},
        {"median_trans_m", last.median_trans_m},
        {"n_samples", task.scene.n_test - result.skipped_eval}};
    if (task.method.train.loss_id == "homo_l2" ||
        task.method.train.loss_id == "logq_l1") {
      summary["s_final"] = {{"s_x", result.s.s_x}, {"s_q", result.s.s_q}};
    }
  } catch (const DivergedTraining& e) {
    const double wall = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
    summary["diverged"] = true;
    summary["error"] = e.what();
    summary["epochs_completed"] = epochs_completed;
    summary["wall_time_s"] = wall;
    outcome.diverged = true;
    outcome.error = e.what();
  }

  std::ofstream out(json_path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + json_path.string());
  }
  out << summary.dump(2) << '\n';
  return outcome;
}

}  // namespace

std::vector<RunOutcome> run_experiment(const ExperimentConfig& cfg,
                                       const RunOptions& options,
                                       std::ostream& log) {
  ExperimentConfig resolved = cfg;
  if (options.output_dir_override) {
    resolved.output_dir = *options.output_dir_override;
  }
  if (options.seed_override) {
    for (SceneConfig& scene : resolved.scenes) {
      scene.seed = *options.seed_override;
    }
    for (MethodConfig& method : resolved.methods) {
      method.train.seed = *options.seed_override;
    }
  }
  std::filesystem::create_directories(resolved.output_dir);

  json echo;
  if (!resolved.raw_text.empty()) {
    echo = json::parse(resolved.raw_text);
  }

  std::vector<RunTask> tasks;
  for (const MethodConfig& method : resolved.methods) {
    for (const SceneConfig& scene : resolved.scenes) {
      tasks.push_back({method, scene, resolved.output_dir});
    }
  }

  std::vector<RunOutcome> outcomes(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  const int workers = std::max(
      1, std::min(options.jobs, static_cast<int>(tasks.size())));

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) {
        return;
      }
      RunOutcome outcome =
          execute_run(tasks[i], echo, options.seed_override);
      std::lock_guard<std::mutex> guard(log_mutex);
      if (outcome.diverged) {
        log << outcome.run_id << ": DIVERGED (" << outcome.error << ")\n";
      } else {
        log << outcome.run_id << ": done\n";
      }
      outcomes[i] = std::move(outcome);
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) {
      pool.emplace_back(worker);
    }
    for (std::thread& t : pool) {
      t.join();
    }
  }
  return outcomes;
}

ReportResult build_report(const std::filesystem::path& dir) {
  struct Summary {
    std::string run_id;
    std::string method;
    std::string scene;
    SceneReport report;
    bool diverged = false;
  };
  std::vector<Summary> summaries;
  if (!std::filesystem::is_directory(dir)) {
    throw EmptyInput("not a directory: " + dir.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") {
      continue;
    }
    std::ifstream in(entry.path());
    json j;
    try {
      in >> j;
    } catch (const json::parse_error&) {
      continue;
    }
    if (!j.is_object() || !j.contains("run_id") || !j.contains("method") ||
        !j.contains("scene")) {
      continue;
    }
    Summary s;
    s.run_id = j.at("run_id").get<std::string>();
    s.method = j.at("method").get<std::string>();
    s.scene = j.at("scene").get<std::string>();
    s.diverged = j.value("diverged", false);
    if (!s.diverged && j.contains("final")) {
      const json& f = j.at("final");
      s.report.scene_name = s.scene;
      s.report.median_rot_deg = f.at("median_rot_deg").get<double>();
      s.report.median_trans_m = f.at("median_trans_m").get<double>();
      s.report.n_samples = f.at("n_samples").get<int>();
    } else {
      s.diverged = true;
    }
    summaries.push_back(std::move(s));
  }
  if (summaries.empty()) {
    throw EmptyInput("no run summaries found in " + dir.string());
  }
  std::sort(summaries.begin(), summaries.end(),
            [](const Summary& a, const Summary& b) {
              return std::tie(a.method, a.scene) < std::tie(b.method, b.scene);
            });

  std::set<std::string> all_scenes;
  for (const Summary& s : summaries) {
    if (!s.diverged) {
      all_scenes.insert(s.scene);
    }
  }
  std::map<std::string, std::vector<SceneReport>> by_method;
  for (const Summary& s : summaries) {
    if (!s.diverged) {
      by_method[s.method].push_back(s.report);
    }
  }
  std::string missing;
  for (const auto& [method, reports] : by_method) {
    std::set<std::string> present;
    for (const SceneReport& r : reports) {
      present.insert(r.scene_name);
    }
    for (const std::string& scene : all_scenes) {
      if (!present.count(scene)) {
        missing += "  (" + method + ", " + scene + ")\n";
      }
    }
  }
  if (!missing.empty()) {
    throw SceneMismatch("missing (method, scene) results:\n" + missing);
  }

  std::vector<std::pair<std::string, MetricsReport>> table_input;
  for (const auto& [method, reports] : by_method) {
    table_input.emplace_back(method, aggregate(reports));
  }
  const TableOutput table = format_table(table_input);

  // Per-epoch curve: scene-averaged median rotation error per method.
  std::map<std::pair<std::string, int>, std::pair<double, int>> curve_acc;
  for (const Summary& s : summaries) {
    std::ifstream csv(dir / (s.run_id + ".csv"));
    if (!csv) {
      continue;
    }
    std::string line;
    std::getline(csv, line);  // header
    while (std::getline(csv, line)) {
      std::vector<std::string> fields;
      std::stringstream ss(line);
      std::string field;
      while (std::getline(ss, field, ',')) {
        fields.push_back(field);
      }
      if (fields.size() != 6) {
        continue;
      }
      const int epoch = std::stoi(fields[1]);
      const double rot = std::stod(fields[4]);
      auto& acc = curve_acc[{s.method, epoch}];
      acc.first += rot;
      acc.second += 1;
    }
  }
  std::string curve = "method,epoch,avg_median_rot_deg\n";
  for (const auto& [key, acc] : curve_acc) {
    curve += key.first + "," + std::to_string(key.second) + "," +
             format_value(acc.first / acc.second) + "\n";
  }

  return {table.text, table.csv, curve};
}

}  // namespace liepose
