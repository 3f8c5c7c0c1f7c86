#include "liepose/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include "liepose/errors.hpp"

namespace liepose {

namespace {

std::string format_cell(double trans_m, double rot_deg) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f / %.2f", trans_m, rot_deg);
  return buf;
}

std::string format_value(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

}  // namespace

PoseError pose_error(const PoseSE3& a, const PoseSE3& b) {
  const UnitQuaternion qa = quat_from_rotmat(a.rotation);
  const UnitQuaternion qb = quat_from_rotmat(b.rotation);
  const double dot =
      qa.w * qb.w + qa.x * qb.x + qa.y * qb.y + qa.z * qb.z;
  const double c = std::clamp(std::abs(dot), 0.0, 1.0);
  PoseError e;
  e.rot_deg = 2.0 * std::acos(c) * 180.0 / std::numbers::pi;
  e.trans_m = (a.translation - b.translation).norm();
  return e;
}

double median(std::vector<double> values) {
  if (values.empty()) {
    throw EmptyInput("median of an empty list");
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) {
    return values[n / 2];
  }
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

MetricsReport aggregate(const std::vector<SceneReport>& scenes) {
  if (scenes.empty()) {
    throw EmptyInput("aggregate over an empty scene list");
  }
  MetricsReport report;
  report.per_scene = scenes;
  for (const SceneReport& s : scenes) {
    report.avg_trans_m += s.median_trans_m;
    report.avg_rot_deg += s.median_rot_deg;
  }
  report.avg_trans_m /= static_cast<double>(scenes.size());
  report.avg_rot_deg /= static_cast<double>(scenes.size());
  return report;
}

TableOutput format_table(
    const std::vector<std::pair<std::string, MetricsReport>>& methods) {
  if (methods.empty()) {
    throw EmptyInput("table with no methods");
  }
  const MetricsReport& first = methods.front().second;
  std::set<std::string> reference;
  for (const SceneReport& s : first.per_scene) {
    reference.insert(s.scene_name);
  }
  for (const auto& [name, report] : methods) {
    std::set<std::string> got;
    for (const SceneReport& s : report.per_scene) {
      got.insert(s.scene_name);
    }
    if (got != reference) {
      throw SceneMismatch("method '" + name +
                          "' does not report the same scene set");
    }
  }

  // Rows follow the first method's scene order; cells are looked up by name.
  std::vector<std::string> scene_order;
  for (const SceneReport& s : first.per_scene) {
    scene_order.push_back(s.scene_name);
  }

  auto find_scene = [](const MetricsReport& r,
                       const std::string& name) -> const SceneReport& {
    for (const SceneReport& s : r.per_scene) {
      if (s.scene_name == name) return s;
    }
    throw SceneMismatch("scene '" + name + "' missing from a report");
  };

  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"scene"};
  for (const auto& [name, report] : methods) {
    header.push_back(name);
  }
  cells.push_back(header);
  for (const std::string& scene : scene_order) {
    std::vector<std::string> row{scene};
    for (const auto& [name, report] : methods) {
      const SceneReport& s = find_scene(report, scene);
      row.push_back(format_cell(s.median_trans_m, s.median_rot_deg));
    }
    cells.push_back(row);
  }
  std::vector<std::string> avg_row{"AVERAGE"};
  for (const auto& [name, report] : methods) {
    avg_row.push_back(format_cell(report.avg_trans_m, report.avg_rot_deg));
  }
  cells.push_back(avg_row);

  std::vector<std::size_t> widths(cells.front().size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      widths[c] = std::max(widths[c], row[c].size());
    }
  }
  std::string text;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    std::string line;
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      std::string cell = cells[r][c];
      cell.resize(widths[c], ' ');
      line += cell;
      if (c + 1 < cells[r].size()) {
        line += "  ";
      }
    }
    while (!line.empty() && line.back() == ' ') {
      line.pop_back();
    }
    text += line;
    text += '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < widths.size(); ++c) {
        total += widths[c] + (c + 1 < widths.size() ? 2 : 0);
      }
      text += std::string(total, '-');
      text += '\n';
    }
  }

  std::string csv = "method,scene,median_trans_m,median_rot_deg,n_samples\n";
  for (const auto& [name, report] : methods) {
    int total_n = 0;
    for (const std::string& scene : scene_order) {
      const SceneReport& s = find_scene(report, scene);
      csv += name + "," + s.scene_name + "," + format_value(s.median_trans_m) +
             "," + format_value(s.median_rot_deg) + "," +
             std::to_string(s.n_samples) + "\n";
      total_n += s.n_samples;
    }
    csv += name + ",AVERAGE," + format_value(report.avg_trans_m) + "," +
           format_value(report.avg_rot_deg) + "," + std::to_string(total_n) +
           "\n";
  }
  return {text, csv};
}

}  // namespace liepose
