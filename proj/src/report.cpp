#include "llrbc/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"
#include "llrbc/svg.hpp"

namespace llrbc {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<RunArtifacts> collect_artifacts(const std::string& root,
                                            std::vector<std::string>& warnings) {
  if (!fs::exists(root)) throw config_error("no such directory: " + root);
  std::vector<std::string> manifests;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == "manifest.json") {
      manifests.push_back(entry.path().string());
    }
  }
  std::sort(manifests.begin(), manifests.end());

  std::vector<RunArtifacts> out;
  for (const std::string& mpath : manifests) {
    std::string run_dir = fs::path(mpath).parent_path().string();
    json manifest;
    try {
      manifest = json::parse(read_text(mpath));
    } catch (const std::exception& e) {
      warnings.push_back("unreadable manifest " + mpath + ": " + e.what());
      continue;
    }
    json cfg = manifest.value("config", json::object());
    for (const json& m : cfg.value("methods", json::array())) {
      std::string method = m.get<std::string>();
      std::string matrix_path = run_dir + "/" + method + "/matrix.csv";
      if (!fs::exists(matrix_path)) {
        warnings.push_back("no matrix yet for " + method + " in " + run_dir);
        continue;
      }
      RunArtifacts a;
      a.run_dir = run_dir;
      a.method = method;
      a.seed = cfg.value("seed", std::uint64_t{0});
      a.kind = cfg.value("kind", std::string("tsp"));
      a.profile = cfg.value("profile", std::string("desk"));
      try {
        a.matrix = read_matrix_csv(matrix_path);
      } catch (const std::exception& e) {
        warnings.push_back("unreadable matrix " + matrix_path + ": " + e.what());
        continue;
      }
      std::ostringstream label;
      for (std::size_t i = 0; i < a.matrix.task_names.size(); ++i) {
        if (i) label << ">";
        label << a.matrix.task_names[i];
      }
      a.order_label = label.str();
      out.push_back(std::move(a));
    }
  }
  return out;
}

namespace {

std::string suite_key(const RunArtifacts& a) {
  std::vector<std::string> names = a.matrix.task_names;
  std::sort(names.begin(), names.end());
  std::ostringstream key;
  key << a.kind << "|" << a.profile << "|" << a.seed;
  for (const std::string& n : names) key << "|" << n;
  return key.str();
}

}  // namespace

ScoredArtifacts score_artifacts(std::vector<RunArtifacts> artifacts) {
  // Best value per (suite, task name) over every checkpoint of every method.
  std::map<std::string, std::map<std::string, double>> suite_best;
  for (const RunArtifacts& a : artifacts) {
    a.matrix.validate();
    std::map<std::string, double>& best = suite_best[suite_key(a)];
    for (Eigen::Index j = 0; j < a.matrix.raw.cols(); ++j) {
      const std::string& name = a.matrix.task_names[static_cast<std::size_t>(j)];
      double col_min = a.matrix.raw.col(j).minCoeff();
      auto it = best.find(name);
      if (it == best.end() || col_min < it->second) best[name] = col_min;
    }
  }

  ScoredArtifacts out;
  out.dbars.reserve(artifacts.size());
  out.scores.reserve(artifacts.size());
  for (RunArtifacts& a : artifacts) {
    const std::map<std::string, double>& best = suite_best[suite_key(a)];
    Eigen::Index k = a.matrix.raw.cols();
    Eigen::VectorXd ref(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      ref(j) = best.at(a.matrix.task_names[static_cast<std::size_t>(j)]);
    }
    Eigen::MatrixXd dbar = normalize_matrix(a.matrix, ref);
    out.scores.push_back(compute_metrics(dbar, static_cast<int>(k)));
    out.dbars.push_back(std::move(dbar));
  }
  out.artifacts = std::move(artifacts);
  return out;
}

namespace {

void append_metric(std::ostringstream& out, double v) {
  if (std::isnan(v)) {
    out << ",";
  } else {
    out << "," << v;
  }
}

}  // namespace

void write_metrics_csv(const std::string& path, const ScoredArtifacts& scored) {
  std::ostringstream out;
  out.precision(17);
  out << "run_dir,method,order,seed,k,AP,AF,AMF,APl,AG\n";
  for (std::size_t i = 0; i < scored.artifacts.size(); ++i) {
    const RunArtifacts& a = scored.artifacts[i];
    int k_total = static_cast<int>(a.matrix.raw.cols());
    for (int k = 1; k <= k_total; ++k) {
      LifelongMetrics v = compute_metrics(scored.dbars[i], k);
      out << a.run_dir << "," << a.method << "," << a.order_label << "," << a.seed << ","
          << k;
      append_metric(out, v.ap);
      append_metric(out, v.af);
      append_metric(out, v.amf);
      append_metric(out, v.apl);
      append_metric(out, v.ag);
      out << "\n";
    }
  }
  write_text_atomic(path, out.str());
}

namespace {

std::string fmt_scaled(double v) {
  if (std::isnan(v)) return "-";
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << v * 1000.0;
  return out.str();
}

std::string fmt_mean_std(const std::vector<double>& values) {
  if (values.empty()) return "-";
  double mean = 0;
  int n = 0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    mean += v;
    ++n;
  }
  if (n == 0) return "-";
  mean /= n;
  if (n < 2) return fmt_scaled(mean);
  double var = 0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    var += (v - mean) * (v - mean);
  }
  var /= (n - 1);
  return fmt_scaled(mean) + " (" + fmt_scaled(std::sqrt(var)) + ")";
}

// Curve probes: one JSON object per line with the trained task index, the batch count
// within that task, and the probe means per task name.
struct CurveRow {
  int task = 0;
  long long batch = 0;
  std::map<std::string, double> values;
};

std::vector<CurveRow> read_curves(const std::string& path) {
  std::vector<CurveRow> rows;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;
    CurveRow row;
    row.task = j.value("task", 0);
    row.batch = j.value("batch_in_task", 0LL);
    json evals = j.value("mean_best_length", json::object());
    for (const auto& item : evals.items()) {
      row.values[item.key()] = item.value().get<double>();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_curve_charts(const RunArtifacts& a) {
  std::string curves_path = a.run_dir + "/" + a.method + "/curves.jsonl";
  if (!fs::exists(curves_path)) return;
  std::vector<CurveRow> rows = read_curves(curves_path);
  if (rows.empty()) return;
  const std::vector<std::string>& names = a.matrix.task_names;

  // Global x: batches accumulated over tasks in training order.
  std::map<int, long long> span;
  for (const CurveRow& r : rows) span[r.task] = std::max(span[r.task], r.batch);
  std::map<int, long long> offset;
  long long acc = 0;
  for (int t = 0; t < static_cast<int>(names.size()); ++t) {
    offset[t] = acc;
    auto it = span.find(t);
    if (it != span.end()) acc += it->second;
  }

  std::vector<ChartSeries> forgetting(names.size());
  for (std::size_t j = 0; j < names.size(); ++j) forgetting[j].label = names[j];
  std::vector<ChartMarker> markers;
  for (const auto& [t, off] : offset) {
    if (span.count(t)) {
      markers.push_back({static_cast<double>(off), names[static_cast<std::size_t>(t)]});
    }
  }
  for (const CurveRow& r : rows) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      auto it = r.values.find(names[j]);
      if (it == r.values.end()) continue;
      forgetting[j].x.push_back(static_cast<double>(offset[r.task] + r.batch));
      forgetting[j].y.push_back(it->second);
    }
  }
  write_line_chart_svg(a.run_dir + "/" + a.method + "/forgetting.svg",
                       "Test performance per task (" + a.method + ")", "training batch",
                       "mean best tour length", forgetting, markers);

  std::vector<ChartSeries> plasticity(names.size());
  for (std::size_t j = 0; j < names.size(); ++j) plasticity[j].label = names[j];
  for (const CurveRow& r : rows) {
    if (r.task < 0 || r.task >= static_cast<int>(names.size())) continue;
    auto it = r.values.find(names[static_cast<std::size_t>(r.task)]);
    if (it == r.values.end()) continue;
    plasticity[static_cast<std::size_t>(r.task)].x.push_back(static_cast<double>(r.batch));
    plasticity[static_cast<std::size_t>(r.task)].y.push_back(it->second);
  }
  write_line_chart_svg(a.run_dir + "/" + a.method + "/plasticity.svg",
                       "Learning curve on each new task (" + a.method + ")",
                       "batch within task", "mean best tour length", plasticity);
}

}  // namespace

void write_report(const std::string& root) {
  std::vector<std::string> warnings;
  std::vector<RunArtifacts> artifacts = collect_artifacts(root, warnings);
  ScoredArtifacts scored = score_artifacts(std::move(artifacts));

  for (const RunArtifacts& a : scored.artifacts) write_curve_charts(a);

  std::ostringstream out;
  out << "# Lifelong learning summary\n\n";
  if (scored.artifacts.empty()) {
    if (warnings.empty()) throw config_error("no run artifacts under " + root);
    out << "No completed matrices found.\n\n";
  } else {
    write_metrics_csv(root + "/metrics.csv", scored);

    // method -> metric values across runs
    std::map<std::string, std::array<std::vector<double>, 5>> by_method;
    std::map<std::string, std::vector<std::string>> orders_of;
    for (std::size_t i = 0; i < scored.artifacts.size(); ++i) {
      const RunArtifacts& a = scored.artifacts[i];
      const LifelongMetrics& v = scored.scores[i];
      auto& cols = by_method[a.method];
      cols[0].push_back(v.ap);
      cols[1].push_back(v.af);
      cols[2].push_back(v.amf);
      cols[3].push_back(v.apl);
      cols[4].push_back(v.ag);
      orders_of[a.method].push_back(a.order_label);
    }
    std::size_t runs = scored.artifacts.size();
    out << "Metrics over " << runs << " run" << (runs == 1 ? "" : "s")
        << "; values scaled by 1e-3, shown as mean (std) when a method has several "
           "runs. Lower is better.\n\n";
    out << "| Method | AP | AF | AMF | APl | AG |\n";
    out << "|---|---|---|---|---|---|\n";
    for (const auto& [method, cols] : by_method) {
      out << "| " << method;
      for (const auto& col : cols) out << " | " << fmt_mean_std(col);
      out << " |\n";
    }
    out << "\nRuns included:\n\n";
    for (std::size_t i = 0; i < scored.artifacts.size(); ++i) {
      const RunArtifacts& a = scored.artifacts[i];
      out << "- " << a.method << " on " << a.order_label << " (seed " << a.seed << ", "
          << a.profile << " profile, " << a.kind << ") in " << a.run_dir << "\n";
    }
  }
  if (!warnings.empty()) {
    out << "\n## Warnings\n\n";
    for (const std::string& w : warnings) out << "- " << w << "\n";
  }
  write_text_atomic(root + "/report.md", out.str());
}

}  // namespace llrbc
