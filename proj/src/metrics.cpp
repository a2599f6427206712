#include "llrbc/metrics.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace llrbc {

void PerformanceMatrix::validate() const {
  Eigen::Index k = static_cast<Eigen::Index>(task_names.size());
  if (k == 0) throw data_error("empty performance matrix");
  if (raw.rows() != k || raw.cols() != k) {
    throw data_error("performance matrix must be K x K with one column per task");
  }
  if (!(raw.array() > 0).all()) throw data_error("performance entries must be positive");
}

void write_matrix_csv(const std::string& path, const PerformanceMatrix& m) {
  m.validate();
  std::ostringstream out;
  out.precision(17);
  out << "after_task";
  for (const std::string& name : m.task_names) out << "," << name;
  out << "\n";
  for (Eigen::Index i = 0; i < m.raw.rows(); ++i) {
    out << m.task_names[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.raw.cols(); ++j) out << "," << m.raw(i, j);
    out << "\n";
  }
  write_text_atomic(path, out.str());
}

PerformanceMatrix read_matrix_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw data_error("empty matrix file " + path);
  PerformanceMatrix m;
  {
    std::istringstream header(line);
    std::string cell;
    bool first = true;
    while (std::getline(header, cell, ',')) {
      if (!first) m.task_names.push_back(cell);
      first = false;
    }
  }
  Eigen::Index k = static_cast<Eigen::Index>(m.task_names.size());
  if (k == 0) throw data_error("matrix file has no task columns: " + path);
  m.raw.resize(k, k);
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= k) throw data_error("matrix file has too many rows: " + path);
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');  // row label
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!std::getline(cells, cell, ',')) throw data_error("short matrix row in " + path);
      m.raw(row, j) = std::stod(cell);
    }
    ++row;
  }
  if (row != k) throw data_error("matrix file has too few rows: " + path);
  m.validate();
  return m;
}

double normalize(double d, double d_star) {
  if (d_star <= 0) throw data_error("reference performance must be positive");
  return (d - d_star) / d_star;
}

Eigen::VectorXd suite_reference(const std::vector<const PerformanceMatrix*>& mats) {
  if (mats.empty()) throw data_error("suite reference needs at least one matrix");
  const std::vector<std::string>& names = mats.front()->task_names;
  Eigen::VectorXd ref =
      Eigen::VectorXd::Constant(static_cast<Eigen::Index>(names.size()),
                                std::numeric_limits<double>::infinity());
  for (const PerformanceMatrix* m : mats) {
    m->validate();
    if (m->task_names != names) throw data_error("suite matrices disagree on task columns");
    ref = ref.cwiseMin(m->raw.colwise().minCoeff().transpose());
  }
  return ref;
}

Eigen::MatrixXd normalize_matrix(const PerformanceMatrix& m, const Eigen::VectorXd& d_star) {
  m.validate();
  if (d_star.size() != m.raw.cols()) throw data_error("reference vector has wrong length");
  Eigen::MatrixXd out(m.raw.rows(), m.raw.cols());
  for (Eigen::Index j = 0; j < m.raw.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.raw.rows(); ++i) {
      out(i, j) = normalize(m.raw(i, j), d_star(j));
    }
  }
  return out;
}

LifelongMetrics compute_metrics(const Eigen::MatrixXd& dbar, int k) {
  if (k < 1 || k > dbar.rows() || dbar.rows() != dbar.cols()) {
    throw data_error("metric index k out of range");
  }
  LifelongMetrics out;
  double nan = std::numeric_limits<double>::quiet_NaN();
  double ap = 0, apl = 0;
  for (int i = 0; i < k; ++i) {
    ap += dbar(k - 1, i);
    apl += dbar(i, i);
  }
  out.ap = ap / k;
  out.apl = apl / k;
  if (k < 2) {
    out.af = out.amf = out.ag = nan;
    return out;
  }
  double af = 0, amf = 0, ag = 0;
  for (int i = 0; i < k - 1; ++i) {
    af += std::max(0.0, dbar(k - 1, i) - dbar(i, i));
    double worst = 0;
    for (int j = i + 1; j < k; ++j) {
      worst = std::max(worst, dbar(j, i) - dbar(i, i));
    }
    amf += std::max(0.0, worst);
    ag += dbar(i, i + 1);
  }
  out.af = af / (k - 1);
  out.amf = amf / (k - 1);
  out.ag = ag / (k - 1);
  return out;
}

}  // namespace llrbc
