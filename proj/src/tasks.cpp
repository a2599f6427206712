#include "llrbc/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace llrbc {

std::string_view to_string(Distribution d) {
  switch (d) {
    case Distribution::U: return "U";
    case Distribution::GM: return "GM";
    case Distribution::E: return "E";
    case Distribution::C: return "C";
    case Distribution::G: return "G";
    case Distribution::R: return "R";
  }
  return "?";
}

Distribution distribution_from_string(std::string_view s) {
  if (s == "U") return Distribution::U;
  if (s == "GM") return Distribution::GM;
  if (s == "E") return Distribution::E;
  if (s == "C") return Distribution::C;
  if (s == "G") return Distribution::G;
  if (s == "R") return Distribution::R;
  throw config_error("unknown distribution id: " + std::string(s));
}

std::string TaskSpec::name() const {
  return std::string(to_string(distribution)) + std::to_string(scale);
}

void TaskSpec::validate() const {
  if (scale < 2) throw config_error("task scale must be at least 2, got " + std::to_string(scale));
  if (kind == ProblemKind::cvrp) {
    if (capacity < 10) {
      throw config_error("cvrp capacity must cover the maximum demand of 10, got " +
                         std::to_string(capacity));
    }
  } else if (capacity != 0) {
    throw config_error("tsp task carries a capacity");
  }
}

int scale_role(Distribution d) {
  switch (d) {
    case Distribution::U:
    case Distribution::R: return 0;
    case Distribution::G:
    case Distribution::E: return 1;
    case Distribution::C:
    case Distribution::GM: return 2;
  }
  return 0;
}

std::array<Distribution, 6> preset_order(int id) {
  using enum Distribution;
  switch (id) {
    case 1: return {E, C, G, U, R, GM};
    case 2: return {U, GM, E, R, G, C};
    case 3: return {E, G, R, C, U, GM};
    case 4: return {G, GM, E, U, R, C};
    case 5: return {G, C, R, U, GM, E};
  }
  throw config_error("order preset must be 1..5, got " + std::to_string(id));
}

namespace {

double round_half_up(double x) { return std::floor(x + 0.5); }

void clamp_unit_square(Eigen::MatrixX2d& pts) {
  pts = pts.cwiseMax(0.0).cwiseMin(1.0);
}

// Per-axis min-max normalization into [0,1]^2.
void normalize_unit_square(Eigen::MatrixX2d& pts) {
  for (int axis = 0; axis < 2; ++axis) {
    double lo = pts.col(axis).minCoeff();
    double hi = pts.col(axis).maxCoeff();
    if (hi - lo < 1e-12) {
      pts.col(axis).setConstant(0.5);
    } else {
      pts.col(axis) = (pts.col(axis).array() - lo) / (hi - lo);
    }
  }
}

// Demand phase applied uniformly: rounded demands below 1 become 1 so no customer is
// vacuous.
double bump(double d) { return std::max(d, 1.0); }

// Noisy distance-to-depot demands used by G and R: min-max map onto [1,10], then round.
Eigen::VectorXd depot_distance_demands(const Eigen::MatrixX2d& pts,
                                       const Eigen::RowVector2d& depot, Rng& rng,
                                       double noise_hi) {
  const Eigen::Index n = pts.rows();
  Eigen::VectorXd t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    t(i) = (pts.row(i) - depot).norm() + rng.uniform(0.0, noise_hi);
  }
  double lo = t.minCoeff(), hi = t.maxCoeff();
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = hi - lo < 1e-12 ? 1.0 : 1.0 + 9.0 * (t(i) - lo) / (hi - lo);
    d(i) = round_half_up(v);
  }
  return d;
}

Eigen::MatrixX2d sample_uniform_coords(int n, Rng& rng) {
  Eigen::MatrixX2d pts(n, 2);
  for (int i = 0; i < n; ++i) {
    pts(i, 0) = rng.uniform();
    pts(i, 1) = rng.uniform();
  }
  return pts;
}

struct GmLayout {
  Eigen::MatrixX2d pts;
  std::vector<int> center_of;  // -1 for the centers themselves
  int center_count = 0;
};

GmLayout sample_gm_coords(int n, Rng& rng) {
  GmLayout gm;
  gm.center_count = std::min(5, n);
  const int satellites = n - gm.center_count;
  gm.pts.resize(n, 2);
  gm.center_of.assign(n, -1);
  for (int z = 0; z < gm.center_count; ++z) {
    gm.pts(z, 0) = rng.uniform(0.0, 50.0);
    gm.pts(z, 1) = rng.uniform(0.0, 50.0);
  }
  // Satellites are dealt round-robin so truncation keeps cluster sizes balanced.
  for (int k = 0; k < satellites; ++k) {
    int z = k % gm.center_count;
    int row = gm.center_count + k;
    gm.pts(row, 0) = rng.normal(gm.pts(z, 0), 1.0);
    gm.pts(row, 1) = rng.normal(gm.pts(z, 1), 1.0);
    gm.center_of[row] = z;
  }
  normalize_unit_square(gm.pts);
  return gm;
}

// Satellite demand: distance to its own center in normalized space, min-max scaled
// over the satellites, times 10, rounded.
Eigen::VectorXd gm_demands(const GmLayout& gm, Rng& rng) {
  const Eigen::Index n = gm.pts.rows();
  Eigen::VectorXd d(n);
  std::vector<double> dist(n, 0.0);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (gm.center_of[i] < 0) continue;
    dist[i] = (gm.pts.row(i) - gm.pts.row(gm.center_of[i])).norm();
    lo = std::min(lo, dist[i]);
    hi = std::max(hi, dist[i]);
  }
  for (Eigen::Index i = 0; i < gm.center_count; ++i) {
    d(i) = 1.0 + rng.uniform_int(10);
  }
  for (Eigen::Index i = gm.center_count; i < n; ++i) {
    double norm = hi - lo < 1e-12 ? 0.0 : (dist[i] - lo) / (hi - lo);
    d(i) = bump(round_half_up(10.0 * norm));
  }
  return d;
}

Eigen::MatrixX2d sample_explosion_coords(int n, Rng& rng) {
  Eigen::MatrixX2d pts = sample_uniform_coords(n, rng);
  Eigen::RowVector2d p(rng.uniform(), rng.uniform());
  for (int i = 0; i < n; ++i) {
    Eigen::RowVector2d delta = pts.row(i) - p;
    double dist = delta.norm();
    if (dist >= 0.3) continue;
    double target = 0.3 + rng.exponential(40.0);
    // A node exactly on p has no direction away from it; push along +x.
    Eigen::RowVector2d dir = dist < 1e-12 ? Eigen::RowVector2d(1.0, 0.0)
                                          : Eigen::RowVector2d(delta / dist);
    pts.row(i) = p + target * dir;
  }
  clamp_unit_square(pts);
  return pts;
}

Eigen::VectorXd explosion_demands(int n, Rng& rng) {
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) {
    d(i) = bump(std::clamp(round_half_up(rng.normal(5.0, 1.0)), 0.0, 10.0));
  }
  return d;
}

Eigen::MatrixX2d sample_compression_coords(int n, Rng& rng) {
  Eigen::MatrixX2d pts = sample_uniform_coords(n, rng);
  Eigen::RowVector2d p1(rng.uniform(), rng.uniform());
  Eigen::RowVector2d p2(rng.uniform(), rng.uniform());
  while ((p2 - p1).norm() < 1e-9) p2 = Eigen::RowVector2d(rng.uniform(), rng.uniform());
  Eigen::RowVector2d axis = (p2 - p1).normalized();
  Eigen::RowVector2d normal(-axis(1), axis(0));
  for (int i = 0; i < n; ++i) {
    Eigen::RowVector2d rel = pts.row(i) - p1;
    double along = rel.dot(axis);
    double perp = rel.dot(normal);
    if (std::abs(perp) >= 0.3) continue;
    double fresh = rng.normal(0.0, 0.1);
    pts.row(i) = p1 + along * axis + fresh * normal;
  }
  clamp_unit_square(pts);
  return pts;
}

Eigen::VectorXd compression_demands(int n, Rng& rng) {
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) {
    d(i) = bump(std::clamp(round_half_up(10.0 - rng.normal(5.0, 1.0)), 0.0, 10.0));
  }
  return d;
}

Eigen::MatrixX2d sample_grid_coords(int n, Rng& rng) {
  double p = rng.uniform(0.2, 0.8);
  double w, h;
  if (rng.uniform() <= 0.5) {
    w = 1.0;
    h = p;
  } else {
    w = p;
    h = 1.0;
  }
  double cx = rng.uniform(w / 2, 1.0 - w / 2);
  double cy = rng.uniform(h / 2, 1.0 - h / 2);
  // Columns follow the aspect ratio; rows are whatever holds n cells, so only the
  // top (largest-y) row can be partial, filled from the smallest x.
  int a = static_cast<int>(std::ceil(std::sqrt(n * w / h)));
  a = std::max(a, 1);
  int b = (n + a - 1) / a;
  Eigen::MatrixX2d pts(n, 2);
  for (int k = 0; k < n; ++k) {
    int row = k / a, col = k % a;
    pts(k, 0) = cx - w / 2 + (col + 0.5) * w / a;
    pts(k, 1) = cy - h / 2 + (row + 0.5) * h / b;
  }
  return pts;
}

Eigen::MatrixX2d sample_ring_coords(int n, Rng& rng) {
  double p = rng.uniform(0.2, 0.8);
  Eigen::MatrixX2d pts(n, 2);
  for (int i = 0; i < n; ++i) {
    double an = rng.uniform(0.0, 2.0 * M_PI);
    double ra = rng.uniform(0.3, 0.4) + rng.normal(0.0, 0.05);
    pts(i, 0) = 0.5 + ra * std::cos(an);
    pts(i, 1) = 0.5 + ra * std::sin(an);
  }
  if (rng.uniform() <= 0.5) {
    pts.col(0) *= p;
  } else {
    pts.col(1) *= p;
  }
  clamp_unit_square(pts);
  return pts;
}

}  // namespace

Instance generate_instance(const TaskSpec& spec, Rng& rng) {
  spec.validate();
  Instance inst;
  inst.kind = spec.kind;
  inst.source = "generated:" + std::string(to_string(spec.distribution));
  const int n = spec.scale;
  const bool cvrp = spec.kind == ProblemKind::cvrp;

  GmLayout gm;
  switch (spec.distribution) {
    case Distribution::U: inst.coords = sample_uniform_coords(n, rng); break;
    case Distribution::GM:
      gm = sample_gm_coords(n, rng);
      inst.coords = gm.pts;
      break;
    case Distribution::E: inst.coords = sample_explosion_coords(n, rng); break;
    case Distribution::C: inst.coords = sample_compression_coords(n, rng); break;
    case Distribution::G: inst.coords = sample_grid_coords(n, rng); break;
    case Distribution::R: inst.coords = sample_ring_coords(n, rng); break;
  }

  if (cvrp) {
    inst.depot = Eigen::RowVector2d(rng.uniform(), rng.uniform());
    inst.capacity = spec.capacity;
    switch (spec.distribution) {
      case Distribution::U: {
        inst.demands.resize(n);
        for (int i = 0; i < n; ++i) inst.demands(i) = 1.0 + rng.uniform_int(10);
        break;
      }
      case Distribution::GM: inst.demands = gm_demands(gm, rng); break;
      case Distribution::E: inst.demands = explosion_demands(n, rng); break;
      case Distribution::C: inst.demands = compression_demands(n, rng); break;
      case Distribution::G:
        inst.demands = depot_distance_demands(inst.coords, inst.depot, rng, 1.0);
        break;
      case Distribution::R:
        inst.demands = depot_distance_demands(inst.coords, inst.depot, rng, 2.0);
        break;
    }
  }
  inst.validate();
  return inst;
}

std::vector<Instance> generate_instances(const TaskSpec& spec, int count) {
  Rng rng(derive_seed(spec.seed, "task-gen"));
  std::vector<Instance> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(generate_instance(spec, rng));
  return out;
}

namespace {

// Shared TSPLIB-style tokenizer: "KEY : value" headers followed by named sections.
struct LibFile {
  std::map<std::string, std::string> fields;
  std::map<std::string, std::vector<std::string>> sections;
};

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool is_section_header(const std::string& tok) {
  return tok.size() > 8 && tok.substr(tok.size() - 8) == "_SECTION";
}

LibFile parse_lib_text(const std::string& text) {
  LibFile f;
  std::istringstream in(text);
  std::string line;
  std::string section;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line == "EOF") break;
    if (section.empty()) {
      size_t colon = line.find(':');
      std::string head = trim(colon == std::string::npos ? line : line.substr(0, colon));
      if (is_section_header(head)) {
        section = head;
        f.sections[section];
        continue;
      }
      if (colon == std::string::npos) {
        throw config_error("unrecognized header line: " + line);
      }
      f.fields[head] = trim(line.substr(colon + 1));
    } else {
      size_t colon = line.find(':');
      std::string head = trim(colon == std::string::npos ? line : line.substr(0, colon));
      if (is_section_header(head)) {
        section = head;
        f.sections[section];
        continue;
      }
      f.sections[section].push_back(line);
    }
  }
  return f;
}

int required_int(const LibFile& f, const std::string& key) {
  auto it = f.fields.find(key);
  if (it == f.fields.end()) throw config_error("missing " + key + " field");
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw config_error("bad " + key + " value: " + it->second);
  }
}

void require_euc2d(const LibFile& f) {
  auto it = f.fields.find("EDGE_WEIGHT_TYPE");
  if (it == f.fields.end()) throw config_error("missing EDGE_WEIGHT_TYPE field");
  if (it->second != "EUC_2D") {
    throw config_error("unsupported EDGE_WEIGHT_TYPE: " + it->second + " (only EUC_2D)");
  }
}

// idx -> (x, y), 1-based indices in the file.
Eigen::MatrixX2d read_coord_section(const LibFile& f, int dimension) {
  auto it = f.sections.find("NODE_COORD_SECTION");
  if (it == f.sections.end()) throw config_error("missing NODE_COORD_SECTION");
  if (static_cast<int>(it->second.size()) != dimension) {
    throw config_error("NODE_COORD_SECTION has " + std::to_string(it->second.size()) +
                       " entries but DIMENSION is " + std::to_string(dimension));
  }
  Eigen::MatrixX2d pts(dimension, 2);
  std::vector<bool> seen(dimension, false);
  for (const auto& line : it->second) {
    std::istringstream ls(line);
    int idx;
    double x, y;
    if (!(ls >> idx >> x >> y)) throw config_error("bad coordinate line: " + line);
    if (idx < 1 || idx > dimension || seen[idx - 1]) {
      throw config_error("bad node index in coordinate line: " + line);
    }
    seen[idx - 1] = true;
    pts(idx - 1, 0) = x;
    pts(idx - 1, 1) = y;
  }
  return pts;
}

Eigen::MatrixX2d normalized_copy(const Eigen::MatrixX2d& raw) {
  Eigen::MatrixX2d pts = raw;
  normalize_unit_square(pts);
  return pts;
}

}  // namespace

Instance parse_tsplib(const std::string& text, const std::string& fallback_name) {
  LibFile f = parse_lib_text(text);
  if (auto it = f.fields.find("TYPE"); it != f.fields.end() && it->second != "TSP") {
    throw config_error("unsupported TYPE: " + it->second + " (expected TSP)");
  }
  require_euc2d(f);
  int dim = required_int(f, "DIMENSION");
  if (dim < 2) throw config_error("DIMENSION must be at least 2");

  Instance inst;
  inst.kind = ProblemKind::tsp;
  inst.raw_coords = read_coord_section(f, dim);
  inst.coords = normalized_copy(inst.raw_coords);
  inst.has_raw = true;
  std::string name = f.fields.count("NAME") ? f.fields.at("NAME") : fallback_name;
  inst.source = "benchmark:" + name;
  inst.validate();
  return inst;
}

Instance parse_cvrplib(const std::string& text, const std::string& fallback_name) {
  LibFile f = parse_lib_text(text);
  if (auto it = f.fields.find("TYPE"); it != f.fields.end() && it->second != "CVRP") {
    throw config_error("unsupported TYPE: " + it->second + " (expected CVRP)");
  }
  require_euc2d(f);
  int dim = required_int(f, "DIMENSION");
  if (dim < 2) throw config_error("DIMENSION must be at least 2");
  double capacity = required_int(f, "CAPACITY");

  Eigen::MatrixX2d all = read_coord_section(f, dim);

  auto dep_it = f.sections.find("DEPOT_SECTION");
  if (dep_it == f.sections.end()) throw config_error("missing DEPOT_SECTION");
  std::vector<int> depots;
  for (const auto& line : dep_it->second) {
    std::istringstream ls(line);
    int idx;
    while (ls >> idx) {
      if (idx == -1) break;
      depots.push_back(idx);
    }
  }
  if (depots.empty()) throw config_error("DEPOT_SECTION names no depot");
  if (depots.size() > 1) throw config_error("multiple depots are unsupported");
  int depot_idx = depots[0];
  if (depot_idx < 1 || depot_idx > dim) throw config_error("depot index out of range");

  auto dem_it = f.sections.find("DEMAND_SECTION");
  if (dem_it == f.sections.end()) throw config_error("missing DEMAND_SECTION");
  if (static_cast<int>(dem_it->second.size()) != dim) {
    throw config_error("DEMAND_SECTION has " + std::to_string(dem_it->second.size()) +
                       " entries but DIMENSION is " + std::to_string(dim));
  }
  Eigen::VectorXd all_demands(dim);
  std::vector<bool> seen(dim, false);
  for (const auto& line : dem_it->second) {
    std::istringstream ls(line);
    int idx;
    double d;
    if (!(ls >> idx >> d)) throw config_error("bad demand line: " + line);
    if (idx < 1 || idx > dim || seen[idx - 1]) throw config_error("bad demand index: " + line);
    seen[idx - 1] = true;
    all_demands(idx - 1) = d;
  }
  if (all_demands(depot_idx - 1) != 0) {
    throw config_error("depot demand must be 0");
  }

  Instance inst;
  inst.kind = ProblemKind::cvrp;
  inst.capacity = capacity;
  const int n = dim - 1;
  inst.raw_coords.resize(n, 2);
  inst.demands.resize(n);
  int row = 0;
  for (int i = 0; i < dim; ++i) {
    if (i == depot_idx - 1) continue;
    inst.raw_coords.row(row) = all.row(i);
    inst.demands(row) = all_demands(i);
    ++row;
  }
  inst.raw_depot = all.row(depot_idx - 1);

  // Normalize depot and customers together so relative geometry is preserved.
  Eigen::MatrixX2d joined(dim, 2);
  joined.topRows(n) = inst.raw_coords;
  joined.row(n) = inst.raw_depot;
  normalize_unit_square(joined);
  inst.coords = joined.topRows(n);
  inst.depot = joined.row(n);
  inst.has_raw = true;

  std::string name = f.fields.count("NAME") ? f.fields.at("NAME") : fallback_name;
  inst.source = "benchmark:" + name;
  inst.validate();
  return inst;
}

std::vector<int> parse_tour_file(const std::string& text) {
  LibFile f = parse_lib_text(text);
  auto it = f.sections.find("TOUR_SECTION");
  if (it == f.sections.end()) throw config_error("missing TOUR_SECTION");
  std::vector<int> tour;
  for (const auto& line : it->second) {
    std::istringstream ls(line);
    int idx;
    while (ls >> idx) {
      if (idx == -1) return tour;
      if (idx < 1) throw config_error("bad tour index: " + std::to_string(idx));
      tour.push_back(idx - 1);
    }
  }
  return tour;
}

Instance parse_benchmark_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string stem = path;
  if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
  if (auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".vrp") {
    return parse_cvrplib(buf.str(), stem);
  }
  return parse_tsplib(buf.str(), stem);
}

void write_tsplib(const std::string& path, const std::string& name,
                  const Eigen::MatrixX2d& raw_coords) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot open " + path + " for writing");
  out << "NAME : " << name << "\n";
  out << "TYPE : TSP\n";
  out << "DIMENSION : " << raw_coords.rows() << "\n";
  out << "EDGE_WEIGHT_TYPE : EUC_2D\n";
  out << "NODE_COORD_SECTION\n";
  out.precision(10);
  for (Eigen::Index i = 0; i < raw_coords.rows(); ++i) {
    out << (i + 1) << " " << raw_coords(i, 0) << " " << raw_coords(i, 1) << "\n";
  }
  out << "EOF\n";
}

}  // namespace llrbc
