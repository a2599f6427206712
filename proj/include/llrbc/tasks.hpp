#pragma once

#include <array>
#include <string>
#include <vector>

#include "llrbc/instance.hpp"
#include "llrbc/rng.hpp"

namespace llrbc {

enum class Distribution { U, GM, E, C, G, R };

std::string_view to_string(Distribution d);
Distribution distribution_from_string(std::string_view s);

struct TaskSpec {
  Distribution distribution = Distribution::U;
  ProblemKind kind = ProblemKind::tsp;
  int scale = 0;
  double capacity = 0;  // CVRP only
  std::uint64_t seed = 0;

  std::string name() const;  // e.g. "U10", "GM30"
  void validate() const;
};

// Draws one instance from the spec's distribution. Consumption order per generator is
// fixed: node-coordinate process, then depot (CVRP), then demand process, so reruns
// with an equally seeded stream are bitwise identical.
Instance generate_instance(const TaskSpec& spec, Rng& rng);

// Convenience wrapper seeding a fresh "task-gen" substream from spec.seed.
std::vector<Instance> generate_instances(const TaskSpec& spec, int count);

// Scale role within an order: 0 (U, R), 1 (G, E), 2 (C, GM). Profiles map roles to
// concrete scales, capacities, and batch settings.
int scale_role(Distribution d);

// The five fixed task orders.
std::array<Distribution, 6> preset_order(int id);

// TSPLIB / CVRPLIB ingestion (EUC_2D only). Coordinates are min-max normalized per
// axis into the unit square; raw coordinates are retained on the instance.
Instance parse_tsplib(const std::string& text, const std::string& fallback_name = "");
Instance parse_cvrplib(const std::string& text, const std::string& fallback_name = "");
std::vector<int> parse_tour_file(const std::string& text);  // 0-based indices

Instance parse_benchmark_file(const std::string& path);  // dispatches on extension

void write_tsplib(const std::string& path, const std::string& name,
                  const Eigen::MatrixX2d& raw_coords);

}  // namespace llrbc
