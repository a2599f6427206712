#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace llrbc {

inline constexpr const char* kVersion = "1.0.0";

enum class ProblemKind { tsp, cvrp };

inline std::string_view to_string(ProblemKind kind) {
  return kind == ProblemKind::tsp ? "tsp" : "cvrp";
}

// Bad user input: config files, CLI flags, malformed instance files. Exit code 1.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Broken state discovered at runtime: corrupt checkpoints, mask mismatches,
// non-finite losses. Exit code 2.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline ProblemKind problem_kind_from_string(std::string_view s) {
  if (s == "tsp") return ProblemKind::tsp;
  if (s == "cvrp") return ProblemKind::cvrp;
  throw config_error("unknown problem kind: " + std::string(s));
}

// Write-to-temp-then-rename so readers never observe a half-written file.
void write_text_atomic(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace llrbc
