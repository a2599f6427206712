#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include "doctest.h"
#include "llrbc/config.hpp"
#include "llrbc/instance.hpp"
#include "llrbc/policy.hpp"
#include "llrbc/rng.hpp"

using namespace llrbc;
namespace fs = std::filesystem;

namespace {

const std::string kCli = LLRBC_CLI_PATH;
const std::string kBenchDir = std::string(LLRBC_SOURCE_DIR) + "/data/benchmarks";

struct CmdResult {
  int code = -1;
  std::string output;
};

CmdResult sh(const std::string& cmd) {
  static int counter = 0;
  std::string capture = "/tmp/llrbc_cli_capture_" + std::to_string(counter++);
  int rc = std::system((cmd + " > " + capture + " 2>&1").c_str());
  CmdResult r;
  r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  if (fs::exists(capture)) {
    r.output = read_text(capture);
    fs::remove(capture);
  }
  return r;
}

const char* kMicroTemplate = R"({
  "kind": "tsp",
  "tasks": ["U"],
  "force_scale": 4,
  "methods": ["finetune"],
  "seed": 7,
  "out_dir": "%OUT%",
  "overrides": {
    "epochs_per_task": 1,
    "instances_per_epoch": {"4": 8},
    "batch_size": {"4": 8},
    "buffer_capacity": 1,
    "sample_count": 1,
    "test_instances": 4,
    "fisher_instances": 2
  }
})";

std::string write_micro_config(const std::string& path, const std::string& out_dir) {
  std::string text = kMicroTemplate;
  text.replace(text.find("%OUT%"), 5, out_dir);
  write_text_atomic(path, text);
  return path;
}

}  // namespace

TEST_CASE("help and version exit cleanly") {
  CmdResult help = sh(kCli + " --help");
  CHECK(help.code == 0);
  CHECK(help.output.find("run") != std::string::npos);
  CHECK(help.output.find("report") != std::string::npos);
  CHECK(help.output.find("gen-tasks") != std::string::npos);
  CHECK(help.output.find("bench-eval") != std::string::npos);

  CmdResult version = sh(kCli + " --version");
  CHECK(version.code == 0);
  CHECK(version.output.find("1.0.0") != std::string::npos);

  CHECK(sh(kCli).code == 1);
  CHECK(sh(kCli + " frobnicate").code == 1);
}

TEST_CASE("validate-only prints the config hash without running") {
  std::string cfg_path =
      write_micro_config("/tmp/llrbc_cli_validate.json", "/tmp/llrbc_cli_validate_run");
  CmdResult r = sh(kCli + " run --validate-only " + cfg_path);
  CHECK(r.code == 0);
  CHECK(r.output.find("config ok, hash ") != std::string::npos);

  std::ostringstream expect;
  expect << std::hex << RunConfig::from_file(cfg_path).config_hash();
  CHECK(r.output.find(expect.str()) != std::string::npos);
  CHECK_FALSE(fs::exists("/tmp/llrbc_cli_validate_run"));

  CHECK(sh(kCli + " run /tmp/llrbc_cli_no_such_config.json").code == 1);
  write_text_atomic("/tmp/llrbc_cli_broken.json", "{nope");
  CmdResult bad = sh(kCli + " run --validate-only /tmp/llrbc_cli_broken.json");
  CHECK(bad.code == 1);
  CHECK(bad.output.find("config error") != std::string::npos);
  fs::remove("/tmp/llrbc_cli_broken.json");
  fs::remove(cfg_path);
}

TEST_CASE("identically configured runs produce identical metrics") {
  const std::string dir_a = "/tmp/llrbc_cli_run_a";
  const std::string dir_b = "/tmp/llrbc_cli_run_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  std::string cfg_a = write_micro_config("/tmp/llrbc_cli_a.json", dir_a);
  std::string cfg_b = write_micro_config("/tmp/llrbc_cli_b.json", dir_b);

  CmdResult ra = sh(kCli + " run " + cfg_a);
  REQUIRE(ra.code == 0);
  CHECK(ra.output.find("run complete") != std::string::npos);
  CHECK(fs::exists(dir_a + "/manifest.json"));
  CHECK(fs::exists(dir_a + "/metrics.csv"));
  CHECK(fs::exists(dir_a + "/report.md"));
  CHECK(fs::exists(dir_a + "/finetune/matrix.csv"));
  CHECK(fs::exists(dir_a + "/test_sets/U4.jsonl"));

  CmdResult rb = sh(kCli + " run " + cfg_b);
  REQUIRE(rb.code == 0);
  // metrics.csv embeds the run directory, so determinism is judged on the matrices.
  CHECK(read_text(dir_a + "/finetune/matrix.csv") ==
        read_text(dir_b + "/finetune/matrix.csv"));
  CHECK(read_text(dir_a + "/test_sets/U4.jsonl") == read_text(dir_b + "/test_sets/U4.jsonl"));

  // Re-running over finished artifacts only rebuilds the derived outputs.
  std::string metrics = read_text(dir_a + "/metrics.csv");
  fs::remove(dir_a + "/metrics.csv");
  CmdResult resumed = sh(kCli + " run " + cfg_a);
  REQUIRE(resumed.code == 0);
  CHECK(read_text(dir_a + "/metrics.csv") == metrics);

  // The same directory refuses a semantically different config.
  std::string text = read_text(cfg_a);
  text.replace(text.find("\"seed\": 7"), 9, "\"seed\": 8");
  write_text_atomic(cfg_a, text);
  CmdResult clash = sh(kCli + " run " + cfg_a);
  CHECK(clash.code == 1);
  CHECK(clash.output.find("different configuration") != std::string::npos);

  // Report over the parent directory summarizes the finished run.
  CmdResult rep = sh(kCli + " report " + dir_b);
  CHECK(rep.code == 0);
  CHECK(rep.output.find("finetune") != std::string::npos);

  fs::remove(cfg_a);
  fs::remove(cfg_b);
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("report needs artifacts to summarize") {
  const std::string dir = "/tmp/llrbc_cli_empty";
  fs::remove_all(dir);
  fs::create_directories(dir);
  CHECK(sh(kCli + " report " + dir).code == 1);
  CHECK(sh(kCli + " report /tmp/llrbc_cli_nonexistent").code == 1);
  fs::remove_all(dir);
}

TEST_CASE("gen-tasks freezes test sets deterministically") {
  const std::string dir = "/tmp/llrbc_cli_gen";
  fs::remove_all(dir);
  write_text_atomic("/tmp/llrbc_cli_gen.json", R"({
    "kind": "cvrp",
    "tasks": ["GM"],
    "force_scale": 5,
    "seed": 3,
    "out_dir": "/tmp/llrbc_cli_gen",
    "overrides": {"test_instances": 6}
  })");
  CmdResult r = sh(kCli + " gen-tasks /tmp/llrbc_cli_gen.json");
  REQUIRE(r.code == 0);
  std::string set_path = dir + "/test_sets/GM5.jsonl";
  CHECK(r.output.find(set_path) != std::string::npos);
  std::vector<Instance> insts = read_instances(set_path);
  REQUIRE(insts.size() == 6);
  for (const Instance& inst : insts) {
    CHECK(inst.kind == ProblemKind::cvrp);
    CHECK(inst.n() == 5);
    CHECK(inst.capacity == 30.0);
  }

  // Regeneration after deletion reproduces the bytes exactly.
  std::string bytes = read_text(set_path);
  fs::remove(set_path);
  REQUIRE(sh(kCli + " gen-tasks /tmp/llrbc_cli_gen.json").code == 0);
  CHECK(read_text(set_path) == bytes);

  CHECK(sh(kCli + " gen-tasks --tasks Q --out " + dir).code == 1);

  // Without --out the set lands under the output root.
  const std::string outroot = "/tmp/llrbc_cli_outroot";
  fs::remove_all(outroot);
  CmdResult rooted = sh("LLRBC_OUTPUT_ROOT=" + outroot + " " + kCli +
                        " gen-tasks --tasks U --force-scale 4 --seed 2");
  REQUIRE(rooted.code == 0);
  bool found = false;
  for (const auto& entry : fs::recursive_directory_iterator(outroot)) {
    if (entry.path().filename() == "U4.jsonl") found = true;
  }
  CHECK(found);

  fs::remove("/tmp/llrbc_cli_gen.json");
  fs::remove_all(dir);
  fs::remove_all(outroot);
}

TEST_CASE("bench-eval writes one csv per checkpoint") {
  ModelConfig mc;
  mc.kind = ProblemKind::tsp;
  Policy p(mc);
  Rng rng(5);
  p.init_params(rng);
  const std::string ck = "/tmp/llrbc_cli_ck.json";
  p.save(ck);

  const std::string out = "/tmp/llrbc_cli_bench";
  fs::remove_all(out);
  CmdResult r = sh(kCli + " bench-eval --checkpoint " + ck + " --dir " + kBenchDir +
                   " --out " + out + " --max-scale 20");
  REQUIRE(r.code == 0);
  CHECK(r.output.find("mean gap 0") != std::string::npos);
  std::string csv = read_text(out + "/llrbc_cli_ck_bench.csv");
  // Header plus rand10..rand20: the six bundled files at or under 20 nodes.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
  CHECK(csv.find("rand10,10,") != std::string::npos);
  // Oversized and wrong-kind files are skipped with warnings, not errors.
  CHECK(r.output.find("warning:") != std::string::npos);
  CHECK(r.output.find("berlin52") != std::string::npos);

  CHECK(sh(kCli + " bench-eval --dir " + kBenchDir).code == 1);
  CHECK(sh(kCli + " bench-eval --checkpoint /tmp/llrbc_cli_no_ck.json --dir " + kBenchDir)
            .code == 1);

  fs::remove(ck);
  fs::remove_all(out);
}
