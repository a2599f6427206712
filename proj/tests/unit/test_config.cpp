#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "llrbc/config.hpp"
#include "llrbc/runio.hpp"

using namespace llrbc;

TEST_CASE("an empty config takes every default from the desk profile") {
  RunConfig cfg = RunConfig::from_json_text("{}");
  CHECK(cfg.profile == "desk");
  CHECK(cfg.kind == ProblemKind::tsp);
  CHECK(cfg.preset == 1);
  CHECK(cfg.tasks.empty());
  CHECK(cfg.force_scale == 0);
  REQUIRE(cfg.methods.size() == 1);
  CHECK(cfg.methods[0] == Method::llr_bc);
  CHECK(cfg.seed == 1);
  CHECK(cfg.out_dir.empty());

  const TrainingParams& t = cfg.train;
  CHECK(t.epochs_per_task == 20);
  CHECK(t.instances_per_epoch == std::map<int, int>{{10, 2000}, {20, 800}, {30, 400}});
  CHECK(t.batch_size == std::map<int, int>{{10, 64}, {20, 32}, {30, 16}});
  CHECK(t.buffer_capacity == 50);
  CHECK(t.sample_count == 4);
  CHECK(t.alpha == 3.0);
  CHECK(t.divergence == DivergenceMode::reverse_kld);
  CHECK_FALSE(t.uniform_weights);
  CHECK_FALSE(t.buffer_all_epochs);
  CHECK(t.lr == 1e-4);
  CHECK(t.lambda == 10.0);
  CHECK(t.fisher_instances == 16);
  CHECK(t.test_instances == 200);
  CHECK(t.experience_max_instances == 8);
  CHECK(t.experience_max_trajectories == 16);
  CHECK(t.curve_eval_every == 0);
  CHECK(t.curve_eval_instances == 50);
}

TEST_CASE("the paper profile swaps in the large-run defaults") {
  RunConfig cfg = RunConfig::from_json_text(R"({"profile": "paper"})");
  CHECK(cfg.train.epochs_per_task == 200);
  CHECK(cfg.train.alpha == 100.0);
  CHECK(cfg.train.buffer_capacity == 1000);
  CHECK(cfg.train.sample_count == 16);
  CHECK(cfg.train.test_instances == 1000);
  CHECK(cfg.train.fisher_instances == 64);
  CHECK(cfg.train.experience_max_instances == 0);
  CHECK(cfg.train.experience_max_trajectories == 0);
  CHECK(cfg.train.instances_per_epoch ==
        std::map<int, int>{{20, 10000}, {50, 4000}, {100, 2000}});

  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"profile": "huge"})"), config_error);
}

TEST_CASE("task order resolves scales, capacities, and frozen seeds") {
  RunConfig cfg = RunConfig::from_json_text(R"({"kind": "cvrp", "preset": 1})");
  auto order = cfg.order();
  REQUIRE(order.size() == 6);
  std::vector<Distribution> want = {Distribution::E, Distribution::C, Distribution::G,
                                    Distribution::U, Distribution::R, Distribution::GM};
  std::vector<int> scales = {20, 30, 20, 10, 10, 30};
  std::vector<double> caps = {40, 50, 40, 30, 30, 50};
  for (int i = 0; i < 6; ++i) {
    CHECK(order[i].distribution == want[i]);
    CHECK(order[i].kind == ProblemKind::cvrp);
    CHECK(order[i].scale == scales[i]);
    CHECK(order[i].capacity == caps[i]);
    CHECK(order[i].seed == derive_seed(cfg.seed, "test-" + order[i].name()));
  }
  CHECK(order[0].name() == "E20");
  CHECK(order[5].name() == "GM30");

  // An explicit task list overrides the preset.
  RunConfig two = RunConfig::from_json_text(R"({"tasks": ["U", "R"], "preset": 4})");
  auto torder = two.order();
  REQUIRE(torder.size() == 2);
  CHECK(torder[0].distribution == Distribution::U);
  CHECK(torder[1].distribution == Distribution::R);
  CHECK(torder[0].capacity == 0.0);

  // Presets pick different sequences.
  RunConfig p2 = RunConfig::from_json_text(R"({"preset": 2})");
  CHECK(p2.order()[0].distribution == Distribution::U);
  RunConfig p5 = RunConfig::from_json_text(R"({"preset": 5})");
  CHECK(p5.order()[0].distribution == Distribution::G);
}

TEST_CASE("forced scales keep the capacity bands monotone") {
  for (auto [scale, cap] : std::map<int, double>{{4, 30}, {10, 30}, {12, 30},
                                                 {20, 40}, {25, 40}, {30, 50}, {64, 50}}) {
    RunConfig cfg;
    cfg.kind = ProblemKind::cvrp;
    cfg.force_scale = scale;
    cfg.tasks = {Distribution::U};
    auto order = cfg.order();
    CHECK(order[0].scale == scale);
    CHECK(order[0].capacity == cap);
  }
}

TEST_CASE("batches per epoch floor-divides with a minimum of one") {
  RunConfig cfg = RunConfig::from_json_text("{}");
  CHECK(cfg.batches_per_epoch(10) == 31);  // 2000 / 64
  CHECK(cfg.batches_per_epoch(20) == 25);
  CHECK(cfg.batches_per_epoch(30) == 25);
  CHECK_THROWS_AS(cfg.batches_per_epoch(12), config_error);

  RunConfig tiny = RunConfig::from_json_text(
      R"({"force_scale": 4,
          "overrides": {"instances_per_epoch": {"4": 3}, "batch_size": {"4": 8}}})");
  CHECK(tiny.batches_per_epoch(4) == 1);
}

TEST_CASE("overrides replace profile defaults and reject unknown keys") {
  RunConfig cfg = RunConfig::from_json_text(R"({
    "kind": "cvrp",
    "methods": ["llr_bc", "ft", "EWC", "restart"],
    "seed": 42,
    "overrides": {
      "epochs_per_task": 3,
      "instances_per_epoch": {"10": 100},
      "batch_size": {"10": 10},
      "buffer_capacity": 7,
      "sample_count": 2,
      "alpha": 50.5,
      "divergence": "kld",
      "uniform_weights": true,
      "buffer_all_epochs": true,
      "lr": 0.001,
      "lambda": 3.5,
      "fisher_instances": 8,
      "test_instances": 12,
      "experience_max_instances": 2,
      "experience_max_trajectories": 3,
      "curve_eval_every": 5,
      "curve_eval_instances": 6
    }
  })");
  CHECK(cfg.methods == std::vector<Method>{Method::llr_bc, Method::finetune, Method::ewc,
                                           Method::restart});
  CHECK(cfg.seed == 42);
  const TrainingParams& t = cfg.train;
  CHECK(t.epochs_per_task == 3);
  CHECK(t.instances_per_epoch == std::map<int, int>{{10, 100}});
  CHECK(t.batch_size == std::map<int, int>{{10, 10}});
  CHECK(t.buffer_capacity == 7);
  CHECK(t.sample_count == 2);
  CHECK(t.alpha == 50.5);
  CHECK(t.divergence == DivergenceMode::kld);
  CHECK(t.uniform_weights);
  CHECK(t.buffer_all_epochs);
  CHECK(t.lr == 0.001);
  CHECK(t.lambda == 3.5);
  CHECK(t.fisher_instances == 8);
  CHECK(t.test_instances == 12);
  CHECK(t.experience_max_instances == 2);
  CHECK(t.experience_max_trajectories == 3);
  CHECK(t.curve_eval_every == 5);
  CHECK(t.curve_eval_instances == 6);

  CHECK_THROWS_WITH_AS(
      RunConfig::from_json_text(R"({"overrides": {"warmup": 3}})"),
      doctest::Contains("unknown override"), config_error);
  CHECK_THROWS_WITH_AS(
      RunConfig::from_json_text(R"({"overrides": {"divergence": "js"}})"),
      doctest::Contains("divergence"), config_error);
}

TEST_CASE("the config hash ignores formatting and placement but not semantics") {
  const std::string a = R"({"seed": 9, "kind": "cvrp", "preset": 3})";
  const std::string b = R"({
      "preset":    3,
      "kind":   "cvrp",
      "seed": 9
  })";
  RunConfig ca = RunConfig::from_json_text(a);
  RunConfig cb = RunConfig::from_json_text(b);
  CHECK(ca.canonical_json() == cb.canonical_json());
  CHECK(ca.config_hash() == cb.config_hash());

  RunConfig cc = RunConfig::from_json_text(R"({"seed": 9, "kind": "cvrp", "preset": 3,
                                               "out_dir": "/tmp/somewhere"})");
  CHECK(cc.config_hash() == ca.config_hash());

  RunConfig cd = RunConfig::from_json_text(R"({"seed": 10, "kind": "cvrp", "preset": 3})");
  CHECK(cd.config_hash() != ca.config_hash());

  RunConfig ce = RunConfig::from_json_text(
      R"({"seed": 9, "kind": "cvrp", "preset": 3, "overrides": {"alpha": 99.0}})");
  CHECK(ce.config_hash() != ca.config_hash());
}

TEST_CASE("method names accept the common spellings") {
  CHECK(method_from_string("llr_bc") == Method::llr_bc);
  CHECK(method_from_string("llrbc") == Method::llr_bc);
  CHECK(method_from_string("LLR-BC") == Method::llr_bc);
  CHECK(method_from_string("finetune") == Method::finetune);
  CHECK(method_from_string("fine_tuning") == Method::finetune);
  CHECK(method_from_string("FT") == Method::finetune);
  CHECK(method_from_string("restart") == Method::restart);
  CHECK(method_from_string("EWC") == Method::ewc);
  CHECK_THROWS_AS(method_from_string("sgd"), config_error);

  for (Method m : {Method::llr_bc, Method::finetune, Method::restart, Method::ewc}) {
    CHECK(method_from_string(to_string(m)) == m);
  }
}

TEST_CASE("validation rejects out-of-range settings") {
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"preset": 0})"), config_error);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"preset": 6})"), config_error);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"force_scale": 1})"), config_error);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"methods": []})"), config_error);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"overrides": {"epochs_per_task": 0}})"),
                  config_error);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"overrides": {"alpha": -1.0}})"),
                  config_error);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"overrides": {"lr": 0.0}})"), config_error);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"overrides": {"test_instances": 0}})"),
                  config_error);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"overrides": {"lambda": -0.5}})"),
                  config_error);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"overrides": {"curve_eval_every": -1}})"),
                  config_error);

  // A preset outside 1..5 is fine when an explicit task list is present.
  RunConfig ok = RunConfig::from_json_text(R"({"tasks": ["U"], "preset": 9})");
  CHECK(ok.order().size() == 1);
}

TEST_CASE("malformed config text maps to config errors") {
  CHECK_THROWS_WITH_AS(RunConfig::from_json_text("{"),
                       doctest::Contains("not valid json"), config_error);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"seed": "lots"})"), config_error);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"kind": "sat"})"), config_error);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"tasks": ["Q"]})"), config_error);
  CHECK_THROWS_AS(RunConfig::from_file("/tmp/llrbc_missing_config.json"), config_error);
}

TEST_CASE("run directories derive from the output root when unset") {
  RunConfig cfg = RunConfig::from_json_text(R"({"out_dir": "/tmp/llrbc_explicit"})");
  CHECK(resolve_run_dir(cfg) == "/tmp/llrbc_explicit");

  RunConfig bare = RunConfig::from_json_text("{}");
  std::string derived = resolve_run_dir(bare);
  CHECK(derived.find(output_root()) == 0);
  CHECK(derived.find("run-") != std::string::npos);
}
