#include <cmath>
#include <cstdio>
#include <vector>

#include "doctest.h"
#include "llrbc/instance.hpp"

using namespace llrbc;

namespace {

Instance square_tsp() {
  Instance inst;
  inst.kind = ProblemKind::tsp;
  inst.coords.resize(4, 2);
  inst.coords << 0, 0, 0, 1, 1, 1, 1, 0;
  inst.source = "generated:U";
  return inst;
}

Instance tiny_cvrp() {
  Instance inst;
  inst.kind = ProblemKind::cvrp;
  inst.coords.resize(2, 2);
  inst.coords << 0.5, 1.0, 1.0, 0.5;
  inst.depot = Eigen::RowVector2d(0.5, 0.5);
  inst.demands = Eigen::Vector2d(3, 4);
  inst.capacity = 5;
  inst.source = "generated:U";
  return inst;
}

}  // namespace

TEST_CASE("tsp tour length closes the cycle") {
  Instance inst = square_tsp();
  CHECK(tour_length(inst, {0, 1, 2, 3}) == doctest::Approx(4.0).epsilon(1e-12));
  // Diagonal crossing is longer.
  CHECK(tour_length(inst, {0, 2, 1, 3}) ==
        doctest::Approx(2.0 + 2.0 * std::sqrt(2.0)).epsilon(1e-12));
  // Direction reversal leaves the length unchanged.
  CHECK(tour_length(inst, {3, 2, 1, 0}) == tour_length(inst, {0, 1, 2, 3}));
}

TEST_CASE("tour length validates the visit multiset") {
  Instance inst = square_tsp();
  CHECK_THROWS_AS(tour_length(inst, {0, 1, 2}), data_error);
  CHECK_THROWS_AS(tour_length(inst, {0, 1, 2, 2}), data_error);
  CHECK_THROWS_AS(tour_length(inst, {0, 1, 2, 9}), data_error);
}

TEST_CASE("cvrp tour length walks depot to depot") {
  Instance inst = tiny_cvrp();
  // Depot at (.5,.5), customers at (.5,1) and (1,.5), each 0.5 from the depot.
  // One trip per customer: out and back twice.
  CHECK(tour_length(inst, {0, 2, 1, 2}) == doctest::Approx(2.0).epsilon(1e-12));
  // Both in one trip share the diagonal edge between the two customers.
  double diag = (inst.coords.row(0) - inst.coords.row(1)).norm();
  CHECK(tour_length(inst, {0, 1, 2}) == doctest::Approx(1.0 + diag).epsilon(1e-12));
  CHECK_THROWS_AS(tour_length(inst, {0, 1}), data_error);  // no final depot return
}

TEST_CASE("single customer at distance 0.5 gives a length-1 round trip") {
  Instance inst;
  inst.kind = ProblemKind::cvrp;
  inst.coords.resize(2, 2);
  inst.coords << 1.0, 0.5, 0.0, 0.5;
  inst.depot = Eigen::RowVector2d(0.5, 0.5);
  inst.demands = Eigen::Vector2d(1, 1);
  inst.capacity = 10;
  // Visit both, but separately so each leg is a clean 0.5 out, 0.5 back.
  CHECK(tour_length(inst, {0, 2, 1, 2}) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("tsplib nint convention rounds each edge on raw coordinates") {
  Instance inst;
  inst.kind = ProblemKind::tsp;
  inst.coords.resize(3, 2);
  inst.coords << 0, 0, 1, 0, 0, 1;
  inst.raw_coords.resize(3, 2);
  inst.raw_coords << 0, 0, 10, 0, 0, 10;
  inst.has_raw = true;
  inst.source = "benchmark:toy";
  // Edges: 10, hyp sqrt(200)=14.142->14, 10: total 34 under nint.
  CHECK(tour_length(inst, {0, 1, 2}, LengthConvention::tsplib_nint) == doctest::Approx(34.0));
  // Euclidean convention keeps normalized coordinates.
  CHECK(tour_length(inst, {0, 1, 2}, LengthConvention::euclidean) ==
        doctest::Approx(2.0 + std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("nint rounding is nearest-integer per edge, not truncation") {
  Instance inst;
  inst.kind = ProblemKind::tsp;
  inst.coords.resize(2, 2);
  inst.coords << 0, 0, 1, 0;
  inst.raw_coords.resize(2, 2);
  inst.raw_coords << 0, 0, 2.6, 0;
  inst.has_raw = true;
  // Edge 2.6 rounds to 3, there and back: 6.
  CHECK(tour_length(inst, {0, 1}, LengthConvention::tsplib_nint) == doctest::Approx(6.0));
}

TEST_CASE("instance json round-trip is exact") {
  Instance inst = tiny_cvrp();
  std::string text = instance_to_json(inst);
  Instance back = instance_from_json(text);
  CHECK(back.kind == inst.kind);
  CHECK(back.coords == inst.coords);
  CHECK(back.depot == inst.depot);
  CHECK(back.demands == inst.demands);
  CHECK(back.capacity == inst.capacity);
  CHECK(back.source == inst.source);
  CHECK_FALSE(back.has_raw);

  Instance t = square_tsp();
  Instance t2 = instance_from_json(instance_to_json(t));
  CHECK(t2.kind == ProblemKind::tsp);
  CHECK(t2.coords == t.coords);
  CHECK(t2.demands.size() == 0);
}

TEST_CASE("instance json rejects malformed input") {
  CHECK_THROWS_AS(instance_from_json("not json"), config_error);
  CHECK_THROWS_AS(instance_from_json("{}"), config_error);
  CHECK_THROWS_AS(instance_from_json(R"({"kind":"tsp","coords":[]})"), config_error);
}

TEST_CASE("jsonl test-set files round-trip") {
  std::vector<Instance> set = {square_tsp(), square_tsp()};
  set[1].coords(0, 0) = 0.25;
  const std::string path = "/tmp/llrbc_test_instances.jsonl";
  write_instances(path, set);
  std::vector<Instance> back = read_instances(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].coords == set[0].coords);
  CHECK(back[1].coords == set[1].coords);
  std::remove(path.c_str());
}

TEST_CASE("validate enforces the instance invariants") {
  CHECK_NOTHROW(square_tsp().validate());
  CHECK_NOTHROW(tiny_cvrp().validate());

  Instance bad = square_tsp();
  bad.coords(0, 0) = 1.5;
  CHECK_THROWS_AS(bad.validate(), config_error);

  Instance mixed = square_tsp();
  mixed.capacity = 10;
  CHECK_THROWS_AS(mixed.validate(), config_error);

  Instance c = tiny_cvrp();
  c.capacity = 0;
  CHECK_THROWS_AS(c.validate(), config_error);

  Instance heavy = tiny_cvrp();
  heavy.demands(0) = 99;
  CHECK_THROWS_AS(heavy.validate(), config_error);

  Instance zero = tiny_cvrp();
  zero.demands.setZero();
  CHECK_THROWS_AS(zero.validate(), config_error);
}
