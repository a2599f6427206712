#include <algorithm>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "llrbc/env.hpp"
#include "llrbc/tasks.hpp"

using namespace llrbc;

namespace {

Instance make_tsp(int n, std::uint64_t seed) {
  TaskSpec s;
  s.distribution = Distribution::U;
  s.kind = ProblemKind::tsp;
  s.scale = n;
  s.seed = seed;
  Rng rng(seed);
  return generate_instance(s, rng);
}

Instance make_cvrp(int n, double capacity, std::uint64_t seed) {
  TaskSpec s;
  s.distribution = Distribution::U;
  s.kind = ProblemKind::cvrp;
  s.scale = n;
  s.capacity = capacity;
  s.seed = seed;
  Rng rng(seed);
  return generate_instance(s, rng);
}

int count_true(const std::vector<std::uint8_t>& mask) {
  return static_cast<int>(std::count(mask.begin(), mask.end(), 1));
}

}  // namespace

TEST_CASE("tsp reset marks the start city") {
  Instance inst = make_tsp(5, 1);
  ConstructionState s = reset(inst, 2);
  CHECK(s.route == std::vector<int>{2});
  CHECK(s.visited_count == 1);
  CHECK(s.visited[2] == 1);
  CHECK(s.current == 2);
  CHECK_FALSE(s.terminal());
  CHECK_THROWS_AS(reset(inst, 5), data_error);
  CHECK_THROWS_AS(reset(inst, -1), data_error);
}

TEST_CASE("tsp feasibility excludes visited cities and steps complete the tour") {
  Instance inst = make_tsp(4, 2);
  ConstructionState s = reset(inst, 0);
  std::vector<std::uint8_t> m = feasible_actions(s);
  REQUIRE(m.size() == 4);
  CHECK(m[0] == 0);
  CHECK(count_true(m) == 3);

  s = step(s, 2);
  CHECK(s.current == 2);
  CHECK(s.visited[2] == 1);
  m = feasible_actions(s);
  CHECK(m[0] == 0);
  CHECK(m[2] == 0);
  CHECK(count_true(m) == 2);

  s = step(s, 1);
  s = step(s, 3);
  CHECK(s.terminal());
  CHECK(s.route == std::vector<int>{0, 2, 1, 3});
  CHECK(route_is_feasible(inst, s.route));
}

TEST_CASE("cvrp reset starts at the depot with full capacity") {
  Instance inst = make_cvrp(6, 30, 3);
  ConstructionState s = reset(inst, 4);
  CHECK(s.current == inst.depot_index());
  CHECK(s.remaining == 30.0);
  CHECK(s.visited_count == 0);
  CHECK(s.route.empty());
  // Equal resets produce equal states.
  ConstructionState t = reset(inst, 4);
  CHECK(s.route == t.route);
  CHECK(s.visited == t.visited);
  CHECK(s.current == t.current);
}

TEST_CASE("cvrp feasibility follows demand and depot rules") {
  Instance inst;
  inst.kind = ProblemKind::cvrp;
  inst.coords.resize(3, 2);
  inst.coords << 0.1, 0.1, 0.9, 0.1, 0.5, 0.9;
  inst.depot = Eigen::RowVector2d(0.5, 0.5);
  inst.demands = Eigen::Vector3d(5, 7, 3);
  inst.capacity = 10;
  inst.source = "generated:U";

  ConstructionState s = reset(inst, 0);
  // At the depot: all customers fit, depot move masked out.
  std::vector<std::uint8_t> m = feasible_actions(s);
  REQUIRE(m.size() == 4);
  CHECK(m[0] == 1);
  CHECK(m[1] == 1);
  CHECK(m[2] == 1);
  CHECK(m[3] == 0);

  s = step(s, 0);  // demand 5, remaining 5
  CHECK(s.remaining == 5.0);
  m = feasible_actions(s);
  CHECK(m[0] == 0);  // visited
  CHECK(m[1] == 0);  // demand 7 > 5
  CHECK(m[2] == 1);  // demand 3 fits
  CHECK(m[3] == 1);  // depot return allowed away from depot

  s = step(s, 3);  // depot refill
  CHECK(s.current == inst.depot_index());
  CHECK(s.remaining == 10.0);
  m = feasible_actions(s);
  CHECK(m[1] == 1);
  CHECK(m[3] == 0);

  s = step(s, 1);
  CHECK(s.remaining == 3.0);
  s = step(s, 2);
  // Last customer visited: the final depot return is appended automatically.
  CHECK(s.terminal());
  CHECK(s.route.back() == inst.depot_index());
  CHECK(route_is_feasible(inst, s.route));
}

TEST_CASE("cvrp mask keeps only the depot when nothing fits") {
  Instance inst;
  inst.kind = ProblemKind::cvrp;
  inst.coords.resize(2, 2);
  inst.coords << 0.2, 0.2, 0.8, 0.8;
  inst.depot = Eigen::RowVector2d(0.5, 0.5);
  inst.demands = Eigen::Vector2d(5, 7);
  inst.capacity = 8;
  inst.source = "generated:U";

  ConstructionState s = reset(inst, 0);
  s = step(s, 0);  // remaining 3: neither customer fits
  std::vector<std::uint8_t> m = feasible_actions(s);
  CHECK(m == std::vector<std::uint8_t>{0, 0, 1});
}

TEST_CASE("route_is_feasible rejects broken routes") {
  Instance inst = make_cvrp(4, 10, 9);
  inst.demands = Eigen::Vector4d(6, 6, 2, 2);

  // Two heavy customers on one trip exceed capacity.
  CHECK_FALSE(route_is_feasible(inst, {0, 1, 2, 3, 4}));
  CHECK(route_is_feasible(inst, {0, 4, 1, 2, 3, 4}));
  // Missing customer.
  CHECK_FALSE(route_is_feasible(inst, {0, 1, 2, 4}));
  // Duplicate visit.
  CHECK_FALSE(route_is_feasible(inst, {0, 4, 1, 2, 3, 3, 4}));
  // Missing final depot return.
  CHECK_FALSE(route_is_feasible(inst, {0, 4, 1, 2, 3}));

  Instance tsp = make_tsp(4, 5);
  CHECK(route_is_feasible(tsp, {3, 1, 0, 2}));
  CHECK_FALSE(route_is_feasible(tsp, {3, 1, 0}));
  CHECK_FALSE(route_is_feasible(tsp, {3, 1, 0, 0}));
}

TEST_CASE("random feasible walks always terminate with feasible routes") {
  Rng rng(1234);
  const std::vector<Distribution> dists = {Distribution::U, Distribution::GM,
                                           Distribution::E, Distribution::C,
                                           Distribution::G, Distribution::R};
  for (int trial = 0; trial < 300; ++trial) {
    TaskSpec s;
    s.distribution = dists[trial % dists.size()];
    s.kind = trial % 2 == 0 ? ProblemKind::tsp : ProblemKind::cvrp;
    s.scale = 4 + rng.uniform_int(12);
    s.capacity = s.kind == ProblemKind::cvrp ? 30 : 0;
    s.seed = trial;
    Instance inst = generate_instance(s, rng);

    int start = rng.uniform_int(inst.n());
    ConstructionState st = reset(inst, start);
    if (inst.kind == ProblemKind::cvrp) st = step(st, start);  // forced first customer
    int guard = 0;
    while (!st.terminal()) {
      std::vector<std::uint8_t> mask = feasible_actions(st);
      REQUIRE(count_true(mask) > 0);
      int pick = rng.uniform_int(count_true(mask));
      int action = -1;
      for (size_t a = 0; a < mask.size(); ++a) {
        if (!mask[a]) continue;
        if (pick-- == 0) {
          action = static_cast<int>(a);
          break;
        }
      }
      if (inst.kind == ProblemKind::cvrp) {
        REQUIRE(st.remaining >= 0.0);
        if (action < inst.n()) REQUIRE(inst.demands(action) <= st.remaining);
      }
      st = step(st, action);
      REQUIRE(++guard < 10 * inst.n() + 10);
    }
    REQUIRE(route_is_feasible(inst, st.route));
    CHECK(tour_length(inst, st.route) > 0.0);
  }
}

TEST_CASE("stepping an infeasible action throws") {
  Instance inst = make_tsp(4, 7);
  ConstructionState s = reset(inst, 1);
  CHECK_THROWS_AS(step(s, 1), data_error);

  Instance v = make_cvrp(3, 10, 8);
  ConstructionState c = reset(v, 0);
  CHECK_THROWS_AS(step(c, v.depot_index()), data_error);  // depot self-loop
}
