#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "llrbc/buffer.hpp"
#include "llrbc/losses.hpp"
#include "llrbc/tasks.hpp"

using namespace llrbc;

namespace {

Behavior behavior_of(std::initializer_list<double> probs) {
  Behavior b;
  b.probs.resize(static_cast<Eigen::Index>(probs.size()));
  b.mask.clear();
  Eigen::Index i = 0;
  for (double v : probs) {
    b.probs(i++) = v;
    b.mask.push_back(v > 0 ? 1 : 0);
  }
  return b;
}

ExperienceBatch tag_batch(int id) {
  // A marker batch: the id rides in the entry's current field.
  ExperienceBatch batch;
  Experience e;
  e.instance_ref = 0;
  e.current = id;
  e.behavior = behavior_of({0.5, 0.5});
  batch.entries.push_back(e);
  return batch;
}

Policy fresh(ProblemKind kind, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.kind = kind;
  Policy p(cfg);
  Rng rng(seed);
  p.init_params(rng);
  return p;
}

std::vector<Instance> gen(Distribution d, ProblemKind kind, int scale, int count,
                          std::uint64_t seed) {
  TaskSpec s;
  s.distribution = d;
  s.kind = kind;
  s.scale = scale;
  s.capacity = kind == ProblemKind::cvrp ? 30.0 : 0.0;
  s.seed = seed;
  return generate_instances(s, count);
}

}  // namespace

TEST_CASE("confidence weight follows the variance formula") {
  // Uniform rows score 1 regardless of size.
  for (int n : {2, 4, 9}) {
    Behavior u;
    u.probs = Eigen::VectorXd::Constant(n, 1.0 / n);
    u.mask.assign(n, 1);
    CHECK(confidence_weight(u) == doctest::Approx(1.0).epsilon(1e-12));
  }
  // One-hot scores 0.
  Behavior onehot = behavior_of({0.0, 1.0, 0.0, 0.0});
  CHECK(confidence_weight(onehot) == doctest::Approx(0.0).epsilon(1e-12));
  // Half-half over four actions: var 0.0625 against var_max 0.1875.
  Behavior half = behavior_of({0.5, 0.5, 0.0, 0.0});
  CHECK(confidence_weight(half) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  Behavior tiny;
  tiny.probs = Eigen::VectorXd::Ones(1);
  tiny.mask.assign(1, 1);
  CHECK_THROWS_AS(confidence_weight(tiny), data_error);
}

TEST_CASE("confidence weight stays in range and rises toward uniform") {
  Rng rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    int n = 2 + rng.uniform_int(10);
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    int live = 1 + rng.uniform_int(n);
    double sum = 0;
    for (int i = 0; i < live; ++i) {
      p(i) = rng.uniform() + 1e-6;
      sum += p(i);
    }
    p /= sum;
    Behavior b;
    b.probs = p;
    b.mask.assign(n, 1);
    double w = confidence_weight(b);
    REQUIRE(w >= 0.0);
    REQUIRE(w <= 1.0);

    // Mixing toward uniform never lowers the weight.
    double t = rng.uniform();
    Behavior mixed;
    mixed.probs = (1 - t) * p + t * Eigen::VectorXd::Constant(n, 1.0 / n);
    mixed.mask.assign(n, 1);
    REQUIRE(confidence_weight(mixed) >= w - 1e-12);
  }
}

TEST_CASE("normalize_weights rescales to a unit sum") {
  auto w = normalize_weights({0.2, 0.6});
  REQUIRE(w.size() == 2);
  CHECK(w[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(0.75).epsilon(1e-12));

  auto single = normalize_weights({3.7});
  CHECK(single[0] == doctest::Approx(1.0).epsilon(1e-12));

  // All-zero raw weights fall back to uniform.
  auto zero = normalize_weights({0.0, 0.0, 0.0, 0.0});
  for (double v : zero) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

  auto equal = normalize_weights({0.4, 0.4, 0.4});
  for (double v : equal) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("reservoir keeps the first batches then replaces uniformly") {
  Rng rng(7);
  ReservoirBuffer rb(3);
  CHECK(rb.empty());
  for (int i = 0; i < 3; ++i) rb.offer(tag_batch(i), rng);
  CHECK(rb.offered() == 3);
  REQUIRE(rb.entries().size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(rb.entries()[i].entries[0].current == i);

  for (int i = 3; i < 100; ++i) rb.offer(tag_batch(i), rng);
  CHECK(rb.offered() == 100);
  CHECK(rb.entries().size() == 3);
  CHECK(rb.capacity() == 3);
}

TEST_CASE("reservoir inclusion is uniform over the stream") {
  const int cap = 5, stream = 25, repeats = 20000;
  std::vector<int> hits(stream, 0);
  Rng rng(11);
  for (int rep = 0; rep < repeats; ++rep) {
    ReservoirBuffer rb(cap);
    for (int i = 0; i < stream; ++i) rb.offer(tag_batch(i), rng);
    for (const auto& b : rb.entries()) hits[b.entries[0].current]++;
  }
  const double expect = static_cast<double>(repeats) * cap / stream;
  for (int i = 0; i < stream; ++i) {
    CHECK(hits[i] > expect * 0.9);
    CHECK(hits[i] < expect * 1.1);
  }
}

TEST_CASE("sampling switches between with and without replacement") {
  Rng fill(13);
  ReservoirBuffer rb(6);
  for (int i = 0; i < 6; ++i) rb.offer(tag_batch(i), fill);

  Rng rng(17);
  // count <= size: distinct indices.
  for (int trial = 0; trial < 100; ++trial) {
    auto idx = sample_experiences(rb, 4, rng);
    REQUIRE(idx.size() == 4);
    std::set<int> uniq(idx.begin(), idx.end());
    CHECK(uniq.size() == 4);
    for (int v : idx) {
      CHECK(v >= 0);
      CHECK(v < 6);
    }
  }
  // count > size: allowed to repeat, and a single-entry buffer must repeat.
  Rng rng2(19);
  ReservoirBuffer one(3);
  one.offer(tag_batch(42), rng2);
  auto idx = sample_experiences(one, 4, rng2);
  CHECK(idx == std::vector<int>{0, 0, 0, 0});

  ReservoirBuffer empty(3);
  CHECK_THROWS_AS(sample_experiences(empty, 2, rng2), data_error);
}

TEST_CASE("sampling is uniform across entries") {
  Rng fill(23);
  ReservoirBuffer rb(8);
  for (int i = 0; i < 8; ++i) rb.offer(tag_batch(i), fill);
  Rng rng(29);
  std::vector<int> hits(8, 0);
  const int draws = 40000;
  for (int trial = 0; trial < draws / 4; ++trial) {
    for (int v : sample_experiences(rb, 4, rng)) hits[v]++;
  }
  for (int i = 0; i < 8; ++i) {
    CHECK(hits[i] > draws / 8 * 0.94);
    CHECK(hits[i] < draws / 8 * 1.06);
  }
}

TEST_CASE("buffer serialization round-trips") {
  Policy p = fresh(ProblemKind::cvrp, 31);
  auto insts = gen(Distribution::U, ProblemKind::cvrp, 6, 2, 37);
  Rng rng(41);
  RolloutResult rb = rollout(p, {&insts[0], &insts[1]}, DecodeMode::sample, 3, &rng, true);

  ReservoirBuffer buf(4);
  Rng coll(43);
  buf.offer(collect_experiences(rb, 0, 0, coll), coll);
  buf.offer(collect_experiences(rb, 1, 2, coll), coll);
  for (int i = 0; i < 7; ++i) buf.offer(collect_experiences(rb, 2, 1, coll), coll);

  std::string text = buf.to_json();
  ReservoirBuffer back = ReservoirBuffer::from_json(text);
  CHECK(back.capacity() == buf.capacity());
  CHECK(back.offered() == buf.offered());
  REQUIRE(back.entries().size() == buf.entries().size());
  for (size_t b = 0; b < buf.entries().size(); ++b) {
    const auto& ours = buf.entries()[b];
    const auto& theirs = back.entries()[b];
    REQUIRE(theirs.entries.size() == ours.entries.size());
    REQUIRE(theirs.instances.size() == ours.instances.size());
    for (size_t i = 0; i < ours.instances.size(); ++i) {
      CHECK(theirs.instances[i].coords == ours.instances[i].coords);
    }
    for (size_t e = 0; e < ours.entries.size(); ++e) {
      CHECK(theirs.entries[e].instance_ref == ours.entries[e].instance_ref);
      CHECK(theirs.entries[e].visited == ours.entries[e].visited);
      CHECK(theirs.entries[e].current == ours.entries[e].current);
      CHECK(theirs.entries[e].remaining == ours.entries[e].remaining);
      CHECK(theirs.entries[e].behavior.probs == ours.entries[e].behavior.probs);
      CHECK(theirs.entries[e].behavior.mask == ours.entries[e].behavior.mask);
    }
  }

  const std::string path = "/tmp/llrbc_buffer_rt.json";
  buf.save(path);
  ReservoirBuffer loaded = ReservoirBuffer::load(path);
  CHECK(loaded.offered() == buf.offered());
  std::remove(path.c_str());

  CHECK_THROWS_AS(ReservoirBuffer::from_json("{]"), data_error);
}

TEST_CASE("collected experiences replay to the same behavior") {
  for (ProblemKind kind : {ProblemKind::tsp, ProblemKind::cvrp}) {
    Policy p = fresh(kind, 47);
    auto insts = gen(Distribution::E, kind, 7, 3, 53);
    Rng rng(59);
    RolloutResult rb =
        rollout(p, {&insts[0], &insts[1], &insts[2]}, DecodeMode::sample, 2, &rng, true);

    Rng coll(61);
    ExperienceBatch batch = collect_experiences(rb, 0, 0, coll);
    CHECK(batch.instances.size() == 3);
    CHECK(batch.entries.size() == 6);

    // Under the collecting policy, buffered behavior is exactly reproducible.
    std::vector<const ExperienceBatch*> batches = {&batch};
    CHECK(bc_loss(p, batches, DivergenceMode::reverse_kld, false, nullptr) ==
          doctest::Approx(0.0).epsilon(1e-10));

    for (const Experience& e : batch.entries) {
      REQUIRE(e.instance_ref >= 0);
      REQUIRE(e.instance_ref < static_cast<int>(batch.instances.size()));
      const Instance& inst = batch.instances[e.instance_ref];
      CHECK(e.behavior.probs.size() == inst.action_count());
      CHECK(e.behavior.mask.size() == static_cast<size_t>(inst.action_count()));
      // The stored mask has at least one live action and the probs sit on it.
      double on = 0, off = 0;
      for (int a = 0; a < inst.action_count(); ++a) {
        (e.behavior.mask[a] ? on : off) += e.behavior.probs(a);
      }
      CHECK(on == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(off == 0.0);
    }
  }
}

TEST_CASE("collection caps instances and trajectories") {
  Policy p = fresh(ProblemKind::tsp, 67);
  auto insts = gen(Distribution::U, ProblemKind::tsp, 6, 4, 71);
  Rng rng(73);
  std::vector<const Instance*> ptrs;
  for (const auto& i : insts) ptrs.push_back(&i);
  RolloutResult rb = rollout(p, ptrs, DecodeMode::sample, 3, &rng, true);

  Rng coll(79);
  ExperienceBatch capped = collect_experiences(rb, 2, 1, coll);
  CHECK(capped.instances.size() == 2);
  CHECK(capped.entries.size() == 2);

  ExperienceBatch full = collect_experiences(rb, 0, 0, coll);
  CHECK(full.instances.size() == 4);
  CHECK(full.entries.size() == 12);
}
