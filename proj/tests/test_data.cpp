#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "test_util.hpp"
#include "tkgode/data.hpp"

using namespace tkg;
using test::TempDir;
using test::write_file;

namespace {

std::multiset<std::tuple<int, int, int, int>> event_multiset(const QuadrupleStore& s) {
  std::multiset<std::tuple<int, int, int, int>> out;
  for (const auto& q : s.events) out.insert({q.s, q.r, q.o, q.t});
  return out;
}

}  // namespace

TEST_CASE("parse_quadruples basic read-back") {
  TempDir dir("parse");
  write_file(dir.file("events.txt"), "0\t1\t2\t0\n2\t0\t1\t1\n");
  QuadrupleStore store = parse_quadruples(dir.file("events.txt"));
  CHECK(store.num_entities == 3);
  CHECK(store.num_relations == 2);
  CHECK(store.num_timestamps == 2);
  CHECK(store.events.size() == 2);
}

TEST_CASE("parse_quadruples rejects bad input") {
  TempDir dir("parse_bad");
  write_file(dir.file("empty.txt"), "");
  CHECK_THROWS_WITH_AS(parse_quadruples(dir.file("empty.txt")), "no events", ParseError);

  write_file(dir.file("short.txt"), "0\t1\t2\n");
  CHECK_THROWS_AS(parse_quadruples(dir.file("short.txt")), ParseError);

  write_file(dir.file("neg.txt"), "0\t-1\t2\t0\n");
  CHECK_THROWS_AS(parse_quadruples(dir.file("neg.txt")), ParseError);

  write_file(dir.file("text.txt"), "0\tx\t2\t0\n");
  CHECK_THROWS_AS(parse_quadruples(dir.file("text.txt")), ParseError);

  CHECK_THROWS_AS(parse_quadruples(dir.file("missing.txt")), ParseError);
}

TEST_CASE("parse_quadruples ignores trailing columns and comments") {
  TempDir dir("parse_extra");
  // The companion line keeps the id spaces dense so the remap is an identity.
  write_file(dir.file("events.txt"), "# header\n0\t1\t2\t0\t365\n1\t0\t2\t0\n");
  QuadrupleStore store = parse_quadruples(dir.file("events.txt"));
  REQUIRE(store.events.size() == 2);
  CHECK(store.events[0] == Quadruple{0, 1, 2, 0});
}

TEST_CASE("dataset round trip through the TSV writer") {
  PatternSpec spec;
  spec.kind = Pattern::Random;
  QuadrupleStore store = generate_synthetic_tkg(8, 3, 12, spec, 99);
  TempDir dir("roundtrip");
  write_dataset(store, dir.str());
  QuadrupleStore back = load_dataset(dir.str());
  CHECK(back.num_entities == store.num_entities);
  CHECK(back.num_relations == store.num_relations);
  CHECK(back.num_timestamps == store.num_timestamps);
  CHECK(back.train_end_t == store.train_end_t);
  CHECK(back.valid_end_t == store.valid_end_t);
  CHECK(event_multiset(back) == event_multiset(store));
}

TEST_CASE("load_dataset rejects splits whose timestamps overlap") {
  TempDir dir("overlap");
  write_file(dir.file("train.txt"), "0\t0\t1\t0\n0\t0\t1\t5\n");
  write_file(dir.file("valid.txt"), "1\t0\t0\t3\n");  // inside the train range
  write_file(dir.file("test.txt"), "1\t0\t0\t7\n");
  CHECK_THROWS_AS(load_dataset(dir.str()), ParseError);
}

TEST_CASE("augment_reciprocal doubles events and relations") {
  QuadrupleStore store;
  store.num_entities = 4;
  store.num_relations = 2;
  store.num_timestamps = 6;
  store.train_end_t = 6;
  store.valid_end_t = 6;
  store.events = {{0, 1, 2, 5}, {1, 0, 3, 2}, {2, 1, 1, 0}};

  QuadrupleStore aug = augment_reciprocal(store);
  CHECK(aug.events.size() == 6);
  CHECK(aug.relation_rows() == 4);
  // (0, 1, 2, 5) gains (2, 1 + N_r, 0, 5)
  const bool found = std::any_of(aug.events.begin(), aug.events.end(), [&](const Quadruple& q) {
    return q == Quadruple{2, 1 + store.num_relations, 0, 5};
  });
  CHECK(found);
  CHECK_THROWS_AS(augment_reciprocal(aug), ContractError);

  // Involution: stripping the reciprocals recovers the original multiset.
  CHECK(event_multiset(strip_reciprocal(aug)) == event_multiset(store));
}

TEST_CASE("build_snapshots partitions events by timestamp") {
  QuadrupleStore store;
  store.num_entities = 3;
  store.num_relations = 1;
  store.num_timestamps = 3;
  store.events = {{0, 0, 1, 0}, {0, 0, 1, 1}};
  QuadrupleStore aug = augment_reciprocal(store);
  auto snaps = build_snapshots(aug);
  REQUIRE(snaps.size() == 3);
  CHECK(snaps[0].edges.size() == 2);  // edge plus its reciprocal
  CHECK(snaps[1].edges.size() == 2);
  CHECK(snaps[2].edges.empty());  // empty timestamp retained

  // In-neighbourhood of object 1 at t=0 is {(0, 0)}.
  const auto& nbrs = snaps[0].in_neighbors(1);
  REQUIRE(nbrs.size() == 1);
  CHECK(nbrs[0] == std::pair<int, int>{0, 0});
  CHECK(snaps[0].in_neighbors(2).empty());
}

TEST_CASE("snapshot partition counts on random stores") {
  PatternSpec spec;
  spec.kind = Pattern::Random;
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    QuadrupleStore store = generate_synthetic_tkg(6, 2, 9, spec, seed);
    const size_t raw = store.events.size();
    auto snaps = build_snapshots(augment_reciprocal(store));
    size_t total = 0;
    for (const auto& s : snaps) total += s.edges.size();
    CHECK(total == 2 * raw);
  }
}

TEST_CASE("build_jump_tensor single change") {
  Snapshot a, b;
  a.t = 0;
  b.t = 1;
  a.edges = {{0, 0, 1}};
  b.edges = {{0, 0, 2}};
  JumpTensor jt = build_jump_tensor(a, b);
  REQUIRE(jt.deltas.size() == 2);
  // Sorted by (s, r, o): (0,0,1) disappears, (0,0,2) appears.
  CHECK(jt.deltas[0].o == 1);
  CHECK(jt.deltas[0].sign == -1);
  CHECK(jt.deltas[1].o == 2);
  CHECK(jt.deltas[1].sign == +1);

  JumpTensor same = build_jump_tensor(a, a);
  CHECK(same.empty());
}

TEST_CASE("jump tensor matches dense subtraction on a 10x4x10 grid") {
  Rng rng(17);
  const int V = 10, R = 4;
  auto random_snapshot = [&](int t) {
    Snapshot s;
    s.t = t;
    for (int i = 0; i < 25; ++i) {
      Snapshot::Edge e{rng.next_int(V), rng.next_int(R), rng.next_int(V)};
      s.edges.push_back(e);
    }
    return s;
  };
  for (int trial = 0; trial < 5; ++trial) {
    Snapshot a = random_snapshot(0), b = random_snapshot(1);
    JumpTensor jt = build_jump_tensor(a, b);

    // Dense oracle: materialize both binary tensors and subtract.
    std::vector<int> ta(V * R * V, 0), tb(V * R * V, 0);
    for (const auto& e : a.edges) ta[(e.s * R + e.r) * V + e.o] = 1;
    for (const auto& e : b.edges) tb[(e.s * R + e.r) * V + e.o] = 1;
    std::map<std::tuple<int, int, int>, int> expected;
    for (int s = 0; s < V; ++s)
      for (int r = 0; r < R; ++r)
        for (int o = 0; o < V; ++o) {
          const int d = tb[(s * R + r) * V + o] - ta[(s * R + r) * V + o];
          if (d != 0) expected[{s, r, o}] = d;
        }
    REQUIRE(jt.deltas.size() == expected.size());
    for (const auto& d : jt.deltas) {
      auto it = expected.find({d.s, d.r, d.o});
      REQUIRE(it != expected.end());
      CHECK(it->second == d.sign);
      CHECK((d.sign == 1 || d.sign == -1));
    }
  }
}

TEST_CASE("time map endpoints and linearity") {
  QuadrupleStore store;
  store.num_timestamps = 11;
  TimeMap tm = make_time_map(store);
  CHECK(tm.tau(0) == 0.0);
  CHECK(tm.tau(10) == 0.01);
  CHECK(tm.tau(5) == doctest::Approx(0.005));
  CHECK(tm.delta_tau() == doctest::Approx(0.001));

  // Midpoint linearity and monotonicity.
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const int a = rng.next_int(11), c = rng.next_int(11);
    if ((a + c) % 2 == 0)
      CHECK(tm.tau(a) + tm.tau(c) == doctest::Approx(2.0 * tm.tau((a + c) / 2)));
    if (a < c) CHECK(tm.tau(a) < tm.tau(c));
  }

  QuadrupleStore degenerate;
  degenerate.num_timestamps = 1;
  CHECK_THROWS_AS(make_time_map(degenerate), ContractError);
}

TEST_CASE("inductive subset selects unseen entities") {
  QuadrupleStore store;
  store.num_entities = 3;
  store.num_relations = 1;
  store.num_timestamps = 4;
  store.train_end_t = 2;
  store.valid_end_t = 2;
  // Training mentions entities {0, 1} only.
  store.events = {{0, 0, 1, 0}, {1, 0, 0, 1}, {2, 0, 0, 3}, {0, 0, 1, 3}};

  auto subset = inductive_subset(store);
  REQUIRE(subset.size() == 1);
  CHECK(subset[0] == Quadruple{2, 0, 0, 3});
}

TEST_CASE("inductive subset equals a brute-force scan on random stores") {
  PatternSpec spec;
  spec.kind = Pattern::Random;
  for (uint64_t seed : {4ull, 5ull, 6ull}) {
    QuadrupleStore store = generate_synthetic_tkg(12, 3, 10, spec, seed);
    // Thin out the training split so unseen entities actually occur.
    std::vector<Quadruple> kept;
    for (const auto& q : store.events) {
      if (store.in_train(q.t) && (q.s % 3 == 0 || q.o % 3 == 0)) continue;
      kept.push_back(q);
    }
    store.events = kept;

    std::set<int> seen;
    for (const auto& q : store.events)
      if (store.in_train(q.t)) {
        seen.insert(q.s);
        seen.insert(q.o);
      }
    std::vector<Quadruple> expected;
    for (const auto& q : store.events)
      if (store.in_test(q.t) && (!seen.count(q.s) || !seen.count(q.o))) expected.push_back(q);

    auto got = inductive_subset(store);
    REQUIRE(got.size() == expected.size());
    for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == expected[i]);
  }
}

TEST_CASE("synthetic periodic pattern") {
  PatternSpec spec;
  spec.kind = Pattern::Periodic;
  spec.period = 2;
  QuadrupleStore store = generate_synthetic_tkg(4, 1, 6, spec, 3);
  CHECK_FALSE(store.events.empty());
  std::set<int> times;
  for (const auto& q : store.events) times.insert(q.t);
  CHECK(times == std::set<int>{0, 2, 4});

  // Determinism: same seed, same store.
  QuadrupleStore again = generate_synthetic_tkg(4, 1, 6, spec, 3);
  CHECK(event_multiset(again) == event_multiset(store));
  QuadrupleStore other = generate_synthetic_tkg(4, 1, 6, spec, 4);
  CHECK(event_multiset(other) != event_multiset(store));
}

TEST_CASE("jump_consequence pattern: every appearance implies its consequence") {
  PatternSpec spec;
  spec.kind = Pattern::JumpConsequence;
  QuadrupleStore store = generate_synthetic_tkg(10, 4, 20, spec, 42);

  std::set<std::tuple<int, int, int, int>> have;
  for (const auto& q : store.events) have.insert({q.s, q.r, q.o, q.t});
  auto present = [&](int s, int r, int o, int t) { return have.count({s, r, o, t}) > 0; };

  int appearances = 0;
  for (const auto& q : store.events) {
    if (q.r != 0) continue;  // trigger relation
    const bool appeared = q.t >= 1 && !present(q.s, 0, q.o, q.t - 1);
    if (!appeared || q.t + 1 >= store.num_timestamps) continue;
    ++appearances;
    CHECK(present(q.s, 1, q.o, q.t + 1));
  }
  CHECK(appearances > 0);

  CHECK_THROWS_AS(generate_synthetic_tkg(10, 1, 20, spec, 1), ConfigError);
}

TEST_CASE("pattern names round trip and reject unknowns") {
  CHECK(pattern_from_name("periodic") == Pattern::Periodic);
  CHECK(pattern_name(Pattern::JumpConsequence) == "jump_consequence");
  CHECK_THROWS_AS(pattern_from_name("zigzag"), ConfigError);
}

TEST_CASE("prepare_data bundles snapshots, jumps, and the time map") {
  PatternSpec spec;
  spec.kind = Pattern::Periodic;
  TkgData data = prepare_data(generate_synthetic_tkg(6, 2, 8, spec, 9));
  CHECK(data.store.augmented);
  CHECK(data.snapshots.size() == 8);
  CHECK(data.jumps.size() == 7);
  CHECK(data.time_map.tau(7) == 0.01);
}
