#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "helpers.hpp"
#include "swstab/digraph.hpp"
#include "swstab/errors.hpp"
#include "swstab/signal.hpp"

using namespace swstab;
using namespace swstab::testing;

namespace {

// Four-vertex graph with loops (1,3), (1,3,2), (1,4,3), (1,4,3,2) in
// canonical order, used throughout with the 13-mode walk below.
Digraph demo_graph() {
  return Digraph(4, {{1, 3}, {1, 4}, {2, 1}, {3, 1}, {3, 2}, {4, 3}});
}

SwitchingSignal demo_signal() {
  SwitchingSignal sig;
  sig.modes = {2, 1, 3, 1, 4, 3, 2, 1, 4, 3, 1, 4, 3};
  sig.durations.assign(13, 1.0);
  return sig;
}

}  // namespace

TEST_CASE("signal validation and switch times") {
  SwitchingSignal sig{{1, 2, 1}, {0.5, 1.5, 2.0}};
  CHECK_NOTHROW(validate_signal(sig));
  CHECK(sig.length() == 3);
  CHECK(sig.total_time() == doctest::Approx(4.0));
  auto t = sig.switch_times();
  REQUIRE(t.size() == 4);
  CHECK(t[0] == 0.0);
  CHECK(t[1] == doctest::Approx(0.5));
  CHECK(t[2] == doctest::Approx(2.0));
  CHECK(t[3] == doctest::Approx(4.0));

  CHECK_THROWS_AS(validate_signal(SwitchingSignal{{}, {}}), Error);
  CHECK_THROWS_AS(validate_signal(SwitchingSignal{{1, 2}, {1.0}}), Error);
  CHECK_THROWS_AS(validate_signal(SwitchingSignal{{1}, {0.0}}), Error);
  CHECK_THROWS_AS(validate_signal(SwitchingSignal{{1}, {-1.0}}), Error);
}

TEST_CASE("admissibility follows graph edges") {
  Digraph g = demo_graph();
  CHECK(check_admissible(demo_signal(), g).admissible);

  SwitchingSignal bad{{1, 1}, {1.0, 1.0}};
  auto res = check_admissible(bad, Digraph(2, {{1, 2}, {2, 1}}));
  CHECK_FALSE(res.admissible);
  CHECK(res.first_violation == 1);

  Digraph ring(3, {{1, 2}, {2, 3}, {3, 1}});
  SwitchingSignal walk{{1, 2, 3, 1, 2}, {1, 1, 1, 1, 1}};
  CHECK(check_admissible(walk, ring).admissible);
}

TEST_CASE("standard decomposition reproduces the hand-worked table") {
  Digraph g = demo_graph();
  auto dec = standard_decomposition(demo_signal(), g);
  REQUIRE(dec.instances.size() == 3);

  CHECK(dec.instances[0].edge_indices == std::vector<int>{2, 3});
  CHECK(dec.instances[0].loop.vertices == std::vector<int>{1, 3});
  CHECK(dec.instances[0].loop_id == 1);
  CHECK(dec.instances[0].total_time == doctest::Approx(2.0));

  CHECK(dec.instances[1].edge_indices == std::vector<int>{1, 4, 5, 6});
  CHECK(dec.instances[1].loop.vertices == std::vector<int>{1, 4, 3, 2});
  CHECK(dec.instances[1].loop_id == 4);
  CHECK(dec.instances[1].total_time == doctest::Approx(4.0));

  CHECK(dec.instances[2].edge_indices == std::vector<int>{8, 9, 10});
  CHECK(dec.instances[2].loop.vertices == std::vector<int>{1, 4, 3});
  CHECK(dec.instances[2].loop_id == 3);
  CHECK(dec.instances[2].total_time == doctest::Approx(3.0));

  CHECK(dec.residual_edge_indices == std::vector<int>{7, 11, 12});
  CHECK(dec.residual_vertices == std::vector<int>{2, 1, 4, 3});
}

TEST_CASE("decomposition boundary cases") {
  Digraph g = demo_graph();
  // Vertex-distinct path: no loops.
  SwitchingSignal path{{2, 1, 4, 3}, {1, 1, 1, 1}};
  auto dec = standard_decomposition(path, g);
  CHECK(dec.instances.empty());
  CHECK(dec.residual_edge_indices == std::vector<int>{1, 2, 3});
  CHECK(dec.residual_vertices == std::vector<int>{2, 1, 4, 3});

  // Pure repetition: two instances of the 2-loop, empty residual.
  SwitchingSignal rep{{1, 3, 1, 3, 1}, {1, 2, 3, 4, 5}};
  auto dec2 = standard_decomposition(rep, g);
  REQUIRE(dec2.instances.size() == 2);
  CHECK(dec2.instances[0].edge_indices == std::vector<int>{1, 2});
  CHECK(dec2.instances[1].edge_indices == std::vector<int>{3, 4});
  CHECK(dec2.instances[0].total_time == doctest::Approx(3.0));
  CHECK(dec2.instances[1].total_time == doctest::Approx(7.0));
  CHECK(dec2.residual_edge_indices.empty());
  CHECK(dec2.residual_vertices == std::vector<int>{1});

  // Single mode: nothing to decompose.
  SwitchingSignal one{{2}, {1.0}};
  auto dec3 = standard_decomposition(one, g);
  CHECK(dec3.instances.empty());
  CHECK(dec3.residual_edge_indices.empty());
  CHECK(dec3.residual_vertices == std::vector<int>{2});

  // Inadmissible signal is rejected.
  SwitchingSignal bad{{1, 2}, {1.0, 1.0}};
  CHECK_THROWS_AS((void)standard_decomposition(bad, g), Error);
}

TEST_CASE("decomposition partitions edges and conserves time") {
  std::mt19937_64 rng(888);
  for (int trial = 0; trial < 100; ++trial) {
    int k = 2 + static_cast<int>(rng() % 5);
    Digraph g = random_digraph(rng, k);
    SwitchingSignal sig = random_signal(rng, g, 3 + static_cast<int>(rng() % 30));
    auto dec = standard_decomposition(sig, g);

    std::set<int> seen;
    double loop_time = 0.0;
    for (const auto& inst : dec.instances) {
      loop_time += inst.total_time;
      double edge_time = 0.0;
      for (int n : inst.edge_indices) {
        auto [it, fresh] = seen.insert(n);
        CHECK(fresh);
        CHECK(n >= 1);
        CHECK(n <= sig.length() - 1);
        // Edge n of the loop instance really is (modes[n-1], modes[n]).
        CHECK(g.has_edge(sig.modes[n - 1], sig.modes[n]));
        edge_time += sig.durations[n - 1];
      }
      CHECK(inst.total_time == doctest::Approx(edge_time).epsilon(1e-12));
    }
    double residual_time = 0.0;
    for (int n : dec.residual_edge_indices) {
      auto [it, fresh] = seen.insert(n);
      CHECK(fresh);
      residual_time += sig.durations[n - 1];
    }
    CHECK(static_cast<int>(seen.size()) == sig.length() - 1);

    double total = 0.0;
    for (int n = 1; n <= sig.length() - 1; ++n) total += sig.durations[n - 1];
    CHECK(loop_time + residual_time == doctest::Approx(total).epsilon(1e-12));

    // Residual path is vertex distinct, so at most k - 1 edges.
    std::set<int> rv(dec.residual_vertices.begin(), dec.residual_vertices.end());
    CHECK(rv.size() == dec.residual_vertices.size());
    CHECK(static_cast<int>(dec.residual_edge_indices.size()) <= k - 1);
  }
}

TEST_CASE("decomposition instances grow monotonically with the prefix") {
  std::mt19937_64 rng(1313);
  for (int trial = 0; trial < 40; ++trial) {
    int k = 2 + static_cast<int>(rng() % 4);
    Digraph g = random_digraph(rng, k);
    SwitchingSignal sig = random_signal(rng, g, 12 + static_cast<int>(rng() % 10));
    std::vector<std::vector<int>> prev;
    for (int n = 1; n <= sig.length(); ++n) {
      SwitchingSignal prefix;
      prefix.modes.assign(sig.modes.begin(), sig.modes.begin() + n);
      prefix.durations.assign(sig.durations.begin(), sig.durations.begin() + n);
      auto dec = standard_decomposition(prefix, g);
      std::vector<std::vector<int>> cur;
      for (const auto& inst : dec.instances) cur.push_back(inst.edge_indices);
      REQUIRE(cur.size() >= prev.size());
      for (std::size_t i = 0; i < prev.size(); ++i) CHECK(cur[i] == prev[i]);
      prev = std::move(cur);
    }
    // A walk longer than k + 1 modes must contain a loop instance.
    if (sig.length() >= k + 2) CHECK_FALSE(prev.empty());
  }
}

TEST_CASE("class spec validation") {
  CHECK_NOTHROW(validate_class_spec(DwellSpec{1.0}));
  CHECK_THROWS_AS(validate_class_spec(DwellSpec{0.0}), Error);
  CHECK_THROWS_AS(validate_class_spec(SimpleLoopDwellSpec{{}}), Error);
  CHECK_THROWS_AS(validate_class_spec(SimpleLoopDwellSpec{{1.0, -1.0}}), Error);
  CHECK_NOTHROW(validate_class_spec(DwellFleeSpec{1.0, 0.5}));
  CHECK_THROWS_AS(validate_class_spec(DwellFleeSpec{1.0, 0.0}), Error);
  CHECK_THROWS_AS(validate_class_spec(LoopwiseDwellFleeSpec{{1.0}, {1.0, 2.0}}), Error);
}

TEST_CASE("dwell membership checks every duration") {
  Digraph ring(2, {{1, 2}, {2, 1}});
  SwitchingSignal sig{{1, 2, 1, 2}, {1.0, 1.0, 1.0, 0.4}};
  auto ok = class_membership(sig, ring, DwellSpec{1.0});
  CHECK_FALSE(ok.member);
  REQUIRE(ok.violations.size() == 1);
  CHECK(ok.violations[0].slack == doctest::Approx(-0.6));
  CHECK(ok.checked_constraints == 4);
  // Exactly at the floor: zero slack still passes.
  sig.durations[3] = 1.0;
  auto exact = class_membership(sig, ring, DwellSpec{1.0});
  CHECK(exact.member);
  CHECK(exact.violations.empty());
}

TEST_CASE("simple loop dwell is enforced per extracted instance") {
  Digraph g = demo_graph();
  SwitchingSignal sig = demo_signal();
  // Canonical loop order: (1,3), (1,3,2), (1,4,3), (1,4,3,2).
  // Instances carry times 2 (loop 1), 4 (loop 4), 3 (loop 3).
  SimpleLoopDwellSpec spec{{2.0, 99.0, 3.0, 4.0}};
  auto res = class_membership(sig, g, spec);
  CHECK(res.member);  // unused loop 2 imposes nothing
  CHECK(res.checked_constraints == 3);

  spec.tau[2] = 3.5;  // instance time 3 now violates
  auto res2 = class_membership(sig, g, spec);
  CHECK_FALSE(res2.member);
  REQUIRE(res2.violations.size() == 1);
  CHECK(res2.violations[0].slack == doctest::Approx(-0.5));

  // One tau per simple loop is required.
  CHECK_THROWS_AS((void)class_membership(sig, g, SimpleLoopDwellSpec{{1.0}}), Error);
}

TEST_CASE("dwell flee membership splits by mode class") {
  Digraph ring(2, {{1, 2}, {2, 1}});
  SwitchingSignal sig{{1, 2, 1, 2}, {2.0, 0.3, 2.5, 0.4}};
  Partition part{1};
  auto res = class_membership(sig, ring, DwellFleeSpec{2.0, 0.5}, part);
  CHECK(res.member);
  // Unstable interval too long.
  sig.durations[3] = 0.6;
  auto res2 = class_membership(sig, ring, DwellFleeSpec{2.0, 0.5}, part);
  CHECK_FALSE(res2.member);
  REQUIRE(res2.violations.size() == 1);
  CHECK(res2.violations[0].slack == doctest::Approx(-0.1));
  // The partition is mandatory.
  CHECK_THROWS_AS((void)class_membership(sig, ring, DwellFleeSpec{2.0, 0.5}), Error);
  try {
    (void)class_membership(sig, ring, DwellFleeSpec{2.0, 0.5});
  } catch (const Error& e) {
    CHECK(e.code() == "MissingPartition");
    CHECK(e.category() == ErrorCategory::InvalidInput);
  }
}

TEST_CASE("loopwise dwell flee splits instance time by source class") {
  Digraph g = demo_graph();
  SwitchingSignal sig = demo_signal();
  Partition part{2};  // modes 1, 2 stable; 3, 4 unstable
  // Instance of loop (1,3): stable time d2, unstable time d3.
  // Instance of loop (1,4,3,2): stable d1+d4, unstable d5+d6.
  // Instance of loop (1,4,3): stable d8, unstable d9+d10.
  LoopwiseDwellFleeSpec spec{{1.0, 1.0, 1.0, 2.0}, {1.0, 1.0, 2.0, 2.0}};
  auto res = class_membership(sig, g, spec, part);
  CHECK(res.member);
  CHECK(res.checked_constraints == 6);

  // Tighten the stable floor of loop (1,3) past d2 = 1.
  spec.tau[0] = 1.5;
  auto res2 = class_membership(sig, g, spec, part);
  CHECK_FALSE(res2.member);
  REQUIRE(res2.violations.size() == 1);
  CHECK(res2.violations[0].slack == doctest::Approx(-0.5));

  // Tighten the unstable ceiling of loop (1,4,3) past d9 + d10 = 2.
  spec.tau[0] = 1.0;
  spec.eta[2] = 1.5;
  auto res3 = class_membership(sig, g, spec, part);
  CHECK_FALSE(res3.member);
  REQUIRE(res3.violations.size() == 1);
  CHECK(res3.violations[0].slack == doctest::Approx(-0.5));

  CHECK_THROWS_AS((void)class_membership(sig, g, spec), Error);  // partition required
}

TEST_CASE("switch counters split the prefix by class") {
  SwitchingSignal sig = demo_signal();
  Partition part{2};
  // Modes 1 and 2 appear six times in (2,1,3,1,4,3,2,1,4,3,1,4,3).
  auto [ns, nu] = switch_counters(sig, part, 13);
  CHECK(ns == 6);
  CHECK(nu == 7);
  auto [ns0, nu0] = switch_counters(sig, part, 0);
  CHECK(ns0 == 0);
  CHECK(nu0 == 0);
  auto [ns4, nu4] = switch_counters(sig, part, 4);
  CHECK(ns4 == 3);  // modes 2, 1, 3, 1
  CHECK(nu4 == 1);
  CHECK_THROWS_AS((void)switch_counters(sig, part, 14), Error);
  CHECK_THROWS_AS((void)switch_counters(sig, part, -1), Error);

  Digraph ring(2, {{1, 2}, {2, 1}});
  SwitchingSignal alt;
  for (int i = 0; i < 10; ++i) {
    alt.modes.push_back(1 + (i % 2));
    alt.durations.push_back(1.0);
  }
  auto [a, b] = switch_counters(alt, Partition{1}, 10);
  CHECK(a == 5);
  CHECK(b == 5);
}

TEST_CASE("synthesis produces class members deterministically") {
  std::mt19937_64 rng(555);
  int done = 0;
  while (done < 100) {
    int k = 2 + static_cast<int>(rng() % 4);
    Digraph g = random_digraph(rng, k);
    auto loops = enumerate_simple_loops(g);
    if (loops.empty()) continue;
    std::uint64_t seed = rng();
    int variant = static_cast<int>(rng() % 4);
    SignalClassSpec spec;
    std::optional<Partition> part;
    if (variant == 0) {
      spec = DwellSpec{0.5};
    } else if (variant == 1) {
      std::vector<double> tau(loops.size(), 1.5);
      spec = SimpleLoopDwellSpec{tau};
    } else if (variant == 2) {
      part = Partition{std::max(1, k - 1)};
      spec = DwellFleeSpec{0.8, 0.6};
    } else {
      // Stable floor only where a loop has a stable-source edge.
      part = Partition{k - 1};
      std::vector<double> tau(loops.size()), eta(loops.size(), 10.0);
      for (std::size_t i = 0; i < loops.size(); ++i) {
        bool has_stable_edge = false;
        for (const Edge& e : loops[i].edges())
          if (e.from <= k - 1) has_stable_edge = true;
        tau[i] = has_stable_edge ? 0.7 : 1e-6;
      }
      spec = LoopwiseDwellFleeSpec{tau, eta};
    }
    SwitchingSignal sig;
    try {
      sig = synthesize_signal(g, spec, 20, seed, part);
    } catch (const Error& e) {
      // A loop with no stable-source edge can make the floor unsatisfiable.
      CHECK(e.code() == "SynthesisFailure");
      continue;
    }
    ++done;
    CHECK(sig.length() == 20);
    CHECK(check_admissible(sig, g).admissible);
    CHECK(class_membership(sig, g, spec, part).member);
    // Determinism: the same seed reproduces the signal bit for bit.
    SwitchingSignal again = synthesize_signal(g, spec, 20, seed, part);
    CHECK(again.modes == sig.modes);
    CHECK(again.durations == sig.durations);
  }
}

TEST_CASE("synthesis reports unsatisfiable loop floors") {
  // Unstable vertices 3, 4 form the only cycle; a loop-time floor on their
  // loop has no stable-source edge to stretch.
  Digraph g(4, {{1, 3}, {2, 3}, {3, 4}, {4, 3}});
  auto loops = enumerate_simple_loops(g);
  REQUIRE(loops.size() == 1);
  LoopwiseDwellFleeSpec spec{{1.0}, {10.0}};
  CHECK_THROWS_AS((void)synthesize_signal(g, spec, 15, 1, Partition{2}), Error);
  try {
    (void)synthesize_signal(g, spec, 15, 1, Partition{2});
  } catch (const Error& e) {
    CHECK(e.code() == "SynthesisFailure");
  }
}
