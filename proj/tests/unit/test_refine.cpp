#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "anomalycd/error.hpp"
#include "anomalycd/refine.hpp"
#include "oracles/gen.hpp"
#include "oracles/graphs.hpp"

using namespace anomalycd;
using refine::LaggedLink;
using Rows = std::vector<std::vector<std::uint8_t>>;

namespace {

ts::FlagMatrix quiet(std::size_t channels, std::size_t n = 50) {
  return oracle::make_flags(Rows(channels, std::vector<std::uint8_t>(n, 0)));
}

// Onset-precedence table and Pearson statistic from expected counts.
double hand_chi_square(const ts::FlagMatrix& f, std::size_t s, std::size_t t, int tau) {
  double obs[2][2] = {};
  for (std::size_t k = static_cast<std::size_t>(tau); k < f.length(); ++k) {
    bool onset = false;
    for (std::size_t u = k - static_cast<std::size_t>(tau); u < k; ++u)
      onset = onset || (f.at(s, u) == 1 && (u == 0 || f.at(s, u - 1) == 0));
    obs[onset][f.at(t, k)] += 1;
  }
  const double n = obs[0][0] + obs[0][1] + obs[1][0] + obs[1][1];
  double stat = 0;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      const double e = (obs[r][0] + obs[r][1]) * (obs[0][c] + obs[1][c]) / n;
      stat += (obs[r][c] - e) * (obs[r][c] - e) / e;
    }
  return stat;
}

// A fires in short episodes; B repeats A one sample later.
ts::FlagMatrix leader_follower(std::uint64_t seed, std::size_t n) {
  oracle::Rng rng(seed);
  Rows f(2, std::vector<std::uint8_t>(n, 0));
  for (std::size_t t = 0; t + 3 < n; ++t) {
    if (rng.chance(0.02)) f[0][t] = f[0][t + 1] = 1;
  }
  for (std::size_t t = 1; t < n; ++t) f[1][t] = f[0][t - 1];
  return oracle::make_flags(std::move(f));
}

bool has_link(const std::vector<LaggedLink>& v, std::size_t s, std::size_t t) {
  return std::any_of(v.begin(), v.end(), [&](const LaggedLink& e) { return e.source == s && e.target == t; });
}

skeleton::SkeletonGraph as_skeleton(const refine::TemporalDag& d) { return {d.nodes, d.edges}; }

}  // namespace

TEST_SUITE("refine") {

TEST_CASE("group max keeps the strongest lag") {
  const auto g = refine::group_max({{0, 1, -1, 0.8, 0.01}, {0, 1, -3, 0.5, 0.01}});
  REQUIRE(g.size() == 1);
  CHECK(g[0].lag == -1);
}

TEST_CASE("group max weight tie goes to the earliest lag") {
  const auto g = refine::group_max({{0, 1, -1, 0.5, 0.01}, {0, 1, -3, 0.5, 0.01}});
  REQUIRE(g.size() == 1);
  CHECK(g[0].lag == -3);
}

TEST_CASE("group max leaves a single edge alone") {
  const LaggedLink e{2, 0, -2, 0.3, 0.02};
  CHECK(refine::group_max({e}) == std::vector<LaggedLink>{e});
}

TEST_CASE("two-way pair settled by weight") {
  const auto r = refine::resolve_bidirected({{0, 1, -1, 0.6, 0.01}, {1, 0, -1, 0.4, 0.01}}, quiet(2), {});
  REQUIRE(r.kept.size() == 1);
  CHECK(r.kept[0].source == 0);
  CHECK(r.undirected.empty());
}

TEST_CASE("two-way pair settled by lag") {
  const auto r = refine::resolve_bidirected({{0, 1, 0, 0.5, 0.01}, {1, 0, -2, 0.5, 0.01}}, quiet(2), {});
  REQUIRE(r.kept.size() == 1);
  CHECK(r.kept[0].source == 1);
  CHECK(r.kept[0].lag == -2);
}

TEST_CASE("contemporaneous tie directed by onset precedence") {
  const auto f = leader_follower(17, 3000);
  const auto ab = refine::onset_chi_square(f, 0, 1, 5);
  const auto ba = refine::onset_chi_square(f, 1, 0, 5);
  CHECK(ab.statistic == doctest::Approx(hand_chi_square(f, 0, 1, 5)).epsilon(1e-9));
  CHECK(ba.statistic == doctest::Approx(hand_chi_square(f, 1, 0, 5)).epsilon(1e-9));
  CHECK(ab.significant(0.05));
  CHECK(ab.statistic > ba.statistic);

  const std::vector<LaggedLink> pair{{0, 1, 0, 0.7, 0.001}, {1, 0, 0, 0.7, 0.001}};
  refine::RefineOptions o;
  o.direct_t0 = true;
  const auto r = refine::resolve_bidirected(pair, f, o);
  REQUIRE(r.kept.size() == 1);
  CHECK(r.kept[0].source == 0);
  CHECK(r.undirected.empty());

  o.direct_t0 = false;
  const auto u = refine::resolve_bidirected(pair, f, o);
  CHECK(u.kept.empty());
  CHECK(u.undirected.size() == 1);
}

TEST_CASE("ungrouped input is rejected") {
  CHECK_THROWS_AS(refine::resolve_bidirected({{0, 1, -1, 0.5, 0}, {0, 1, -2, 0.4, 0}}, quiet(2), {}), InputError);
}

TEST_CASE("acyclic input passes through") {
  const std::vector<LaggedLink> e{{0, 1, -1, 0.5, 0.01}, {1, 2, 0, 0.4, 0.01}, {0, 2, -2, 0.3, 0.01}};
  const auto d = refine::enforce_dag({"A", "B", "C"}, e);
  CHECK(d.edges.size() == 3);
  for (const auto& x : e) CHECK(std::find(d.edges.begin(), d.edges.end(), x) != d.edges.end());
}

TEST_CASE("three-cycle loses its weakest edge") {
  const auto d = refine::enforce_dag({"A", "B", "C"},
                                     {{0, 1, -1, 0.9, 0.01}, {1, 2, -1, 0.8, 0.01}, {2, 0, -1, 0.2, 0.01}});
  CHECK(d.edges.size() == 2);
  CHECK_FALSE(has_link(d.edges, 2, 0));
}

TEST_CASE("one removal breaks two overlapping cycles") {
  // A->B->C->A and B->C->D->B share the weak edge B->C.
  const std::vector<LaggedLink> e{{0, 1, -1, 0.9, 0}, {1, 2, -1, 0.1, 0}, {2, 0, -1, 0.8, 0},
                                  {2, 3, -1, 0.7, 0}, {3, 1, -1, 0.6, 0}};
  const auto cycles = oracle::simple_cycles(oracle::summary_adjacency(4, e));
  REQUIRE(cycles.size() == 2);
  for (const auto& c : cycles) {
    bool uses = false;
    for (std::size_t k = 0; k < c.size(); ++k) uses = uses || (c[k] == 1 && c[(k + 1) % c.size()] == 2);
    CHECK(uses);
  }
  const auto d = refine::enforce_dag({"A", "B", "C", "D"}, e);
  CHECK(d.edges.size() == 4);
  CHECK_FALSE(has_link(d.edges, 1, 2));
  CHECK(oracle::dag_violation(d).empty());
}

TEST_CASE("already a dag with unique lags is unchanged") {
  skeleton::SkeletonGraph s{{"A", "B", "C"}, {{0, 1, -1, 0.5, 0.01}, {1, 2, -2, 0.4, 0.01}}};
  const auto r = refine::prune(s, quiet(3), {});
  CHECK(r.dag.edges.size() == 2);
  CHECK(has_link(r.dag.edges, 0, 1));
  CHECK(has_link(r.dag.edges, 1, 2));
  CHECK(r.undirected.empty());
}

TEST_CASE("tied pair is oriented and reported undirected") {
  skeleton::SkeletonGraph s{{"B", "A"}, {{0, 1, 0, 0.5, 0.01}, {1, 0, 0, 0.5, 0.01}}};
  refine::RefineOptions o;
  o.t0_orient = refine::T0Orient::Lex;
  const auto r = refine::prune(s, quiet(2), o);
  REQUIRE(r.dag.edges.size() == 1);
  CHECK(r.dag.edges[0].source == 1);  // "A" < "B"
  CHECK(r.undirected.size() == 1);
}

TEST_CASE("validate names the violated invariant") {
  refine::TemporalDag d{{"A", "B"}, {{0, 1, -1, 0.5, 0}, {1, 0, -1, 0.5, 0}}};
  CHECK_THROWS_AS(d.validate(), InvariantError);
  d.edges = {{0, 0, -1, 0.5, 0}};
  CHECK_THROWS_AS(d.validate(), InvariantError);
  d.edges = {{0, 1, -1, 0.5, 0}, {0, 1, -2, 0.5, 0}};
  CHECK_THROWS_AS(d.validate(), InvariantError);
}

TEST_CASE("prune on random skeletons keeps the invariants") {
  oracle::Rng rng(99);
  for (int rep = 0; rep < 100; ++rep) {
    const auto n = static_cast<std::size_t>(rng.integer(2, 7));
    const auto s = oracle::random_skeleton(rng, n, 4);
    const auto flags = oracle::random_flags(rng, n, 300, 0.1);
    refine::RefineOptions o;
    o.tau_max = 4;
    o.direct_t0 = rng.chance(0.5);
    const auto r = refine::prune(s, flags, o);
    CHECK(oracle::dag_violation(r.dag).empty());

    for (const auto& e : r.dag.edges) {
      const bool from_input = std::any_of(s.links.begin(), s.links.end(), [&](const LaggedLink& l) {
        return l.source == e.source && l.target == e.target && l.lag == e.lag && std::abs(l.weight - e.weight) <= 1e-9;
      });
      CHECK(from_input);
    }
    CHECK(r.dag.edges.size() <= s.links.size());

    const auto again = refine::prune(as_skeleton(r.dag), flags, o);
    CHECK(again.dag.edges == r.dag.edges);
  }
}

}  // TEST_SUITE
