#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "anomalycd/skeleton.hpp"
#include "anomalycd/timeseries.hpp"

namespace anomalycd::refine {

using skeleton::LaggedLink;

/// At most one edge per ordered pair, no two-way pairs, acyclic once lags are dropped.
struct TemporalDag {
  std::vector<std::string> nodes;
  std::vector<LaggedLink> edges;  // ordered by (target, source)

  /// Throws InvariantError naming the first violated invariant.
  void validate() const;
};

enum class T0Orient { Chi2, Lex };

struct RefineOptions {
  bool direct_t0 = false;  // chi-square directing of tied contemporaneous pairs
  T0Orient t0_orient = T0Orient::Chi2;
  int tau_max = 5;        // onset window of the contingency table
  double chi2_alpha = 0.05;
};

struct ChiSquare {
  double statistic = 0.0;
  double p_value = 1.0;
  bool positive = false;  // onsets and target flags co-occur more than expected

  bool significant(double alpha) const noexcept { return positive && p_value <= alpha; }
};

/// 2x2 table of [source onset in t-tau..t-1] x [target flag at t], t in [tau, T).
ChiSquare onset_chi_square(const ts::FlagMatrix& flags, std::size_t source, std::size_t target, int tau);

struct Resolution {
  std::vector<LaggedLink> kept;
  std::vector<LaggedLink> undirected;  // unresolved pairs, one entry each, source < target
};

struct RefineResult {
  TemporalDag dag;
  /// Tied pairs reported as undirected; filled only when direct_t0 is off.
  /// Each also appears in dag, oriented by the fallback rules.
  std::vector<LaggedLink> undirected;
};

/// Keeps the strongest lag per ordered pair; weight ties go to the most negative lag.
std::vector<LaggedLink> group_max(const std::vector<LaggedLink>& edges);

/// Settles every two-way pair by weight, then lag, then (with direct_t0) the
/// onset chi-square test. Pairs left tied go to the undirected bucket.
Resolution resolve_bidirected(const std::vector<LaggedLink>& edges, const ts::FlagMatrix& flags,
                              const RefineOptions& options);

/// Removes the weakest edge of some directed cycle until none is left.
TemporalDag enforce_dag(std::vector<std::string> nodes, std::vector<LaggedLink> edges);

RefineResult prune(const skeleton::SkeletonGraph& skeleton, const ts::FlagMatrix& flags,
                   const RefineOptions& options = {});

/// True when the summary of `edges` (lags dropped) over n nodes has a directed cycle.
bool has_cycle(std::size_t n, const std::vector<LaggedLink>& edges);

}  // namespace anomalycd::refine
