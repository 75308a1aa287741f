#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "anomalycd/refine.hpp"

namespace anomalycd::eval {

/// Lag-free directed graph; weight[i][j] > 0 marks the edge i -> j.
struct SummaryGraph {
  std::vector<std::string> nodes;
  std::vector<std::vector<double>> weight;

  explicit SummaryGraph(std::vector<std::string> nodes = {});
  std::size_t size() const noexcept { return nodes.size(); }
  bool edge(std::size_t i, std::size_t j) const { return weight[i][j] > 0.0; }
  std::size_t num_edges() const;
  void add_edge(std::size_t i, std::size_t j, double w);  // keeps the larger |w|
};

/// Drops lags and merges duplicates. Undirected pairs become two-way edges.
SummaryGraph summarize(const std::vector<std::string>& nodes, const std::vector<skeleton::LaggedLink>& edges,
                       const std::vector<skeleton::LaggedLink>& undirected = {});
SummaryGraph summarize(const refine::RefineResult& result, bool directed_only = false);

/// Re-indexes both graphs onto the union of their node names, reference order first.
std::pair<SummaryGraph, SummaryGraph> align(const SummaryGraph& estimated, const SummaryGraph& reference);

struct GraphDiff {
  std::size_t tp = 0;  // ordered pairs present in both
  std::size_t fp = 0;  // ordered pairs only in the estimate
  std::size_t fn = 0;  // ordered pairs only in the reference
  std::size_t tn = 0;  // unordered pairs absent from both
  std::size_t rv = 0;  // one-way reference pairs estimated one-way in the other direction
  std::size_t ue = 0;  // unordered pairs adjacent only in the estimate
  std::size_t um = 0;  // unordered pairs adjacent only in the reference
};

struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double fpr = 0.0;  // (RV + UE) / (TN + UE); exceeds 1 when reversals are many
  double aprc = 0.0;
  std::size_t shd = 0;
  std::size_t shdu = 0;
  GraphDiff diff;
};

/// Both graphs must share node order (see align).
GraphDiff compare(const SummaryGraph& estimated, const SummaryGraph& reference);
std::size_t shd(const SummaryGraph& estimated, const SummaryGraph& reference);
std::size_t shdu(const SummaryGraph& estimated, const SummaryGraph& reference);

/// Area under the precision-recall curve obtained by thresholding |weight|
/// over all ordered node pairs, trapezoidal from the (recall 0, precision 1) anchor.
double aprc(const SummaryGraph& estimated, const SummaryGraph& reference);

/// Aligns, then computes every metric.
MetricsReport evaluate(const SummaryGraph& estimated, const SummaryGraph& reference);

}  // namespace anomalycd::eval
