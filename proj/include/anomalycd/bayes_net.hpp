#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "anomalycd/refine.hpp"
#include "anomalycd/timeseries.hpp"

namespace anomalycd::bn {

/// Flag columns after lag unrolling. Column `<c>_lag<s>` holds c(t - s).
struct UnrolledDataset {
  std::vector<std::string> columns;
  std::vector<std::vector<std::uint8_t>> data;  // data[column][row]
  std::size_t dropped_rows = 0;

  std::size_t rows() const noexcept { return data.empty() ? 0 : data.front().size(); }
  std::size_t index_of(const std::string& column) const;  // throws InputError
};

/// Directed graph over unrolled node names.
struct NodeGraph {
  std::vector<std::string> nodes;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (parent, child)
};

struct Unrolled {
  UnrolledDataset data;
  NodeGraph graph;
};

std::string lag_column_name(const std::string& channel, int lag);

/// Lag-0 edges keep their endpoints; a lag -s edge gets the root node
/// `<src>_lag<s>` as its parent. The first max s rows are dropped.
Unrolled unroll(const ts::FlagMatrix& flags, const refine::TemporalDag& dag);

/// P(node = 1 | parents); entry index has bit k set when parents[k] = 1.
struct Cpd {
  std::vector<std::size_t> parents;
  std::vector<double> p_one;
};

using Assignment = std::vector<std::pair<std::string, int>>;

class BayesNetModel {
 public:
  BayesNetModel() = default;
  /// Validates acyclicity, CPD sizes and that every row lies in (0, 1).
  BayesNetModel(std::vector<std::string> nodes, std::vector<Cpd> cpds, double ess);

  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<std::string>& nodes() const noexcept { return nodes_; }
  const std::vector<Cpd>& cpds() const noexcept { return cpds_; }
  double ess() const noexcept { return ess_; }
  std::size_t index_of(const std::string& node) const;  // throws InputError
  std::vector<std::size_t> children(std::size_t node) const;

  /// P(node = state | parent states taken from `states`).
  double conditional(std::size_t node, int state, const std::vector<int>& states) const;

 private:
  std::vector<std::string> nodes_;
  std::vector<Cpd> cpds_;
  double ess_ = 1.0;
};

/// BDeu smoothed tables: (N1 + ess / 2^(k+1)) / (N + ess / 2^k).
BayesNetModel fit(const UnrolledDataset& data, const NodeGraph& graph, double ess = 1.0);

struct QueryResult {
  double probability = 0.0;
  std::pair<std::string, int> target;
  Assignment evidence;
};

/// Exact posterior by variable elimination with a min-fill order.
QueryResult query_cp(const BayesNetModel& model, const std::pair<std::string, int>& target, const Assignment& evidence);

/// True when source and target are d-connected given the evidence nodes.
bool check_causal_path(const BayesNetModel& model, const std::string& source, const std::string& target,
                       const std::vector<std::string>& evidence);

}  // namespace anomalycd::bn
