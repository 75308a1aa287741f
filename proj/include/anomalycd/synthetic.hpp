#pragma once

#include <cstddef>
#include <cstdint>

#include "anomalycd/refine.hpp"
#include "anomalycd/timeseries.hpp"

namespace anomalycd::eval {

struct SyntheticSpec {
  std::size_t n_nodes = 5;
  int max_lag = 3;
  double edge_probability = 0.3;
  double propagation_probability = 0.9;
  double base_rate = 0.01;
  std::size_t n_samples = 5000;
  std::uint64_t seed = 0;
  double lag0_probability = 0.0;  // share of sampled edges placed at lag 0

  void validate() const;  // throws InputError
};

struct SyntheticData {
  ts::FlagMatrix flags;
  refine::TemporalDag truth;  // edge weight = propagation probability
};

/// Impulse events on a random DAG. Nodes are X0, X1, ...; the topological
/// order is a seeded permutation. A node fires at t with base_rate, or with
/// propagation_probability when any parent fired at t + lag.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace anomalycd::eval
