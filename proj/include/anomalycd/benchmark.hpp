#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "anomalycd/metrics.hpp"
#include "anomalycd/refine.hpp"
#include "anomalycd/skeleton.hpp"
#include "anomalycd/sparse.hpp"

namespace anomalycd::eval {

struct BenchOptions {
  std::vector<std::size_t> l_m_grid{10, 15, 20, 25, 30};
  skeleton::SkeletonOptions skeleton;
  refine::RefineOptions refine;
  bool use_priors = true;
  double alpha_tau = 0.01;
  sparse::OnsetMode onset_mode = sparse::OnsetMode::Onsets;
  std::size_t repeats = 1;  // reported time is the fastest repeat
};

struct BenchRow {
  std::size_t l_m = 0;
  std::size_t original_length = 0;
  std::size_t compressed_length = 0;
  double skeleton_seconds = 0.0;
  std::size_t skeleton_links = 0;
  std::optional<MetricsReport> metrics;
};

/// Fastest of `repeats` skeleton runs, in seconds; the last graph goes to `out` when given.
double time_skeleton(const ts::FlagMatrix& flags, const skeleton::SkeletonOptions& options,
                     const sparse::PriorLinkSet& priors, std::size_t repeats = 1,
                     skeleton::SkeletonGraph* out = nullptr);

/// compress -> discover (timed) -> prune -> evaluate, per l_m. Priors come from the raw flags.
std::vector<BenchRow> benchmark(const ts::FlagMatrix& flags, const BenchOptions& options,
                                const SummaryGraph* reference = nullptr);

}  // namespace anomalycd::eval
