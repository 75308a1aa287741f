#include "anomalycd/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

#include "anomalycd/error.hpp"

namespace anomalycd::eval {

double time_skeleton(const ts::FlagMatrix& flags, const skeleton::SkeletonOptions& options,
                     const sparse::PriorLinkSet& priors, std::size_t repeats, skeleton::SkeletonGraph* out) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(repeats, 1); ++r) {
    const auto start = std::chrono::steady_clock::now();
    auto g = skeleton::learn_skeleton(flags, options, priors);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    best = std::min(best, elapsed.count());
    if (out) *out = std::move(g);
  }
  return best;
}

std::vector<BenchRow> benchmark(const ts::FlagMatrix& flags, const BenchOptions& options, const SummaryGraph* reference) {
  if (options.l_m_grid.empty()) throw InputError("bench: empty l_m grid");
  const auto priors = options.use_priors
                          ? sparse::compute_prior_links(flags, options.skeleton.tau_max, options.alpha_tau, options.onset_mode)
                          : sparse::PriorLinkSet::all(flags.num_channels(), options.skeleton.tau_max);
  std::vector<BenchRow> rows;
  for (auto l_m : options.l_m_grid) {
    const auto compressed = sparse::compress_sparse(flags, l_m);
    BenchRow row;
    row.l_m = l_m;
    row.original_length = compressed.report.original_length;
    row.compressed_length = compressed.report.compressed_length;
    skeleton::SkeletonGraph g;
    row.skeleton_seconds = time_skeleton(compressed.flags, options.skeleton, priors, options.repeats, &g);
    row.skeleton_links = g.links.size();
    if (reference) {
      const auto refined = refine::prune(g, compressed.flags, options.refine);
      row.metrics = evaluate(summarize(refined), *reference);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace anomalycd::eval
