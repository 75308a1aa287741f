#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "anomalycd/ci_test.hpp"
#include "anomalycd/sparse.hpp"
#include "anomalycd/timeseries.hpp"

namespace anomalycd::skeleton {

/// source(t + lag) -> target(t), lag <= 0.
struct LaggedLink {
  std::size_t source = 0;
  std::size_t target = 0;
  int lag = 0;
  double weight = 0.0;  // MCI partial correlation
  double p_value = 1.0;

  bool operator==(const LaggedLink&) const = default;
};

struct SkeletonGraph {
  std::vector<std::string> nodes;
  std::vector<LaggedLink> links;  // ordered by (target, source, |lag|)
};

enum class MciMode {
  Full,        // condition on parents(target) and the lag-shifted parents(source)
  TargetOnly,  // condition on parents(target) only
};

struct SkeletonOptions {
  int tau_max = 5;
  double alpha = 0.05;            // MCI significance
  double alpha_pc = -1.0;         // parent-selection significance; < 0 means "same as alpha"
  std::size_t max_conds = 3;      // cap on the parent-selection conditioning set
  MciMode mci_mode = MciMode::Full;
  bool positive_only = true;      // reject rho <= 0 (anomaly-aware test)
  unsigned threads = 1;

  double parent_alpha() const noexcept { return alpha_pc < 0.0 ? alpha : alpha_pc; }
};

struct ParentCandidate {
  std::size_t channel = 0;
  int lag = 0;            // in [-tau_max, -1]
  double strength = 0.0;  // smallest test statistic seen while it survived
  double p_value = 0.0;   // largest p-value seen while it survived
};

/// Flag channels as 0/1 doubles with lagged views.
class LaggedData {
 public:
  explicit LaggedData(const ts::FlagMatrix& flags);

  std::size_t length() const noexcept { return length_; }
  std::size_t num_channels() const noexcept { return data_.size(); }

  /// Values channel(t + lag) for t in [start, length). Requires start + lag >= 0.
  std::span<const double> view(std::size_t channel, int lag, std::size_t start) const;

 private:
  std::vector<std::vector<double>> data_;
  std::size_t length_ = 0;
};

/// Iterative lagged-parent selection for one target channel. Candidates are
/// the prior-permitted (channel, lag) pairs with lag in [-tau_max, -1] and
/// channel != target; a candidate is dropped when its test against the target,
/// given the q strongest other candidates, is non-significant or (with
/// positive_only) non-positive, for q = 0, 1, ... up to max_conds.
std::vector<ParentCandidate> select_parents(const ts::FlagMatrix& flags, std::size_t target,
                                            const SkeletonOptions& options, const sparse::PriorLinkSet& priors);
std::vector<ParentCandidate> select_parents(const LaggedData& data, std::size_t target,
                                            const SkeletonOptions& options, const sparse::PriorLinkSet& priors);

/// Parent selection for every channel, then one momentary conditional
/// independence test per surviving lagged candidate and per permitted
/// contemporaneous pair (tested in both orientations).
SkeletonGraph learn_skeleton(const ts::FlagMatrix& flags, const SkeletonOptions& options,
                             const sparse::PriorLinkSet& priors);

}  // namespace anomalycd::skeleton
