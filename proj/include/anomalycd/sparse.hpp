#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "anomalycd/timeseries.hpp"

namespace anomalycd::sparse {

struct CompressionReport {
  std::size_t original_length = 0;
  std::size_t compressed_length = 0;
  std::vector<std::size_t> kept_indices;  // original row indices, strictly increasing
  std::size_t l_m = 0;

  double ratio() const noexcept {
    return original_length == 0 ? 0.0
                                : 1.0 - static_cast<double>(compressed_length) / static_cast<double>(original_length);
  }
  /// kept_indices as inclusive [first, last] ranges.
  std::vector<std::pair<std::size_t, std::size_t>> kept_ranges() const;
};

struct Compressed {
  ts::FlagMatrix flags;
  CompressionReport report;
};

/// Keeps the first min(run, l_m) samples of every maximal run of identical
/// joint state (the vector of all channel flags at one instant).
Compressed compress_sparse(const ts::FlagMatrix& flags, std::size_t l_m);

/// How the time-extended anomaly region is built from the flag differences.
enum class OnsetMode {
  Onsets,  // trailing window sum of max(dflag, 0): marks tau_max samples from each onset
  Signed,  // trailing window sum of the signed difference, as literally stated
};

/// Ordered channel pairs that may be linked, with their overlap scores.
/// A permitted pair (i -> j) admits every lag in {0, -1, ..., -tau_max}.
class PriorLinkSet {
 public:
  PriorLinkSet() = default;
  PriorLinkSet(std::size_t num_channels, int tau_max);

  /// Every i != j pair permitted; overlap scores set to 1.
  static PriorLinkSet all(std::size_t num_channels, int tau_max);

  std::size_t num_channels() const noexcept { return n_; }
  int tau_max() const noexcept { return tau_max_; }

  bool allowed(std::size_t source, std::size_t target) const { return allowed_[source * n_ + target] != 0; }
  /// lag must be <= 0.
  bool allowed(std::size_t source, std::size_t target, int lag) const {
    return lag <= 0 && -lag <= tau_max_ && allowed(source, target);
  }
  void set_allowed(std::size_t source, std::size_t target, bool value);

  /// Normalized overlap lambda^{ij}: co-occurrence count over n^i.
  double overlap_score(std::size_t i, std::size_t j) const { return scores_[i * n_ + j]; }
  void set_overlap_score(std::size_t i, std::size_t j, double v) { scores_[i * n_ + j] = v; }

  std::size_t num_allowed_pairs() const;

 private:
  std::size_t n_ = 0;
  int tau_max_ = 0;
  std::vector<unsigned char> allowed_;
  std::vector<double> scores_;
};

/// Marks each channel's anomaly onsets extended over a trailing tau_max window.
std::vector<std::vector<std::uint8_t>> time_extended_regions(const ts::FlagMatrix& flags, int tau_max,
                                                             OnsetMode mode);

/// Removes (i -> j) when the extended regions of i and j never co-occur or
/// when the co-occurrence count divided by i's extended-region size is below
/// alpha_tau. Self links are never permitted.
PriorLinkSet compute_prior_links(const ts::FlagMatrix& flags, int tau_max, double alpha_tau,
                                 OnsetMode mode = OnsetMode::Onsets);

}  // namespace anomalycd::sparse
