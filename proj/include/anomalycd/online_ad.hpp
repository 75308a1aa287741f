#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "anomalycd/timeseries.hpp"

namespace anomalycd::ad {

/// Hyperparameters of the three-detector ensemble. Defaults are the settings
/// used for one-minute sensor data.
struct DetectorConfig {
  double alpha_theta = 10.0;          // moving-SD z-score threshold
  std::size_t w_theta = 5760;         // moving-SD window (samples)
  double alpha_iota = 20.0;           // trend-drift threshold (signal units)
  double k_iota = 5.0;                // step-change scale factor
  std::optional<std::size_t> p_iota = 5760;  // decomposition period; nullopt = estimate
  double alpha_eta = 35.0;            // spectral saliency threshold
  std::size_t q_eta = 1440;           // spectral averaging kernel
  std::vector<double> change_points;  // timestamps at which detection restarts

  void validate() const;
};

/// Additive split x = trend + seasonal + residual.
struct Decomposition {
  std::vector<double> trend;
  std::vector<double> seasonal;
  std::vector<double> residual;
};

/// Score stream and thresholded flags of one detector.
struct Detection {
  std::vector<double> score;
  std::vector<std::uint8_t> flags;
};

struct DetectorScores {
  std::vector<double> lambda_theta, lambda_iota, lambda_eta;
  std::vector<std::uint8_t> flags_theta, flags_iota, flags_eta, flags_union;
};

/// Thrown by estimate_period when the differenced series has no spectral peak.
class NoPeriodError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dominant period (samples) of the first-differenced series, clamped to
/// [2, length/2]. Requires length >= 16.
std::size_t estimate_period(std::span<const double> x);

/// Classical moving-average decomposition with period p. The trend uses a
/// centered window of p samples (the 2xp form when p is even); the trend ends
/// where that window is incomplete carry the nearest interior value.
Decomposition decompose(std::span<const double> x, std::size_t period);

/// Robust sliding z-score on a residual: each window's center is its median
/// and its spread the standard deviation of values inside the window's
/// [10%, 90%] quantile band.
Detection moving_sd_detect(std::span<const double> residual, double alpha_theta, std::size_t w_theta);

/// Cumulative-sum score over contiguous runs of large trend steps.
Detection trend_drift_detect(std::span<const double> trend, double alpha_iota, double k_iota);

/// Spectral-residual saliency, normalized as (eta - mean) / mean.
Detection spectral_detect(std::span<const double> x, double alpha_eta, std::size_t q_eta);

/// Runs the full ensemble on one contiguous, finite series.
DetectorScores detect_series(std::span<const double> x, const DetectorConfig& cfg);

struct DetectionResult {
  ts::FlagMatrix flags;
  std::vector<DetectorScores> scores;  // per channel, full frame length
  std::vector<std::string> warnings;
};

/// Per channel, per segment (mask segments and change points), per run of
/// finite values: detect and union the three flag streams. A run whose
/// detection fails keeps all-zero flags and adds a warning.
DetectionResult detect(const ts::TimeFrame& frame, const DetectorConfig& cfg, unsigned threads = 1);

}  // namespace anomalycd::ad
