#include "anomalycd/online_ad.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numeric>

#include "anomalycd/error.hpp"
#include "anomalycd/parallel.hpp"

namespace anomalycd::ad {

namespace {

// FFTW planning touches global state.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class ComplexBuffer {
 public:
  explicit ComplexBuffer(std::size_t n) : n_(n), data_(fftw_alloc_complex(n)) {
    if (!data_) throw std::bad_alloc();
  }
  ~ComplexBuffer() { fftw_free(data_); }
  ComplexBuffer(const ComplexBuffer&) = delete;
  ComplexBuffer& operator=(const ComplexBuffer&) = delete;

  fftw_complex* data() noexcept { return data_; }
  std::complex<double> operator[](std::size_t i) const { return {data_[i][0], data_[i][1]}; }
  void set(std::size_t i, std::complex<double> v) {
    data_[i][0] = v.real();
    data_[i][1] = v.imag();
  }
  std::size_t size() const noexcept { return n_; }

 private:
  std::size_t n_;
  fftw_complex* data_;
};

// In-place complex DFT; sign = FFTW_FORWARD or FFTW_BACKWARD (unnormalized).
void dft_inplace(ComplexBuffer& buf, int sign) {
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(buf.size()), buf.data(), buf.data(), sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

// Sliding multiset of doubles supporting order statistics and sums over a
// value range, backed by Fenwick trees over the compressed value domain.
class WindowStats {
 public:
  explicit WindowStats(std::span<const double> all_values) {
    coords_.assign(all_values.begin(), all_values.end());
    std::sort(coords_.begin(), coords_.end());
    coords_.erase(std::unique(coords_.begin(), coords_.end()), coords_.end());
    shift_ = coords_.empty() ? 0.0 : coords_[coords_.size() / 2];
    count_.assign(coords_.size() + 1, 0);
    sum_.assign(coords_.size() + 1, 0.0);
    sumsq_.assign(coords_.size() + 1, 0.0);
    log_ = 1;
    while ((log_ << 1) <= coords_.size()) log_ <<= 1;
  }

  void insert(double v) { update(v, +1); }
  void erase(double v) { update(v, -1); }
  long size() const noexcept { return size_; }

  // Linear-interpolated quantile (numpy default) of the current window.
  double quantile(double q) const {
    const double pos = q * static_cast<double>(size_ - 1);
    const auto lo = static_cast<long>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    const double v_lo = kth(lo);
    if (frac == 0.0) return v_lo;
    return v_lo + frac * (kth(lo + 1) - v_lo);
  }

  // Sample standard deviation of window values inside [lo, hi].
  double band_sd(double lo, double hi) const {
    const std::size_t a = static_cast<std::size_t>(std::lower_bound(coords_.begin(), coords_.end(), lo) - coords_.begin());
    const std::size_t b = static_cast<std::size_t>(std::upper_bound(coords_.begin(), coords_.end(), hi) - coords_.begin());
    if (b <= a) return 0.0;
    const long n = prefix(count_, b) - prefix(count_, a);
    if (n < 2) return 0.0;
    const double s = prefix(sum_, b) - prefix(sum_, a);
    const double ss = prefix(sumsq_, b) - prefix(sumsq_, a);
    const double var = (ss - s * s / static_cast<double>(n)) / static_cast<double>(n - 1);
    return var > 0.0 ? std::sqrt(var) : 0.0;
  }

 private:
  void update(double v, int delta) {
    const std::size_t idx = static_cast<std::size_t>(std::lower_bound(coords_.begin(), coords_.end(), v) - coords_.begin());
    const double c = v - shift_;
    for (std::size_t i = idx + 1; i <= coords_.size(); i += i & (~i + 1)) {
      count_[i] += delta;
      sum_[i] += delta * c;
      sumsq_[i] += delta * c * c;
    }
    size_ += delta;
  }

  template <typename T>
  static T prefix(const std::vector<T>& tree, std::size_t n) {
    T acc{};
    for (std::size_t i = n; i > 0; i -= i & (~i + 1)) acc += tree[i];
    return acc;
  }

  // k-th smallest (0-based) value in the window.
  double kth(long k) const {
    std::size_t pos = 0;
    long remaining = k + 1;
    for (std::size_t step = log_; step > 0; step >>= 1) {
      if (pos + step <= coords_.size() && count_[pos + step] < remaining) {
        pos += step;
        remaining -= count_[pos];
      }
    }
    return coords_[pos];
  }

  std::vector<double> coords_;
  std::vector<long> count_;
  std::vector<double> sum_, sumsq_;
  double shift_ = 0.0;
  std::size_t log_ = 1;
  long size_ = 0;
};

std::vector<std::uint8_t> threshold(const std::vector<double>& score, double alpha) {
  std::vector<std::uint8_t> flags(score.size());
  for (std::size_t i = 0; i < score.size(); ++i) flags[i] = score[i] > alpha ? 1 : 0;
  return flags;
}

}  // namespace

void DetectorConfig::validate() const {
  if (w_theta < 2 || q_eta < 2 || (p_iota && *p_iota < 2)) {
    throw InputError("detector config: window and kernel lengths must be >= 2");
  }
  if (!(alpha_theta > 0.0) || !(alpha_iota > 0.0) || !(alpha_eta > 0.0) || !(k_iota > 0.0)) {
    throw InputError("detector config: thresholds must be > 0");
  }
}

std::size_t estimate_period(std::span<const double> x) {
  if (x.size() < 16) throw std::invalid_argument("estimate_period: need at least 16 samples");
  const std::size_t m = x.size() - 1;
  ComplexBuffer buf(m);
  double max_abs = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double d = x[i + 1] - x[i];
    buf.set(i, {d, 0.0});
    max_abs = std::max(max_abs, std::abs(d));
  }
  if (max_abs == 0.0) throw NoPeriodError("estimate_period: constant series");
  dft_inplace(buf, FFTW_FORWARD);

  std::size_t best = 0;
  double best_mag = 0.0;
  for (std::size_t k = 1; k <= m / 2; ++k) {
    const double mag = std::abs(buf[k]);
    if (mag > best_mag) {
      best_mag = mag;
      best = k;
    }
  }
  if (best == 0 || best_mag <= 1e-12 * max_abs * static_cast<double>(m)) {
    throw NoPeriodError("estimate_period: no dominant frequency");
  }
  const auto period = static_cast<std::size_t>(std::llround(static_cast<double>(m) / static_cast<double>(best)));
  return std::clamp<std::size_t>(period, 2, x.size() / 2);
}

Decomposition decompose(std::span<const double> x, std::size_t period) {
  const std::size_t n = x.size();
  if (period < 2) throw std::invalid_argument("decompose: period must be >= 2");
  if (n < 2 * period) throw std::invalid_argument("decompose: series shorter than two periods");

  // Work relative to x[0] so constant inputs decompose exactly.
  const double offset = x[0];
  std::vector<long double> prefix(n + 1, 0.0L);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + static_cast<long double>(x[i] - offset);

  const std::size_t half = period / 2;
  const bool even = period % 2 == 0;
  const std::size_t first = half;
  const std::size_t last = n - half - 1;  // inclusive
  std::vector<double> trend(n);
  for (std::size_t t = first; t <= last; ++t) {
    long double s;
    if (even) {
      // 2xp centered filter: half weight on both extreme samples.
      s = prefix[t + half] - prefix[t - half + 1];
      s += 0.5L * static_cast<long double>((x[t - half] - offset) + (x[t + half] - offset));
    } else {
      s = prefix[t + half + 1] - prefix[t - half];
    }
    trend[t] = static_cast<double>(s / static_cast<long double>(period));
  }
  for (std::size_t t = 0; t < first; ++t) trend[t] = trend[first];
  for (std::size_t t = last + 1; t < n; ++t) trend[t] = trend[last];

  std::vector<double> phase_sum(period, 0.0);
  std::vector<std::size_t> phase_count(period, 0);
  for (std::size_t t = first; t <= last; ++t) {
    phase_sum[t % period] += (x[t] - offset) - trend[t];
    ++phase_count[t % period];
  }
  std::vector<double> phase_mean(period);
  double grand = 0.0;
  for (std::size_t k = 0; k < period; ++k) {
    phase_mean[k] = phase_sum[k] / static_cast<double>(phase_count[k]);
    grand += phase_mean[k];
  }
  grand /= static_cast<double>(period);

  Decomposition out;
  out.trend.resize(n);
  out.seasonal.resize(n);
  out.residual.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    out.trend[t] = trend[t] + offset;
    out.seasonal[t] = phase_mean[t % period] - grand;
    out.residual[t] = x[t] - out.trend[t] - out.seasonal[t];
  }
  return out;
}

Detection moving_sd_detect(std::span<const double> residual, double alpha_theta, std::size_t w_theta) {
  if (w_theta < 8) throw std::invalid_argument("moving_sd_detect: window must be >= 8");
  const std::size_t n = residual.size();
  Detection out;
  out.score.assign(n, 0.0);
  if (n == 0) {
    out.flags = {};
    return out;
  }
  const std::size_t w = std::min(w_theta, n);
  WindowStats win(residual);

  auto score_at = [&](std::size_t t) {
    const double median = win.quantile(0.5);
    const double sd = win.band_sd(win.quantile(0.1), win.quantile(0.9));
    return sd > 0.0 ? std::abs(residual[t] - median) / sd : 0.0;
  };

  for (std::size_t t = 0; t < w; ++t) win.insert(residual[t]);
  // The first full window scores all of its own samples.
  {
    const double median = win.quantile(0.5);
    const double sd = win.band_sd(win.quantile(0.1), win.quantile(0.9));
    for (std::size_t t = 0; t < w; ++t) out.score[t] = sd > 0.0 ? std::abs(residual[t] - median) / sd : 0.0;
  }
  for (std::size_t t = w; t < n; ++t) {
    win.erase(residual[t - w]);
    win.insert(residual[t]);
    out.score[t] = score_at(t);
  }
  out.flags = threshold(out.score, alpha_theta);
  return out;
}

Detection trend_drift_detect(std::span<const double> trend, double alpha_iota, double k_iota) {
  const std::size_t n = trend.size();
  if (n < 3) throw std::invalid_argument("trend_drift_detect: need at least 3 samples");
  Detection out;
  out.score.assign(n, 0.0);

  std::vector<double> d(n, 0.0);  // d[t] = trend[t] - trend[t-1], d[0] unused
  std::vector<double> mags;
  mags.reserve(n - 1);
  for (std::size_t t = 1; t < n; ++t) {
    d[t] = trend[t] - trend[t - 1];
    mags.push_back(std::abs(d[t]));
  }
  if (*std::max_element(mags.begin(), mags.end()) == 0.0) {
    out.flags.assign(n, 0);
    return out;
  }
  auto mid = mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2);
  std::nth_element(mags.begin(), mid, mags.end());
  double median = *mid;
  if (mags.size() % 2 == 0) {
    const double lower = *std::max_element(mags.begin(), mid);
    median = 0.5 * (median + lower);
  }
  constexpr double kMedianFloor = 1e-12;
  if (median == 0.0) median = kMedianFloor;

  const double limit = k_iota * median;
  double running = 0.0;
  bool in_region = false;
  for (std::size_t t = 1; t < n; ++t) {
    if (std::abs(d[t]) > limit) {
      running = in_region ? running + d[t] : d[t];
      in_region = true;
      out.score[t] = running;
    } else {
      in_region = false;
    }
  }
  out.flags.resize(n);
  for (std::size_t t = 0; t < n; ++t) out.flags[t] = std::abs(out.score[t]) > alpha_iota ? 1 : 0;
  return out;
}

Detection spectral_detect(std::span<const double> x, double alpha_eta, std::size_t q_eta) {
  const std::size_t n = x.size();
  if (q_eta < 1) throw std::invalid_argument("spectral_detect: kernel must be >= 1");
  if (n < q_eta) throw std::invalid_argument("spectral_detect: series shorter than kernel");
  Detection out;
  out.score.assign(n, 0.0);

  ComplexBuffer buf(n);
  for (std::size_t i = 0; i < n; ++i) buf.set(i, {x[i], 0.0});
  dft_inplace(buf, FFTW_FORWARD);

  std::vector<double> amp(n), phase(n), log_amp(n);
  double max_amp = 0.0;
  for (std::size_t f = 0; f < n; ++f) {
    amp[f] = std::abs(buf[f]);
    phase[f] = std::arg(buf[f]);
    max_amp = std::max(max_amp, amp[f]);
  }
  if (max_amp == 0.0) {
    out.flags.assign(n, 0);
    return out;
  }
  // Amplitudes at or below the floor are numerically empty bins.
  const double floor = 1e-12 * max_amp;
  for (std::size_t f = 0; f < n; ++f) log_amp[f] = std::log(std::max(amp[f], floor));

  // Centered moving average with edge replication.
  const auto half = static_cast<std::ptrdiff_t>(q_eta / 2);
  const auto len = static_cast<std::ptrdiff_t>(n);
  std::vector<double> padded_prefix(n + q_eta + 1, 0.0);
  for (std::ptrdiff_t i = 0; i < len + static_cast<std::ptrdiff_t>(q_eta); ++i) {
    const std::ptrdiff_t src = std::clamp<std::ptrdiff_t>(i - half, 0, len - 1);
    padded_prefix[static_cast<std::size_t>(i) + 1] = padded_prefix[static_cast<std::size_t>(i)] + log_amp[static_cast<std::size_t>(src)];
  }
  for (std::size_t f = 0; f < n; ++f) {
    const double avg = (padded_prefix[f + q_eta] - padded_prefix[f]) / static_cast<double>(q_eta);
    const double residual = log_amp[f] - avg;
    buf.set(f, amp[f] > floor ? std::polar(std::exp(residual), phase[f]) : std::complex<double>{});
  }
  dft_inplace(buf, FFTW_BACKWARD);

  std::vector<double> eta(n);
  double mean = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    eta[t] = std::abs(buf[t]) / static_cast<double>(n);
    mean += eta[t];
  }
  mean /= static_cast<double>(n);
  if (mean > 0.0) {
    for (std::size_t t = 0; t < n; ++t) out.score[t] = (eta[t] - mean) / mean;
  }
  out.flags = threshold(out.score, alpha_eta);
  return out;
}

DetectorScores detect_series(std::span<const double> x, const DetectorConfig& cfg) {
  std::size_t period;
  if (cfg.p_iota) {
    period = *cfg.p_iota;
  } else {
    try {
      period = estimate_period(x);
    } catch (const NoPeriodError&) {
      period = cfg.w_theta;
    }
  }
  const Decomposition dec = decompose(x, period);
  Detection theta = moving_sd_detect(dec.residual, cfg.alpha_theta, cfg.w_theta);
  Detection iota = trend_drift_detect(dec.trend, cfg.alpha_iota, cfg.k_iota);
  Detection eta = spectral_detect(x, cfg.alpha_eta, cfg.q_eta);

  DetectorScores s;
  s.flags_union.resize(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) s.flags_union[t] = theta.flags[t] | iota.flags[t] | eta.flags[t];
  s.lambda_theta = std::move(theta.score);
  s.flags_theta = std::move(theta.flags);
  s.lambda_iota = std::move(iota.score);
  s.flags_iota = std::move(iota.flags);
  s.lambda_eta = std::move(eta.score);
  s.flags_eta = std::move(eta.flags);
  return s;
}

DetectionResult detect(const ts::TimeFrame& frame, const DetectorConfig& cfg, unsigned threads) {
  cfg.validate();
  frame.validate();
  const std::size_t rows = frame.rows();
  if (rows == 0) throw InputError("detect: empty frame");

  // Segment boundaries: mask segments plus user change points.
  std::vector<std::size_t> starts;
  for (auto [b, e] : frame.segments()) starts.push_back(b);
  for (double cp : cfg.change_points) {
    auto it = std::lower_bound(frame.timestamps.begin(), frame.timestamps.end(), cp);
    if (it != frame.timestamps.end()) starts.push_back(static_cast<std::size_t>(it - frame.timestamps.begin()));
  }
  std::sort(starts.begin(), starts.end());
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());

  const std::size_t nc = frame.num_channels();
  std::vector<DetectorScores> scores(nc);
  std::vector<std::vector<std::string>> warnings(nc);

  parallel_for(nc, threads, [&](std::size_t c) {
    DetectorScores& s = scores[c];
    for (auto* v : {&s.lambda_theta, &s.lambda_iota, &s.lambda_eta}) v->assign(rows, 0.0);
    for (auto* v : {&s.flags_theta, &s.flags_iota, &s.flags_eta, &s.flags_union}) v->assign(rows, 0);
    const auto& col = frame.values[c];

    for (std::size_t si = 0; si < starts.size(); ++si) {
      const std::size_t seg_end = si + 1 < starts.size() ? starts[si + 1] : rows;
      std::size_t r = starts[si];
      while (r < seg_end) {
        while (r < seg_end && !col[r]) ++r;
        const std::size_t run_begin = r;
        while (r < seg_end && col[r]) ++r;
        if (run_begin == r) continue;
        std::vector<double> x;
        x.reserve(r - run_begin);
        for (std::size_t k = run_begin; k < r; ++k) x.push_back(*col[k]);
        try {
          DetectorScores part = detect_series(x, cfg);
          std::copy(part.lambda_theta.begin(), part.lambda_theta.end(), s.lambda_theta.begin() + run_begin);
          std::copy(part.lambda_iota.begin(), part.lambda_iota.end(), s.lambda_iota.begin() + run_begin);
          std::copy(part.lambda_eta.begin(), part.lambda_eta.end(), s.lambda_eta.begin() + run_begin);
          std::copy(part.flags_theta.begin(), part.flags_theta.end(), s.flags_theta.begin() + run_begin);
          std::copy(part.flags_iota.begin(), part.flags_iota.end(), s.flags_iota.begin() + run_begin);
          std::copy(part.flags_eta.begin(), part.flags_eta.end(), s.flags_eta.begin() + run_begin);
          std::copy(part.flags_union.begin(), part.flags_union.end(), s.flags_union.begin() + run_begin);
        } catch (const std::exception& e) {
          warnings[c].push_back("channel '" + frame.channels[c] + "' rows [" + std::to_string(run_begin) + ", " +
                                std::to_string(r) + "): " + e.what());
        }
      }
    }
  });

  std::vector<std::vector<std::uint8_t>> flags(nc);
  for (std::size_t c = 0; c < nc; ++c) flags[c] = scores[c].flags_union;
  DetectionResult result{ts::FlagMatrix(frame.channels, frame.timestamps, std::move(flags), frame.time_format),
                         std::move(scores), {}};
  for (auto& w : warnings) {
    for (auto& msg : w) result.warnings.push_back(std::move(msg));
  }
  return result;
}

}  // namespace anomalycd::ad
