#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "anomalycd/error.hpp"
#include "anomalycd/online_ad.hpp"
#include "oracles/gen.hpp"
#include "oracles/signal.hpp"

using namespace anomalycd;

namespace {

std::vector<double> sine(std::size_t n, double period, double slope = 0.0) {
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t) x[t] = std::sin(2.0 * std::numbers::pi * t / period) + slope * t;
  return x;
}

std::vector<double> noise_with_spike(std::uint64_t seed, std::size_t n, std::size_t spike, double height) {
  oracle::Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  x[spike] = height;
  return x;
}

std::vector<std::size_t> flagged(const std::vector<std::uint8_t>& f) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i]) out.push_back(i);
  return out;
}

}  // namespace

TEST_SUITE("online-ad") {

TEST_CASE("period of a pure sine") { CHECK(ad::estimate_period(sine(480, 24)) == 24); }

TEST_CASE("period with additive trend matches the periodogram") {
  const auto x = sine(480, 24, 0.5);
  CHECK(ad::estimate_period(x) == 24);
  CHECK(ad::estimate_period(x) == oracle::periodogram_period(x));
}

TEST_CASE("period errors") {
  CHECK_THROWS_AS(ad::estimate_period(std::vector<double>(100, 3.0)), ad::NoPeriodError);
  CHECK_THROWS_AS(ad::estimate_period(std::vector<double>(10, 1.0)), std::invalid_argument);
}

TEST_CASE("decomposition of a ramp and of a constant") {
  std::vector<double> ramp(100);
  for (std::size_t t = 0; t < ramp.size(); ++t) ramp[t] = 0.3 * t - 2.0;
  for (std::size_t p : {4u, 7u, 12u}) {
    const auto d = ad::decompose(ramp, p);
    for (std::size_t t = p; t + p < ramp.size(); ++t) {
      CHECK(std::abs(d.seasonal[t]) < 1e-9);
      CHECK(std::abs(d.residual[t]) < 1e-9);
    }
  }
  const auto c = ad::decompose(std::vector<double>(50, 4.5), 5);
  for (std::size_t t = 0; t < 50; ++t) {
    CHECK(c.trend[t] == 4.5);
    CHECK(c.seasonal[t] == 0.0);
    CHECK(c.residual[t] == 0.0);
  }
}

TEST_CASE("sine plus line splits into its analytic parts") {
  std::vector<double> x(240);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = std::sin(2.0 * std::numbers::pi * t / 12.0) + t;
  const auto d = ad::decompose(x, 12);
  for (std::size_t t = 12; t + 12 < x.size(); ++t) {
    CHECK(d.trend[t] == doctest::Approx(double(t)).epsilon(1e-9));
    CHECK(d.seasonal[t] == doctest::Approx(std::sin(2.0 * std::numbers::pi * t / 12.0)).epsilon(1e-6));
    CHECK(std::abs(d.residual[t]) < 1e-6);
  }
}

TEST_CASE("decomposition reconstructs its input") {
  oracle::Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> x(static_cast<std::size_t>(rng.integer(40, 400)));
    for (auto& v : x) v = rng.normal() * 100 + 1e4;
    const auto p = static_cast<std::size_t>(rng.integer(2, static_cast<long>(x.size() / 2)));
    const auto d = ad::decompose(x, p);
    for (std::size_t t = 0; t < x.size(); ++t) CHECK(std::abs(d.trend[t] + d.seasonal[t] + d.residual[t] - x[t]) < 1e-9);
  }
  CHECK_THROWS_AS(ad::decompose(std::vector<double>(10, 1.0), 6), std::invalid_argument);
}

TEST_CASE("moving sd of a constant residual is silent") {
  const auto d = ad::moving_sd_detect(std::vector<double>(300, 2.0), 10.0, 50);
  CHECK(std::all_of(d.score.begin(), d.score.end(), [](double s) { return s == 0.0; }));
  CHECK(flagged(d.flags).empty());
}

TEST_CASE("moving sd flags exactly a 50-sigma spike") {
  const auto x = noise_with_spike(2024, 1000, 617, 50.0);
  const auto d = ad::moving_sd_detect(x, 10.0, 100);
  CHECK(flagged(d.flags) == std::vector<std::size_t>{617});
  const auto ref = oracle::moving_sd_scores(x, 100);
  for (std::size_t t = 0; t < x.size(); ++t) CHECK(d.score[t] == doctest::Approx(ref[t]).epsilon(1e-9));
}

TEST_CASE("moving sd flags are scale and shift invariant") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto x = noise_with_spike(seed, 500, 100 + seed * 30, 12.0);
    const auto base = ad::moving_sd_detect(x, 4.0, 64).flags;
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = 3.0 * x[i];
    CHECK(ad::moving_sd_detect(y, 4.0, 64).flags == base);
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = 3.0 * x[i] + 7.0;
    CHECK(ad::moving_sd_detect(y, 4.0, 64).flags == base);
  }
}

TEST_CASE("trend drift on a constant trend is silent") {
  CHECK(flagged(ad::trend_drift_detect(std::vector<double>(100, 1.0), 20.0, 5.0).flags).empty());
}

TEST_CASE("trend drift on a ramp flags from the 41st ramp sample") {
  std::vector<double> x(600, 0.0);
  for (std::size_t k = 0; k < 100; ++k) x[500 + k] = 0.5 * (k + 1);
  const auto d = ad::trend_drift_detect(x, 20.0, 5.0);
  const auto f = flagged(d.flags);
  REQUIRE_FALSE(f.empty());
  CHECK(f.front() == 540);
  CHECK(d.score[540] == doctest::Approx(20.5));
  CHECK(d.score[539] == doctest::Approx(20.0));
  CHECK(f.size() == 60);
}

TEST_CASE("trend drift flags one isolated step") {
  std::vector<double> x(600, 0.0);
  for (std::size_t t = 300; t < x.size(); ++t) x[t] = 100.0;
  const auto d = ad::trend_drift_detect(x, 20.0, 5.0);
  CHECK(flagged(d.flags) == std::vector<std::size_t>{300});
  CHECK(d.score[300] == 100.0);
}

TEST_CASE("spectral detector on a constant is silent") {
  const auto d = ad::spectral_detect(std::vector<double>(256, 5.0), 3.0, 16);
  CHECK(flagged(d.flags).empty());
}

TEST_CASE("spectral saliency peaks at a spike on a sine") {
  auto x = sine(512, 24);
  x[300] += 10.0 / std::sqrt(2.0);  // ten standard deviations of a unit sine
  const auto d = ad::spectral_detect(x, 3.0, 16);
  const auto argmax = static_cast<std::size_t>(std::max_element(d.score.begin(), d.score.end()) - d.score.begin());
  CHECK(argmax == 300);
  CHECK(flagged(d.flags) == std::vector<std::size_t>{300});
  const auto ref = oracle::spectral_scores(x, 16);
  for (std::size_t t = 0; t < x.size(); ++t) CHECK(d.score[t] == doctest::Approx(ref[t]).epsilon(1e-9).scale(1.0));
}

TEST_CASE("spectral scores are scale invariant") {
  oracle::Rng rng(5);
  std::vector<double> x(300);
  for (auto& v : x) v = rng.normal();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 7.5 * x[i];
  const auto a = ad::spectral_detect(x, 3.0, 20), b = ad::spectral_detect(y, 3.0, 20);
  for (std::size_t t = 0; t < x.size(); ++t) CHECK(std::abs(a.score[t] - b.score[t]) < 1e-9);
}

TEST_CASE("ensemble union and threshold monotonicity") {
  oracle::Rng rng(9);
  std::vector<double> x(2000);
  for (std::size_t t = 0; t < x.size(); ++t) x[t] = std::sin(t / 20.0) + 0.2 * rng.normal() + (t > 1400 ? 3.0 : 0.0);
  x[700] += 6.0;
  ad::DetectorConfig cfg;
  cfg.alpha_theta = 4;
  cfg.w_theta = 200;
  cfg.alpha_iota = 0.5;
  cfg.p_iota = 126;
  cfg.alpha_eta = 3;
  cfg.q_eta = 20;
  const auto s = ad::detect_series(x, cfg);
  for (std::size_t t = 0; t < x.size(); ++t) CHECK(s.flags_union[t] == (s.flags_theta[t] | s.flags_iota[t] | s.flags_eta[t]));

  auto raised = cfg;
  raised.alpha_theta *= 1.5;
  raised.alpha_iota *= 1.5;
  raised.alpha_eta *= 1.5;
  const auto r = ad::detect_series(x, raised);
  for (std::size_t t = 0; t < x.size(); ++t) CHECK(r.flags_union[t] <= s.flags_union[t]);
}

TEST_CASE("detect on a constant frame gives all-zero flags") {
  ts::TimeFrame f;
  f.channels = {"A", "B"};
  for (int i = 0; i < 200; ++i) f.timestamps.push_back(i);
  f.values.assign(2, std::vector<ts::Cell>(200, ts::Cell{1.0}));
  f.segment_starts = {0};
  ad::DetectorConfig cfg;
  cfg.w_theta = 20;
  cfg.p_iota.reset();
  cfg.q_eta = 10;
  const auto r = ad::detect(f, cfg);
  CHECK(r.flags.num_channels() == 2);
  for (std::size_t c = 0; c < 2; ++c) {
    const auto ch = r.flags.channel(c);
    CHECK(std::all_of(ch.begin(), ch.end(), [](auto v) { return v == 0; }));
  }
}

TEST_CASE("detect on the spike channel flags only the spike") {
  const auto x = noise_with_spike(2024, 1000, 617, 50.0);
  ts::TimeFrame f;
  f.channels = {"A"};
  f.values.assign(1, {});
  for (std::size_t i = 0; i < x.size(); ++i) {
    f.timestamps.push_back(static_cast<double>(i));
    f.values[0].push_back(x[i]);
  }
  f.segment_starts = {0};
  ad::DetectorConfig cfg;
  cfg.w_theta = 100;
  cfg.p_iota = 24;
  cfg.q_eta = 100;
  const auto r = ad::detect(f, cfg);
  const auto ch = r.flags.channel(0);
  CHECK(flagged({ch.begin(), ch.end()}) == std::vector<std::size_t>{617});
  CHECK(flagged(r.scores[0].flags_union) == flagged(r.scores[0].flags_theta));
}

TEST_CASE("config validation") {
  ad::DetectorConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.q_eta = 1;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = {};
  cfg.alpha_eta = 0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}

}  // TEST_SUITE
