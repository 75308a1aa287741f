#include "anomalycd/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <tuple>

#include "anomalycd/error.hpp"

namespace anomalycd::eval {

namespace {

// Same stream on every platform, unlike the std distributions.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void SyntheticSpec::validate() const {
  if (n_nodes < 1) throw InputError("synthetic: n_nodes must be >= 1");
  if (max_lag < 1) throw InputError("synthetic: max_lag must be >= 1");
  if (n_samples < 1) throw InputError("synthetic: n_samples must be >= 1");
  if (!is_probability(edge_probability) || !is_probability(propagation_probability) || !is_probability(base_rate) ||
      !is_probability(lag0_probability)) {
    throw InputError("synthetic: probabilities must lie in [0, 1]");
  }
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const std::size_t n = spec.n_nodes;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);

  std::vector<std::string> names(n);
  for (std::size_t i = 0; i < n; ++i) names[i] = "X" + std::to_string(i);

  std::vector<skeleton::LaggedLink> edges;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (uniform01(rng) >= spec.edge_probability) continue;
      int lag = -1 - static_cast<int>(uniform_index(rng, static_cast<std::size_t>(spec.max_lag)));
      if (uniform01(rng) < spec.lag0_probability) lag = 0;
      edges.push_back({order[a], order[b], lag, spec.propagation_probability, 0.0});
    }
  }

  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> parents(n);  // (parent, delay)
  for (const auto& e : edges) parents[e.target].emplace_back(e.source, static_cast<std::size_t>(-e.lag));

  const std::size_t T = spec.n_samples;
  std::vector<std::vector<std::uint8_t>> fired(n, std::vector<std::uint8_t>(T, 0));
  for (std::size_t t = 0; t < T; ++t) {
    for (auto v : order) {
      const double spontaneous = uniform01(rng);
      const double propagate = uniform01(rng);
      bool triggered = false;
      for (const auto& [p, delay] : parents[v]) {
        if (t >= delay && fired[p][t - delay] != 0) triggered = true;
      }
      fired[v][t] = spontaneous < spec.base_rate || (triggered && propagate < spec.propagation_probability);
    }
  }

  std::vector<double> stamps(T);
  std::iota(stamps.begin(), stamps.end(), 0.0);
  SyntheticData out{ts::FlagMatrix(names, std::move(stamps), std::move(fired), ts::TimeFormat::Index),
                    refine::TemporalDag{names, {}}};
  std::sort(edges.begin(), edges.end(), [](const auto& x, const auto& y) {
    return std::tie(x.target, x.source) < std::tie(y.target, y.source);
  });
  out.truth.edges = std::move(edges);
  out.truth.validate();
  return out;
}

}  // namespace anomalycd::eval
