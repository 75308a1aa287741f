#include "anomalycd/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "anomalycd/error.hpp"
#include "anomalycd/parallel.hpp"

namespace anomalycd::skeleton {

namespace {

struct Var {
  std::size_t channel;
  int lag;
  auto operator<=>(const Var&) const = default;
};

// Runs a test on (channel, lag) variables over samples [start, length).
// Returns nullopt when there are too few samples for the conditioning set.
std::optional<CITestResult> run_test(const LaggedData& data, Var x, Var y, const std::vector<Var>& z,
                                     std::size_t start) {
  const std::size_t n = data.length() > start ? data.length() - start : 0;
  if (n <= z.size() + 3) return std::nullopt;
  std::vector<std::span<const double>> zs;
  zs.reserve(z.size());
  for (const auto& v : z) zs.push_back(data.view(v.channel, v.lag, start));
  return anac_ci_test(data.view(x.channel, x.lag, start), data.view(y.channel, y.lag, start), zs);
}

bool accept(const CITestResult& r, double alpha, bool positive_only) {
  if (r.p_value > alpha) return false;
  return !positive_only || r.rho > 0.0;
}

}  // namespace

LaggedData::LaggedData(const ts::FlagMatrix& flags) : length_(flags.length()) {
  data_.resize(flags.num_channels());
  for (std::size_t c = 0; c < flags.num_channels(); ++c) {
    auto f = flags.channel(c);
    data_[c].assign(f.begin(), f.end());
  }
}

std::span<const double> LaggedData::view(std::size_t channel, int lag, std::size_t start) const {
  const auto offset = static_cast<std::ptrdiff_t>(start) + lag;
  if (offset < 0 || start > length_) throw std::out_of_range("lagged view before series start");
  return std::span<const double>(data_.at(channel)).subspan(static_cast<std::size_t>(offset), length_ - start);
}

std::vector<ParentCandidate> select_parents(const ts::FlagMatrix& flags, std::size_t target,
                                            const SkeletonOptions& options, const sparse::PriorLinkSet& priors) {
  return select_parents(LaggedData(flags), target, options, priors);
}

std::vector<ParentCandidate> select_parents(const LaggedData& data, std::size_t target,
                                            const SkeletonOptions& options, const sparse::PriorLinkSet& priors) {
  const int tau = options.tau_max;
  if (tau < 1) throw InputError("skeleton: tau_max must be >= 1");
  if (priors.num_channels() != data.num_channels()) throw InputError("skeleton: prior link set has wrong channel count");
  const auto start = static_cast<std::size_t>(tau);

  std::vector<ParentCandidate> parents;
  for (std::size_t c = 0; c < data.num_channels(); ++c) {
    if (c == target || !priors.allowed(c, target)) continue;
    for (int s = 1; s <= tau; ++s) {
      parents.push_back({c, -s, std::numeric_limits<double>::infinity(), 0.0});
    }
  }

  const Var y{target, 0};
  for (std::size_t q = 0; q <= options.max_conds; ++q) {
    if (parents.size() <= q) break;
    std::vector<bool> drop(parents.size(), false);
    for (std::size_t i = 0; i < parents.size(); ++i) {
      std::vector<Var> z;
      for (std::size_t k = 0; k < parents.size() && z.size() < q; ++k) {
        if (k != i) z.push_back({parents[k].channel, parents[k].lag});
      }
      auto r = run_test(data, {parents[i].channel, parents[i].lag}, y, z, start);
      if (!r || !accept(*r, options.parent_alpha(), options.positive_only)) {
        drop[i] = true;
        continue;
      }
      const double stat = options.positive_only ? r->rho : std::abs(r->rho);
      parents[i].strength = std::min(parents[i].strength, stat);
      parents[i].p_value = std::max(parents[i].p_value, r->p_value);
    }
    std::vector<ParentCandidate> kept;
    for (std::size_t i = 0; i < parents.size(); ++i) {
      if (!drop[i]) kept.push_back(parents[i]);
    }
    std::stable_sort(kept.begin(), kept.end(),
                     [](const ParentCandidate& a, const ParentCandidate& b) { return a.strength > b.strength; });
    parents = std::move(kept);
  }
  return parents;
}

SkeletonGraph learn_skeleton(const ts::FlagMatrix& flags, const SkeletonOptions& options,
                             const sparse::PriorLinkSet& priors) {
  const int tau = options.tau_max;
  if (flags.length() <= static_cast<std::size_t>(tau) + 10) {
    throw InputError("skeleton: need more than tau_max + 10 samples, got " + std::to_string(flags.length()));
  }
  const LaggedData data(flags);
  const std::size_t nc = flags.num_channels();

  std::vector<std::vector<ParentCandidate>> parents(nc);
  parallel_for(nc, options.threads, [&](std::size_t j) { parents[j] = select_parents(data, j, options, priors); });

  const auto start = static_cast<std::size_t>(2 * tau);
  std::vector<std::vector<LaggedLink>> per_target(nc);
  parallel_for(nc, options.threads, [&](std::size_t j) {
    std::vector<Var> candidates;
    for (const auto& p : parents[j]) candidates.push_back({p.channel, p.lag});
    for (std::size_t i = 0; i < nc; ++i) {
      if (i != j && priors.allowed(i, j, 0)) candidates.push_back({i, 0});
    }
    for (const Var& x : candidates) {
      std::set<Var> cond;
      for (const auto& p : parents[j]) {
        if (Var{p.channel, p.lag} != x) cond.insert({p.channel, p.lag});
      }
      if (options.mci_mode == MciMode::Full) {
        for (const auto& p : parents[x.channel]) {
          Var shifted{p.channel, p.lag + x.lag};
          if (shifted != x && shifted != Var{j, 0}) cond.insert(shifted);
        }
      }
      const std::vector<Var> z(cond.begin(), cond.end());
      auto r = run_test(data, x, {j, 0}, z, start);
      if (!r || !accept(*r, options.alpha, options.positive_only)) continue;
      per_target[j].push_back({x.channel, j, x.lag, r->rho, r->p_value});
    }
    std::sort(per_target[j].begin(), per_target[j].end(), [](const LaggedLink& a, const LaggedLink& b) {
      if (a.source != b.source) return a.source < b.source;
      return a.lag > b.lag;
    });
  });

  SkeletonGraph g;
  g.nodes = flags.channels();
  for (auto& links : per_target) {
    for (auto& l : links) {
      if (l.p_value > options.alpha || (options.positive_only && !(l.weight > 0.0)) ||
          !priors.allowed(l.source, l.target, l.lag) || l.source == l.target) {
        throw InvariantError("skeleton: emitted link violates its acceptance rule");
      }
      g.links.push_back(l);
    }
  }
  return g;
}

}  // namespace anomalycd::skeleton
