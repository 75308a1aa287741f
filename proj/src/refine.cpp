#include "anomalycd/refine.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <tuple>

#include "anomalycd/error.hpp"

namespace anomalycd::refine {

namespace {

// Contemporaneous tests of i->j and j->i differ only by rounding.
constexpr double kWeightTol = 1e-9;

double strength(const LaggedLink& l) { return std::abs(l.weight); }

// True when a should be kept over b for the same ordered pair.
bool stronger(const LaggedLink& a, const LaggedLink& b) {
  if (std::abs(strength(a) - strength(b)) > kWeightTol) return strength(a) > strength(b);
  return a.lag < b.lag;
}

void sort_edges(std::vector<LaggedLink>& edges) {
  std::sort(edges.begin(), edges.end(), [](const LaggedLink& a, const LaggedLink& b) {
    if (a.target != b.target) return a.target < b.target;
    if (a.source != b.source) return a.source < b.source;
    return a.lag > b.lag;
  });
}

std::vector<std::vector<std::size_t>> adjacency(std::size_t n, const std::vector<LaggedLink>& edges) {
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : edges) adj.at(e.source).push_back(e.target);
  for (auto& a : adj) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  return adj;
}

// Node sequence of one directed cycle, or empty.
std::vector<std::size_t> find_cycle(const std::vector<std::vector<std::size_t>>& adj) {
  const std::size_t n = adj.size();
  std::vector<int> color(n, 0);
  std::vector<std::size_t> parent(n, 0);
  for (std::size_t root = 0; root < n; ++root) {
    if (color[root] != 0) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    color[root] = 1;
    while (!stack.empty()) {
      auto& [u, next] = stack.back();
      if (next < adj[u].size()) {
        const std::size_t v = adj[u][next++];
        if (color[v] == 1) {
          std::vector<std::size_t> cycle{v};
          for (std::size_t w = u; w != v; w = parent[w]) cycle.push_back(w);
          std::reverse(cycle.begin() + 1, cycle.end());
          return cycle;
        }
        if (color[v] == 0) {
          color[v] = 1;
          parent[v] = u;
          stack.emplace_back(v, 0);
        }
      } else {
        color[u] = 2;
        stack.pop_back();
      }
    }
  }
  return {};
}

bool reaches(const std::vector<std::vector<std::size_t>>& adj, std::size_t from, std::size_t to) {
  std::vector<bool> seen(adj.size(), false);
  std::vector<std::size_t> stack{from};
  seen[from] = true;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    if (u == to) return true;
    for (auto v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return false;
}

}  // namespace

void TemporalDag::validate() const {
  std::map<std::pair<std::size_t, std::size_t>, int> seen;
  for (const auto& e : edges) {
    if (e.source >= nodes.size() || e.target >= nodes.size()) throw InvariantError("dag: edge endpoint out of range");
    if (e.source == e.target) throw InvariantError("dag: self loop on " + nodes[e.source]);
    if (++seen[{e.source, e.target}] > 1) {
      throw InvariantError("dag: duplicate edge " + nodes[e.source] + " -> " + nodes[e.target]);
    }
  }
  for (const auto& [pair, count] : seen) {
    if (seen.count({pair.second, pair.first}) != 0) {
      throw InvariantError("dag: two-way pair " + nodes[pair.first] + " <-> " + nodes[pair.second]);
    }
  }
  if (has_cycle(nodes.size(), edges)) throw InvariantError("dag: summary graph has a directed cycle");
}

bool has_cycle(std::size_t n, const std::vector<LaggedLink>& edges) { return !find_cycle(adjacency(n, edges)).empty(); }

std::vector<LaggedLink> group_max(const std::vector<LaggedLink>& edges) {
  std::map<std::pair<std::size_t, std::size_t>, LaggedLink> best;
  for (const auto& e : edges) {
    auto [it, inserted] = best.try_emplace({e.source, e.target}, e);
    if (!inserted && stronger(e, it->second)) it->second = e;
  }
  std::vector<LaggedLink> out;
  out.reserve(best.size());
  for (auto& [key, e] : best) out.push_back(e);
  sort_edges(out);
  return out;
}

ChiSquare onset_chi_square(const ts::FlagMatrix& flags, std::size_t source, std::size_t target, int tau) {
  if (tau < 1) throw InputError("chi-square: tau must be >= 1");
  const auto f = flags.channel(source);
  const auto y = flags.channel(target);
  const std::size_t n = flags.length();
  const auto w = static_cast<std::size_t>(tau);
  if (n <= w) return {};

  std::vector<int> onset(n, 0);
  for (std::size_t t = 0; t < n; ++t) onset[t] = f[t] == 1 && (t == 0 || f[t - 1] == 0) ? 1 : 0;

  double c[2][2] = {{0, 0}, {0, 0}};
  int window = 0;  // onsets in [t - tau, t - 1]
  for (std::size_t t = 0; t < w; ++t) window += onset[t];
  for (std::size_t t = w; t < n; ++t) {
    c[window > 0 ? 1 : 0][y[t] == 1 ? 1 : 0] += 1.0;
    window += onset[t] - onset[t - w];
  }

  const double total = c[0][0] + c[0][1] + c[1][0] + c[1][1];
  const double r0 = c[0][0] + c[0][1], r1 = c[1][0] + c[1][1];
  const double k0 = c[0][0] + c[1][0], k1 = c[0][1] + c[1][1];
  ChiSquare out;
  if (r0 == 0 || r1 == 0 || k0 == 0 || k1 == 0) return out;
  const double cross = c[1][1] * c[0][0] - c[1][0] * c[0][1];
  out.statistic = total * cross * cross / (r0 * r1 * k0 * k1);
  out.positive = cross > 0;
  boost::math::chi_squared dist(1.0);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

Resolution resolve_bidirected(const std::vector<LaggedLink>& edges, const ts::FlagMatrix& flags,
                              const RefineOptions& options) {
  std::map<std::pair<std::size_t, std::size_t>, LaggedLink> by_pair;
  for (const auto& e : edges) {
    if (!by_pair.try_emplace({e.source, e.target}, e).second) {
      throw InputError("refine: edges must be grouped before pair resolution");
    }
  }
  Resolution out;
  for (const auto& [key, e] : by_pair) {
    auto rev = by_pair.find({key.second, key.first});
    if (rev == by_pair.end()) {
      out.kept.push_back(e);
      continue;
    }
    if (key.first > key.second) continue;  // handled from the other side
    const LaggedLink& a = e;
    const LaggedLink& b = rev->second;
    if (std::abs(strength(a) - strength(b)) > kWeightTol) {
      out.kept.push_back(strength(a) > strength(b) ? a : b);
      continue;
    }
    if (a.lag != b.lag) {
      out.kept.push_back(a.lag < b.lag ? a : b);
      continue;
    }
    if (options.direct_t0) {
      const auto ab = onset_chi_square(flags, a.source, a.target, options.tau_max);
      const auto ba = onset_chi_square(flags, b.source, b.target, options.tau_max);
      const bool sab = ab.significant(options.chi2_alpha);
      const bool sba = ba.significant(options.chi2_alpha);
      if (sab && (!sba || ab.statistic > ba.statistic)) {
        out.kept.push_back(a);
        continue;
      }
      if (sba && (!sab || ba.statistic > ab.statistic)) {
        out.kept.push_back(b);
        continue;
      }
    }
    LaggedLink u = a;
    u.p_value = std::max(a.p_value, b.p_value);
    out.undirected.push_back(u);
  }
  sort_edges(out.kept);
  return out;
}

TemporalDag enforce_dag(std::vector<std::string> nodes, std::vector<LaggedLink> edges) {
  const std::size_t n = nodes.size();
  for (;;) {
    const auto cycle = find_cycle(adjacency(n, edges));
    if (cycle.empty()) break;
    std::optional<std::size_t> weakest;
    for (std::size_t k = 0; k < cycle.size(); ++k) {
      const std::size_t s = cycle[k], t = cycle[(k + 1) % cycle.size()];
      for (std::size_t idx = 0; idx < edges.size(); ++idx) {
        const auto& e = edges[idx];
        if (e.source != s || e.target != t) continue;
        if (!weakest) {
          weakest = idx;
          continue;
        }
        const auto& w = edges[*weakest];
        const bool lighter = std::abs(strength(e) - strength(w)) > kWeightTol
                                 ? strength(e) < strength(w)
                                 : std::tie(nodes[e.source], nodes[e.target]) < std::tie(nodes[w.source], nodes[w.target]);
        if (lighter) weakest = idx;
      }
    }
    if (!weakest) throw InvariantError("dag: cycle without a matching edge");
    const auto s = edges[*weakest].source, t = edges[*weakest].target;
    std::erase_if(edges, [&](const LaggedLink& e) { return e.source == s && e.target == t; });
  }
  sort_edges(edges);
  TemporalDag dag{std::move(nodes), std::move(edges)};
  dag.validate();
  return dag;
}

RefineResult prune(const skeleton::SkeletonGraph& skeleton, const ts::FlagMatrix& flags, const RefineOptions& options) {
  const std::size_t n = skeleton.nodes.size();
  std::vector<LaggedLink> links;
  for (const auto& l : skeleton.links) {
    if (l.source >= n || l.target >= n) throw InputError("refine: link endpoint out of range");
    if (l.source != l.target) links.push_back(l);
  }
  if (flags.num_channels() != n) throw InputError("refine: flag matrix and skeleton disagree on channel count");

  auto res = resolve_bidirected(group_max(links), flags, options);

  std::vector<LaggedLink> edges = res.kept;
  for (const auto& u : res.undirected) {
    LaggedLink forward = u;
    LaggedLink backward = u;
    std::swap(backward.source, backward.target);

    std::optional<bool> prefer_forward;
    if (options.t0_orient == T0Orient::Lex) {
      prefer_forward = skeleton.nodes[u.source] < skeleton.nodes[u.target];
    } else {
      const auto f = onset_chi_square(flags, u.source, u.target, options.tau_max);
      const auto b = onset_chi_square(flags, u.target, u.source, options.tau_max);
      const double sf = f.positive ? f.statistic : 0.0;
      const double sb = b.positive ? b.statistic : 0.0;
      if (sf != sb) prefer_forward = sf > sb;
    }
    const auto adj = adjacency(n, edges);
    const bool forward_ok = !reaches(adj, u.target, u.source);
    const bool backward_ok = !reaches(adj, u.source, u.target);
    bool use_forward;
    if (prefer_forward && (*prefer_forward ? forward_ok : backward_ok)) {
      use_forward = *prefer_forward;
    } else if (forward_ok != backward_ok) {
      use_forward = forward_ok;
    } else {
      use_forward = skeleton.nodes[u.source] < skeleton.nodes[u.target];
    }
    edges.push_back(use_forward ? forward : backward);
  }

  RefineResult out;
  out.dag = enforce_dag(skeleton.nodes, std::move(edges));
  if (!options.direct_t0) {
    for (const auto& u : res.undirected) {
      const bool present = std::any_of(out.dag.edges.begin(), out.dag.edges.end(), [&](const LaggedLink& e) {
        return (e.source == u.source && e.target == u.target) || (e.source == u.target && e.target == u.source);
      });
      if (present) out.undirected.push_back(u);
    }
  }
  return out;
}

}  // namespace anomalycd::refine
