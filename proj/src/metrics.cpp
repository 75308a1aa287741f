#include "anomalycd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "anomalycd/error.hpp"

namespace anomalycd::eval {

SummaryGraph::SummaryGraph(std::vector<std::string> n)
    : nodes(std::move(n)), weight(nodes.size(), std::vector<double>(nodes.size(), 0.0)) {}

std::size_t SummaryGraph::num_edges() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = 0; j < size(); ++j) count += edge(i, j) ? 1 : 0;
  }
  return count;
}

void SummaryGraph::add_edge(std::size_t i, std::size_t j, double w) {
  if (i >= size() || j >= size()) throw InputError("summary graph: edge endpoint out of range");
  if (i == j) throw InputError("summary graph: self loop on " + nodes[i]);
  // A zero weight would read as "no edge".
  const double a = std::max(std::abs(w), 1e-300);
  weight[i][j] = std::max(weight[i][j], a);
}

SummaryGraph summarize(const std::vector<std::string>& nodes, const std::vector<skeleton::LaggedLink>& edges,
                       const std::vector<skeleton::LaggedLink>& undirected) {
  SummaryGraph g(nodes);
  for (const auto& e : edges) g.add_edge(e.source, e.target, e.weight);
  for (const auto& e : undirected) {
    g.add_edge(e.source, e.target, e.weight);
    g.add_edge(e.target, e.source, e.weight);
  }
  return g;
}

SummaryGraph summarize(const refine::RefineResult& result, bool directed_only) {
  if (directed_only) return summarize(result.dag.nodes, result.dag.edges);
  return summarize(result.dag.nodes, result.dag.edges, result.undirected);
}

std::pair<SummaryGraph, SummaryGraph> align(const SummaryGraph& estimated, const SummaryGraph& reference) {
  std::vector<std::string> names = reference.nodes;
  for (const auto& n : estimated.nodes) {
    if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
  }
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!index.emplace(names[i], i).second) throw InputError("metrics: duplicate node name '" + names[i] + "'");
  }
  auto remap = [&](const SummaryGraph& g) {
    SummaryGraph out(names);
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (g.edge(i, j)) out.weight[index.at(g.nodes[i])][index.at(g.nodes[j])] = g.weight[i][j];
      }
    }
    return out;
  };
  return {remap(estimated), remap(reference)};
}

GraphDiff compare(const SummaryGraph& est, const SummaryGraph& ref) {
  if (est.nodes != ref.nodes) throw InputError("metrics: graphs must share node order");
  GraphDiff d;
  const std::size_t n = est.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const bool e = est.edge(i, j), r = ref.edge(i, j);
      d.tp += e && r;
      d.fp += e && !r;
      d.fn += !e && r;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool eij = est.edge(i, j), eji = est.edge(j, i);
      const bool rij = ref.edge(i, j), rji = ref.edge(j, i);
      const bool ea = eij || eji, ra = rij || rji;
      if (ea && !ra) ++d.ue;
      if (!ea && ra) ++d.um;
      if (!ea && !ra) ++d.tn;
      if ((rij != rji) && (eij != eji) && eij == rji) ++d.rv;
    }
  }
  return d;
}

std::size_t shd(const SummaryGraph& estimated, const SummaryGraph& reference) {
  const auto d = compare(estimated, reference);
  return d.fp + d.fn;
}

std::size_t shdu(const SummaryGraph& estimated, const SummaryGraph& reference) {
  const auto d = compare(estimated, reference);
  return d.ue + d.um + d.rv;
}

double aprc(const SummaryGraph& est, const SummaryGraph& ref) {
  if (est.nodes != ref.nodes) throw InputError("metrics: graphs must share node order");
  const std::size_t n = est.size();
  std::vector<std::pair<double, bool>> scored;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const bool label = i != j && ref.edge(i, j);
      scored.emplace_back(i != j && est.edge(i, j) ? est.weight[i][j] : 0.0, label);
      positives += label ? 1 : 0;
    }
  }
  if (positives == 0) return est.num_edges() == 0 ? 1.0 : 0.0;
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  double area = 0.0, prev_r = 0.0, prev_p = 1.0;
  std::size_t tp = 0, taken = 0;
  for (std::size_t k = 0; k < scored.size();) {
    const double threshold = scored[k].first;
    for (; k < scored.size() && scored[k].first == threshold; ++k) {
      ++taken;
      tp += scored[k].second ? 1 : 0;
    }
    const double r = static_cast<double>(tp) / static_cast<double>(positives);
    const double p = static_cast<double>(tp) / static_cast<double>(taken);
    area += (r - prev_r) * (p + prev_p) / 2.0;
    prev_r = r;
    prev_p = p;
    if (tp == positives) break;
  }
  return area;
}

MetricsReport evaluate(const SummaryGraph& estimated, const SummaryGraph& reference) {
  const auto [est, ref] = align(estimated, reference);
  MetricsReport m;
  m.diff = compare(est, ref);
  const auto& d = m.diff;
  m.precision = d.tp + d.fp == 0 ? 1.0 : static_cast<double>(d.tp) / static_cast<double>(d.tp + d.fp);
  m.recall = d.tp + d.fn == 0 ? 1.0 : static_cast<double>(d.tp) / static_cast<double>(d.tp + d.fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  const std::size_t negatives = d.tn + d.ue;
  m.fpr = negatives == 0 ? 0.0 : static_cast<double>(d.rv + d.ue) / static_cast<double>(negatives);
  m.shd = d.fp + d.fn;
  m.shdu = d.ue + d.um + d.rv;
  m.aprc = aprc(est, ref);
  return m;
}

}  // namespace anomalycd::eval
