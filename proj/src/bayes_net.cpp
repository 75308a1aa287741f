#include "anomalycd/bayes_net.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>

#include "anomalycd/error.hpp"

namespace anomalycd::bn {

namespace {

constexpr std::size_t kMaxParents = 24;

struct Factor {
  std::vector<std::size_t> vars;  // sorted; bit i of an index is vars[i]
  std::vector<double> table;
};

Factor multiply(const Factor& a, const Factor& b) {
  Factor out;
  std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(), std::back_inserter(out.vars));
  const std::size_t m = out.vars.size();
  auto positions = [&](const Factor& f) {
    std::vector<std::size_t> pos;
    for (auto v : f.vars) pos.push_back(static_cast<std::size_t>(std::lower_bound(out.vars.begin(), out.vars.end(), v) - out.vars.begin()));
    return pos;
  };
  const auto pa = positions(a), pb = positions(b);
  out.table.assign(std::size_t{1} << m, 0.0);
  for (std::size_t idx = 0; idx < out.table.size(); ++idx) {
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i < pa.size(); ++i) ia |= ((idx >> pa[i]) & 1U) << i;
    for (std::size_t i = 0; i < pb.size(); ++i) ib |= ((idx >> pb[i]) & 1U) << i;
    out.table[idx] = a.table[ia] * b.table[ib];
  }
  return out;
}

Factor sum_out(const Factor& f, std::size_t var) {
  const auto it = std::find(f.vars.begin(), f.vars.end(), var);
  const auto pos = static_cast<std::size_t>(it - f.vars.begin());
  Factor out;
  out.vars = f.vars;
  out.vars.erase(out.vars.begin() + static_cast<std::ptrdiff_t>(pos));
  out.table.assign(std::size_t{1} << out.vars.size(), 0.0);
  const std::size_t low = (std::size_t{1} << pos) - 1;
  for (std::size_t idx = 0; idx < f.table.size(); ++idx) {
    out.table[(idx & low) | ((idx >> (pos + 1)) << pos)] += f.table[idx];
  }
  return out;
}

Factor restrict_to(const Factor& f, std::size_t var, int state) {
  const auto it = std::find(f.vars.begin(), f.vars.end(), var);
  if (it == f.vars.end()) return f;
  const auto pos = static_cast<std::size_t>(it - f.vars.begin());
  Factor out;
  out.vars = f.vars;
  out.vars.erase(out.vars.begin() + static_cast<std::ptrdiff_t>(pos));
  out.table.assign(std::size_t{1} << out.vars.size(), 0.0);
  const std::size_t low = (std::size_t{1} << pos) - 1;
  for (std::size_t idx = 0; idx < f.table.size(); ++idx) {
    if (((idx >> pos) & 1U) != static_cast<std::size_t>(state)) continue;
    out.table[(idx & low) | ((idx >> (pos + 1)) << pos)] = f.table[idx];
  }
  return out;
}

Factor cpd_factor(const BayesNetModel& model, std::size_t node) {
  const Cpd& cpd = model.cpds()[node];
  Factor f;
  f.vars = cpd.parents;
  f.vars.push_back(node);
  std::sort(f.vars.begin(), f.vars.end());
  f.table.assign(std::size_t{1} << f.vars.size(), 0.0);
  std::vector<int> states(model.size(), 0);
  for (std::size_t idx = 0; idx < f.table.size(); ++idx) {
    for (std::size_t i = 0; i < f.vars.size(); ++i) states[f.vars[i]] = static_cast<int>((idx >> i) & 1U);
    f.table[idx] = model.conditional(node, states[node], states);
  }
  return f;
}

// Elimination order over `vars` by the min-fill heuristic; ties by fewer neighbours, then index.
std::vector<std::size_t> min_fill_order(const std::vector<Factor>& factors, const std::set<std::size_t>& vars) {
  std::map<std::size_t, std::set<std::size_t>> nbr;
  for (auto v : vars) nbr[v];
  for (const auto& f : factors) {
    for (auto a : f.vars) {
      for (auto b : f.vars) {
        if (a != b) nbr[a].insert(b);
      }
    }
  }
  std::set<std::size_t> remaining = vars;
  std::vector<std::size_t> order;
  while (!remaining.empty()) {
    std::size_t best = *remaining.begin();
    std::size_t best_fill = std::numeric_limits<std::size_t>::max();
    std::size_t best_deg = best_fill;
    for (auto v : remaining) {
      const std::vector<std::size_t> ns(nbr[v].begin(), nbr[v].end());
      std::size_t fill = 0;
      for (std::size_t i = 0; i < ns.size(); ++i) {
        for (std::size_t j = i + 1; j < ns.size(); ++j) fill += nbr[ns[i]].count(ns[j]) == 0 ? 1 : 0;
      }
      if (fill < best_fill || (fill == best_fill && ns.size() < best_deg)) {
        best = v;
        best_fill = fill;
        best_deg = ns.size();
      }
    }
    order.push_back(best);
    remaining.erase(best);
    const std::vector<std::size_t> ns(nbr[best].begin(), nbr[best].end());
    for (auto a : ns) {
      nbr[a].erase(best);
      for (auto b : ns) {
        if (a != b) nbr[a].insert(b);
      }
    }
    nbr.erase(best);
  }
  return order;
}

}  // namespace

std::size_t UnrolledDataset::index_of(const std::string& column) const {
  const auto it = std::find(columns.begin(), columns.end(), column);
  if (it == columns.end()) throw InputError("unknown column '" + column + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

std::string lag_column_name(const std::string& channel, int lag) {
  return channel + "_lag" + std::to_string(lag < 0 ? -lag : lag);
}

Unrolled unroll(const ts::FlagMatrix& flags, const refine::TemporalDag& dag) {
  std::vector<std::size_t> channel_of(dag.nodes.size());
  for (std::size_t i = 0; i < dag.nodes.size(); ++i) {
    const auto c = flags.find_channel(dag.nodes[i]);
    if (!c) throw InputError("unroll: dag node '" + dag.nodes[i] + "' is not a flag channel");
    channel_of[i] = *c;
  }
  int max_shift = 0;
  std::set<std::pair<std::size_t, int>> shifted;  // (channel, s > 0)
  for (const auto& e : dag.edges) {
    if (e.lag > 0) throw InputError("unroll: positive lag");
    if (e.lag < 0) {
      shifted.insert({channel_of.at(e.source), -e.lag});
      max_shift = std::max(max_shift, -e.lag);
    }
  }
  const std::size_t n = flags.length();
  const auto drop = static_cast<std::size_t>(max_shift);
  if (drop >= n) throw InputError("unroll: lag " + std::to_string(max_shift) + " is not shorter than the series");

  Unrolled out;
  out.data.dropped_rows = drop;
  for (std::size_t c = 0; c < flags.num_channels(); ++c) {
    const auto col = flags.channel(c);
    out.data.columns.push_back(flags.channels()[c]);
    out.data.data.emplace_back(col.begin() + static_cast<std::ptrdiff_t>(drop), col.end());
  }
  std::map<std::pair<std::size_t, int>, std::size_t> shifted_index;
  for (const auto& [c, s] : shifted) {
    const auto col = flags.channel(c);
    shifted_index[{c, s}] = out.data.columns.size();
    out.data.columns.push_back(lag_column_name(flags.channels()[c], s));
    const auto shift = static_cast<std::size_t>(s);
    out.data.data.emplace_back(col.begin() + static_cast<std::ptrdiff_t>(drop - shift),
                               col.end() - static_cast<std::ptrdiff_t>(shift));
  }
  out.graph.nodes = out.data.columns;
  for (const auto& e : dag.edges) {
    const std::size_t child = channel_of.at(e.target);
    const std::size_t parent = e.lag == 0 ? channel_of.at(e.source) : shifted_index.at({channel_of.at(e.source), -e.lag});
    out.graph.edges.emplace_back(parent, child);
  }
  std::sort(out.graph.edges.begin(), out.graph.edges.end());
  out.graph.edges.erase(std::unique(out.graph.edges.begin(), out.graph.edges.end()), out.graph.edges.end());
  return out;
}

BayesNetModel::BayesNetModel(std::vector<std::string> nodes, std::vector<Cpd> cpds, double ess)
    : nodes_(std::move(nodes)), cpds_(std::move(cpds)), ess_(ess) {
  const std::size_t n = nodes_.size();
  if (cpds_.size() != n) throw InvariantError("bayes net: one table per node required");
  if (std::set<std::string>(nodes_.begin(), nodes_.end()).size() != n) throw InvariantError("bayes net: duplicate node name");
  std::vector<std::size_t> indegree(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    const Cpd& c = cpds_[v];
    if (c.parents.size() > kMaxParents) throw InvariantError("bayes net: too many parents on " + nodes_[v]);
    if (c.p_one.size() != (std::size_t{1} << c.parents.size())) throw InvariantError("bayes net: table size mismatch on " + nodes_[v]);
    for (auto p : c.parents) {
      if (p >= n || p == v) throw InvariantError("bayes net: bad parent on " + nodes_[v]);
    }
    if (std::set<std::size_t>(c.parents.begin(), c.parents.end()).size() != c.parents.size()) {
      throw InvariantError("bayes net: repeated parent on " + nodes_[v]);
    }
    for (double p : c.p_one) {
      if (!(p > 0.0 && p < 1.0)) throw InvariantError("bayes net: table entry outside (0, 1) on " + nodes_[v]);
    }
    indegree[v] = c.parents.size();
  }
  std::vector<std::size_t> queue;
  for (std::size_t v = 0; v < n; ++v) {
    if (indegree[v] == 0) queue.push_back(v);
  }
  std::size_t seen = 0;
  while (!queue.empty()) {
    const std::size_t u = queue.back();
    queue.pop_back();
    ++seen;
    for (auto c : children(u)) {
      if (--indegree[c] == 0) queue.push_back(c);
    }
  }
  if (seen != n) throw InvariantError("bayes net: graph has a directed cycle");
}

std::size_t BayesNetModel::index_of(const std::string& node) const {
  const auto it = std::find(nodes_.begin(), nodes_.end(), node);
  if (it == nodes_.end()) throw InputError("unknown node '" + node + "'");
  return static_cast<std::size_t>(it - nodes_.begin());
}

std::vector<std::size_t> BayesNetModel::children(std::size_t node) const {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < cpds_.size(); ++v) {
    const auto& ps = cpds_[v].parents;
    if (std::find(ps.begin(), ps.end(), node) != ps.end()) out.push_back(v);
  }
  return out;
}

double BayesNetModel::conditional(std::size_t node, int state, const std::vector<int>& states) const {
  const Cpd& c = cpds_.at(node);
  std::size_t idx = 0;
  for (std::size_t k = 0; k < c.parents.size(); ++k) {
    if (states.at(c.parents[k]) != 0) idx |= std::size_t{1} << k;
  }
  return state != 0 ? c.p_one[idx] : 1.0 - c.p_one[idx];
}

BayesNetModel fit(const UnrolledDataset& data, const NodeGraph& graph, double ess) {
  if (!(ess > 0.0)) throw InputError("fit: ess must be > 0");
  const std::size_t n = graph.nodes.size();
  std::vector<std::size_t> column(n);
  for (std::size_t v = 0; v < n; ++v) column[v] = data.index_of(graph.nodes[v]);
  std::vector<Cpd> cpds(n);
  for (const auto& [p, c] : graph.edges) {
    if (p >= n || c >= n) throw InputError("fit: edge endpoint out of range");
    cpds[c].parents.push_back(p);
  }
  const std::size_t rows = data.rows();
  for (std::size_t v = 0; v < n; ++v) {
    auto& cpd = cpds[v];
    std::sort(cpd.parents.begin(), cpd.parents.end());
    cpd.parents.erase(std::unique(cpd.parents.begin(), cpd.parents.end()), cpd.parents.end());
    const std::size_t k = cpd.parents.size();
    if (k > kMaxParents) throw InputError("fit: node '" + graph.nodes[v] + "' has too many parents");
    const std::size_t configs = std::size_t{1} << k;
    std::vector<double> total(configs, 0.0), ones(configs, 0.0);
    const auto& y = data.data[column[v]];
    for (std::size_t r = 0; r < rows; ++r) {
      std::size_t idx = 0;
      for (std::size_t b = 0; b < k; ++b) {
        if (data.data[column[cpd.parents[b]]][r] != 0) idx |= std::size_t{1} << b;
      }
      total[idx] += 1.0;
      ones[idx] += y[r] != 0 ? 1.0 : 0.0;
    }
    const double a = ess / static_cast<double>(configs);
    cpd.p_one.resize(configs);
    for (std::size_t i = 0; i < configs; ++i) cpd.p_one[i] = (ones[i] + a / 2.0) / (total[i] + a);
  }
  return BayesNetModel(graph.nodes, std::move(cpds), ess);
}

QueryResult query_cp(const BayesNetModel& model, const std::pair<std::string, int>& target, const Assignment& evidence) {
  const std::size_t n = model.size();
  const std::size_t t = model.index_of(target.first);
  if (target.second != 0 && target.second != 1) throw InputError("query: states are 0 or 1");
  std::map<std::size_t, int> ev;
  for (const auto& [name, state] : evidence) {
    if (state != 0 && state != 1) throw InputError("query: states are 0 or 1");
    const std::size_t v = model.index_of(name);
    auto [it, inserted] = ev.emplace(v, state);
    if (!inserted && it->second != state) throw InputError("query: conflicting evidence on '" + name + "'");
  }

  // Every table entry lies in (0, 1), so any evidence has positive probability
  // and evidence on the target itself settles the answer.
  if (const auto it = ev.find(t); it != ev.end()) {
    return {it->second == target.second ? 1.0 : 0.0, target, evidence};
  }

  // Only ancestors of the target and evidence matter.
  std::vector<bool> relevant(n, false);
  std::vector<std::size_t> stack{t};
  for (const auto& [v, s] : ev) stack.push_back(v);
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    if (relevant[v]) continue;
    relevant[v] = true;
    for (auto p : model.cpds()[v].parents) stack.push_back(p);
  }

  std::vector<Factor> factors;
  std::set<std::size_t> hidden;
  for (std::size_t v = 0; v < n; ++v) {
    if (!relevant[v]) continue;
    Factor f = cpd_factor(model, v);
    for (const auto& [e, s] : ev) f = restrict_to(f, e, s);
    factors.push_back(std::move(f));
    if (v != t && ev.count(v) == 0) hidden.insert(v);
  }

  for (auto var : min_fill_order(factors, hidden)) {
    std::vector<Factor> keep;
    std::optional<Factor> prod;
    for (auto& f : factors) {
      if (std::binary_search(f.vars.begin(), f.vars.end(), var)) {
        prod = prod ? multiply(*prod, f) : f;
      } else {
        keep.push_back(std::move(f));
      }
    }
    if (prod) keep.push_back(sum_out(*prod, var));
    factors = std::move(keep);
  }
  Factor joint{{}, {1.0}};
  for (const auto& f : factors) joint = multiply(joint, f);
  if (joint.vars != std::vector<std::size_t>{t}) throw InvariantError("query: elimination left unexpected variables");
  const double z = joint.table[0] + joint.table[1];
  if (!(z > 0.0)) throw InvariantError("query: evidence has zero probability");

  QueryResult out;
  out.probability = joint.table[static_cast<std::size_t>(target.second)] / z;
  out.target = target;
  out.evidence = evidence;
  return out;
}

bool check_causal_path(const BayesNetModel& model, const std::string& source, const std::string& target,
                       const std::vector<std::string>& evidence) {
  const std::size_t n = model.size();
  const std::size_t s = model.index_of(source);
  const std::size_t t = model.index_of(target);
  std::vector<bool> observed(n, false);
  for (const auto& e : evidence) observed[model.index_of(e)] = true;
  if (observed[s] || observed[t]) return false;
  if (s == t) return true;

  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t v = 0; v < n; ++v) {
    for (auto p : model.cpds()[v].parents) children[p].push_back(v);
  }
  // Observed nodes and their ancestors.
  std::vector<bool> anc(n, false);
  std::vector<std::size_t> stack;
  for (std::size_t v = 0; v < n; ++v) {
    if (observed[v]) stack.push_back(v);
  }
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    if (anc[v]) continue;
    anc[v] = true;
    for (auto p : model.cpds()[v].parents) stack.push_back(p);
  }

  // (node, arrived from a child) traversal.
  std::vector<std::array<bool, 2>> visited(n, {false, false});
  std::deque<std::pair<std::size_t, bool>> queue{{s, true}};
  while (!queue.empty()) {
    const auto [v, up] = queue.front();
    queue.pop_front();
    if (visited[v][up ? 1 : 0]) continue;
    visited[v][up ? 1 : 0] = true;
    if (!observed[v] && v == t) return true;
    if (up && !observed[v]) {
      for (auto p : model.cpds()[v].parents) queue.emplace_back(p, true);
      for (auto c : children[v]) queue.emplace_back(c, false);
    } else if (!up) {
      if (!observed[v]) {
        for (auto c : children[v]) queue.emplace_back(c, false);
      }
      if (anc[v]) {
        for (auto p : model.cpds()[v].parents) queue.emplace_back(p, true);
      }
    }
  }
  return false;
}

}  // namespace anomalycd::bn
