#include "anomalycd/graph_io.hpp"

#include <map>

#include "anomalycd/error.hpp"
#include "anomalycd/timeseries.hpp"

namespace anomalycd::io {

namespace {

json link_to_json(const std::vector<std::string>& nodes, const skeleton::LaggedLink& l) {
  return json{{"source", nodes.at(l.source)},
              {"target", nodes.at(l.target)},
              {"lag", l.lag},
              {"weight", l.weight},
              {"p_value", l.p_value}};
}

skeleton::LaggedLink link_from_json(const std::map<std::string, std::size_t>& index, const json& e) {
  auto node = [&](const char* key) {
    const auto name = e.at(key).get<std::string>();
    const auto it = index.find(name);
    if (it == index.end()) throw InputError(std::string("graph: edge ") + key + " '" + name + "' is not a node");
    return it->second;
  };
  skeleton::LaggedLink l;
  l.source = node("source");
  l.target = node("target");
  l.lag = e.value("lag", 0);
  l.weight = e.value("weight", 1.0);
  l.p_value = e.value("p_value", 0.0);
  if (l.lag > 0) throw InputError("graph: lags must be <= 0");
  if (l.source == l.target) throw InputError("graph: self loop");
  return l;
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw InputError(std::string(what) + ": malformed JSON: " + e.what());
  }
}

}  // namespace

json graph_to_json(const GraphDoc& g) {
  json j;
  j["nodes"] = g.nodes;
  j["edges"] = json::array();
  for (const auto& l : g.edges) j["edges"].push_back(link_to_json(g.nodes, l));
  j["undirected"] = json::array();
  for (const auto& l : g.undirected) j["undirected"].push_back(link_to_json(g.nodes, l));
  return j;
}

GraphDoc graph_from_json(const json& j) {
  return guarded("graph", [&] {
    GraphDoc g;
    g.nodes = j.at("nodes").get<std::vector<std::string>>();
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      if (!index.emplace(g.nodes[i], i).second) throw InputError("graph: duplicate node '" + g.nodes[i] + "'");
    }
    for (const auto& e : j.at("edges")) g.edges.push_back(link_from_json(index, e));
    if (j.contains("undirected")) {
      for (const auto& e : j.at("undirected")) g.undirected.push_back(link_from_json(index, e));
    }
    return g;
  });
}

GraphDoc to_doc(const skeleton::SkeletonGraph& g) { return {g.nodes, g.links, {}}; }
GraphDoc to_doc(const refine::RefineResult& r) { return {r.dag.nodes, r.dag.edges, r.undirected}; }
skeleton::SkeletonGraph to_skeleton(const GraphDoc& doc) { return {doc.nodes, doc.edges}; }

refine::RefineResult to_refined(const GraphDoc& doc) {
  refine::RefineResult r{{doc.nodes, doc.edges}, doc.undirected};
  try {
    r.dag.validate();
  } catch (const InvariantError& e) {
    throw InputError(std::string("graph is not a temporal DAG: ") + e.what());
  }
  return r;
}

json model_to_json(const bn::BayesNetModel& model) {
  json j;
  j["ess"] = model.ess();
  j["nodes"] = json::array();
  for (std::size_t v = 0; v < model.size(); ++v) {
    const auto& cpd = model.cpds()[v];
    json parents = json::array();
    for (auto p : cpd.parents) parents.push_back(model.nodes()[p]);
    j["nodes"].push_back(json{{"name", model.nodes()[v]}, {"parents", parents}, {"p_one", cpd.p_one}});
  }
  return j;
}

bn::BayesNetModel model_from_json(const json& j) {
  return guarded("model", [&] {
    std::vector<std::string> names;
    for (const auto& n : j.at("nodes")) names.push_back(n.at("name").get<std::string>());
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < names.size(); ++i) index.emplace(names[i], i);
    std::vector<bn::Cpd> cpds;
    for (const auto& n : j.at("nodes")) {
      bn::Cpd c;
      for (const auto& p : n.at("parents")) {
        const auto it = index.find(p.get<std::string>());
        if (it == index.end()) throw InputError("model: unknown parent '" + p.get<std::string>() + "'");
        c.parents.push_back(it->second);
      }
      c.p_one = n.at("p_one").get<std::vector<double>>();
      cpds.push_back(std::move(c));
    }
    try {
      return bn::BayesNetModel(std::move(names), std::move(cpds), j.at("ess").get<double>());
    } catch (const InvariantError& e) {
      throw InputError(std::string("model: ") + e.what());
    }
  });
}

json metrics_to_json(const eval::MetricsReport& m) {
  return json{{"precision", m.precision},
              {"recall", m.recall},
              {"f1", m.f1},
              {"fpr", m.fpr},
              {"aprc", m.aprc},
              {"shd", m.shd},
              {"shdu", m.shdu},
              {"counts",
               {{"tp", m.diff.tp},
                {"fp", m.diff.fp},
                {"fn", m.diff.fn},
                {"tn", m.diff.tn},
                {"rv", m.diff.rv},
                {"ue", m.diff.ue},
                {"um", m.diff.um}}}};
}

json report_to_json(const sparse::CompressionReport& r) {
  json ranges = json::array();
  for (const auto& [a, b] : r.kept_ranges()) ranges.push_back({a, b});
  return json{{"original_length", r.original_length},
              {"compressed_length", r.compressed_length},
              {"ratio", r.ratio()},
              {"l_m", r.l_m},
              {"kept_index_ranges", ranges}};
}

json bench_to_json(const std::vector<eval::BenchRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json j{{"l_m", r.l_m},
           {"original_length", r.original_length},
           {"compressed_length", r.compressed_length},
           {"skeleton_seconds", r.skeleton_seconds},
           {"skeleton_links", r.skeleton_links}};
    if (r.metrics) j["metrics"] = metrics_to_json(*r.metrics);
    out.push_back(std::move(j));
  }
  return out;
}

eval::SyntheticSpec spec_from_json(const json& j) {
  return guarded("spec", [&] {
    eval::SyntheticSpec s;
    auto count = [&](const char* key, std::size_t fallback) {
      const auto v = j.value(key, static_cast<long long>(fallback));
      if (v < 0) throw InputError(std::string("spec: '") + key + "' must be >= 0");
      return static_cast<std::size_t>(v);
    };
    s.n_nodes = count("n_nodes", s.n_nodes);
    s.max_lag = j.value("max_lag", s.max_lag);
    s.edge_probability = j.value("edge_probability", s.edge_probability);
    s.propagation_probability = j.value("propagation_probability", s.propagation_probability);
    s.base_rate = j.value("base_rate", s.base_rate);
    s.n_samples = count("n_samples", s.n_samples);
    s.seed = j.value("seed", s.seed);
    s.lag0_probability = j.value("lag0_probability", s.lag0_probability);
    s.validate();
    return s;
  });
}

json spec_to_json(const eval::SyntheticSpec& s) {
  return json{{"n_nodes", s.n_nodes},
              {"max_lag", s.max_lag},
              {"edge_probability", s.edge_probability},
              {"propagation_probability", s.propagation_probability},
              {"base_rate", s.base_rate},
              {"n_samples", s.n_samples},
              {"seed", s.seed},
              {"lag0_probability", s.lag0_probability}};
}

json read_json(const std::filesystem::path& path) {
  const auto text = ts::read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": invalid JSON: " + e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_json(const std::filesystem::path& path, const json& j) { ts::write_file(path, dump(j)); }

}  // namespace anomalycd::io
