#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "anomalycd/bayes_net.hpp"
#include "anomalycd/benchmark.hpp"
#include "anomalycd/metrics.hpp"
#include "anomalycd/refine.hpp"
#include "anomalycd/skeleton.hpp"
#include "anomalycd/sparse.hpp"
#include "anomalycd/synthetic.hpp"

namespace anomalycd::io {

using json = nlohmann::ordered_json;

/// Nodes plus lagged edges; `undirected` is empty for skeletons.
struct GraphDoc {
  std::vector<std::string> nodes;
  std::vector<skeleton::LaggedLink> edges;
  std::vector<skeleton::LaggedLink> undirected;
};

/// {"nodes": [...], "edges": [{"source","target","lag","weight","p_value"}], "undirected": [...]}.
/// Edge endpoints are node names. Missing lag/weight/p_value default to 0/1/0.
json graph_to_json(const GraphDoc& graph);
GraphDoc graph_from_json(const json& j);

GraphDoc to_doc(const skeleton::SkeletonGraph& g);
GraphDoc to_doc(const refine::RefineResult& r);
skeleton::SkeletonGraph to_skeleton(const GraphDoc& doc);
refine::RefineResult to_refined(const GraphDoc& doc);  // validates the DAG

json model_to_json(const bn::BayesNetModel& model);
bn::BayesNetModel model_from_json(const json& j);

json metrics_to_json(const eval::MetricsReport& m);
json report_to_json(const sparse::CompressionReport& r);
json bench_to_json(const std::vector<eval::BenchRow>& rows);
eval::SyntheticSpec spec_from_json(const json& j);
json spec_to_json(const eval::SyntheticSpec& spec);

json read_json(const std::filesystem::path& path);  // throws InputError
/// Two-space indented with a trailing newline.
std::string dump(const json& j);
void write_json(const std::filesystem::path& path, const json& j);

}  // namespace anomalycd::io
