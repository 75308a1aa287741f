#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "anomalycd/bayes_net.hpp"
#include "anomalycd/config.hpp"
#include "anomalycd/metrics.hpp"
#include "anomalycd/online_ad.hpp"
#include "anomalycd/refine.hpp"
#include "anomalycd/skeleton.hpp"
#include "anomalycd/sparse.hpp"
#include "anomalycd/timeseries.hpp"

namespace anomalycd::pipeline {

struct StageTime {
  std::string stage;
  double seconds = 0.0;
};

struct Artifacts {
  ts::FlagMatrix flags;
  ts::FlagMatrix compressed;
  sparse::CompressionReport report;
  sparse::PriorLinkSet priors{0, 1};
  skeleton::SkeletonGraph skeleton;
  refine::RefineResult refined;
  bn::BayesNetModel model;
  std::optional<eval::MetricsReport> metrics;
  std::vector<StageTime> times;
  std::vector<std::string> warnings;
};

struct RunOptions {
  unsigned threads = 1;
  std::optional<std::filesystem::path> out_dir;  // artifacts are written only when set
};

/// Fixed artifact file names inside the output directory.
inline constexpr const char* kFlagsFile = "flags.csv";
inline constexpr const char* kCompressedFile = "flags_compressed.csv";
inline constexpr const char* kReportFile = "compression.json";
inline constexpr const char* kSkeletonFile = "skeleton.json";
inline constexpr const char* kDagFile = "dag.json";
inline constexpr const char* kModelFile = "model.json";
inline constexpr const char* kMetricsFile = "metrics.json";
inline constexpr const char* kManifestFile = "manifest.json";

/// Discovery from a flag matrix: priors (raw flags) -> compression -> skeleton -> refine -> fit.
/// With use_pruning off, metrics score the unpruned skeleton summary.
Artifacts run_from_flags(const config::PipelineConfig& cfg, const ts::FlagMatrix& flags,
                         const std::optional<eval::SummaryGraph>& reference, const RunOptions& options);

/// detect -> run_from_flags. Stage failures surface as StageError naming the stage.
Artifacts run_pipeline(const config::PipelineConfig& cfg, const ts::TimeFrame& frame,
                       const std::optional<ts::OperationMask>& mask,
                       const std::optional<eval::SummaryGraph>& reference, const RunOptions& options);

}  // namespace anomalycd::pipeline
