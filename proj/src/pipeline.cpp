#include "anomalycd/pipeline.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>
#include <fftw3.h>
#include <spdlog/spdlog.h>

#include <chrono>

#include "anomalycd/error.hpp"
#include "anomalycd/graph_io.hpp"

#ifndef ANOMALYCD_VERSION
#define ANOMALYCD_VERSION "0.0.0"
#endif

namespace anomalycd::pipeline {

namespace {

template <typename F>
auto stage(const char* name, std::vector<StageTime>& times, F&& body) {
  spdlog::info("stage {} started", name);
  const auto start = std::chrono::steady_clock::now();
  auto record = [&] {
    const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start;
    times.push_back({name, d.count()});
    spdlog::info("stage {} finished in {:.3f} s", name, d.count());
  };
  try {
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      record();
    } else {
      auto out = body();
      record();
      return out;
    }
  } catch (const InputError& e) {
    throw InputError(std::string(name) + ": " + e.what());
  } catch (const InvariantError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

io::json manifest(const config::PipelineConfig& cfg, const Artifacts& a, bool with_metrics) {
  io::json m;
  m["config_hash"] = config::config_hash(cfg);
  m["config"] = config::canonical_text(cfg);
  m["versions"] = {{"anomalycd", std::string(ANOMALYCD_VERSION)},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"boost", std::string(BOOST_LIB_VERSION)},
                   {"fftw", std::string(fftw_version)}};
  io::json stages = io::json::array();
  for (const auto& t : a.times) stages.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  m["stages"] = stages;
  m["warnings"] = a.warnings;
  io::json files = {kFlagsFile, kCompressedFile, kReportFile, kSkeletonFile, kDagFile, kModelFile};
  if (with_metrics) files.push_back(kMetricsFile);
  m["artifacts"] = files;
  return m;
}

void write_artifacts(const config::PipelineConfig& cfg, Artifacts& a, const std::filesystem::path& dir) {
  stage("write", a.times, [&] {
    std::filesystem::create_directories(dir);
    ts::write_flags_csv(a.flags, dir / kFlagsFile, cfg.timestamp_column);
    ts::write_flags_csv(a.compressed, dir / kCompressedFile, cfg.timestamp_column);
    io::write_json(dir / kReportFile, io::report_to_json(a.report));
    io::write_json(dir / kSkeletonFile, io::graph_to_json(io::to_doc(a.skeleton)));
    io::write_json(dir / kDagFile, io::graph_to_json(io::to_doc(a.refined)));
    io::write_json(dir / kModelFile, io::model_to_json(a.model));
    if (a.metrics) io::write_json(dir / kMetricsFile, io::metrics_to_json(*a.metrics));
  });
  io::write_json(dir / kManifestFile, manifest(cfg, a, a.metrics.has_value()));
}

}  // namespace

Artifacts run_from_flags(const config::PipelineConfig& cfg, const ts::FlagMatrix& flags,
                         const std::optional<eval::SummaryGraph>& reference, const RunOptions& options) {
  cfg.validate();
  Artifacts a;
  a.flags = flags;
  const auto nc = flags.num_channels();

  a.priors = stage("priors", a.times, [&] {
    return cfg.use_priors ? sparse::compute_prior_links(flags, cfg.tau_max, cfg.alpha_tau, cfg.onset_mode)
                          : sparse::PriorLinkSet::all(nc, cfg.tau_max);
  });
  stage("compress", a.times, [&] {
    if (cfg.use_compression) {
      auto c = sparse::compress_sparse(flags, cfg.l_m);
      a.compressed = std::move(c.flags);
      a.report = std::move(c.report);
    } else {
      a.compressed = flags;
      a.report.original_length = a.report.compressed_length = flags.length();
      a.report.l_m = 0;
      a.report.kept_indices.resize(flags.length());
      for (std::size_t t = 0; t < flags.length(); ++t) a.report.kept_indices[t] = t;
    }
    spdlog::info("compressed {} -> {} samples", a.report.original_length, a.report.compressed_length);
  });
  a.skeleton = stage("discover", a.times, [&] {
    return skeleton::learn_skeleton(a.compressed, cfg.skeleton_options(options.threads), a.priors);
  });
  a.refined = stage("refine", a.times, [&] { return refine::prune(a.skeleton, a.compressed, cfg.refine_options()); });
  a.model = stage("fit-bn", a.times, [&] {
    const auto u = bn::unroll(flags, a.refined.dag);
    return bn::fit(u.data, u.graph, cfg.ess);
  });
  if (reference) {
    a.metrics = stage("evaluate", a.times, [&] {
      const auto est = cfg.use_pruning ? eval::summarize(a.refined)
                                       : eval::summarize(a.skeleton.nodes, a.skeleton.links);
      return eval::evaluate(est, *reference);
    });
  }

  if (options.out_dir) write_artifacts(cfg, a, *options.out_dir);
  return a;
}

Artifacts run_pipeline(const config::PipelineConfig& cfg, const ts::TimeFrame& frame,
                       const std::optional<ts::OperationMask>& mask,
                       const std::optional<eval::SummaryGraph>& reference, const RunOptions& options) {
  cfg.validate();
  std::vector<StageTime> times;
  auto detected = stage("detect", times, [&] {
    ts::TimeFrame f = mask ? ts::apply_mask(frame, *mask) : frame;
    if (cfg.max_gap > 0.0) f = ts::interpolate_gaps(f, cfg.max_gap, f.interval);
    return ad::detect(f, cfg.detector, options.threads);
  });
  for (const auto& w : detected.warnings) spdlog::warn("{}", w);

  RunOptions inner = options;
  inner.out_dir.reset();
  Artifacts a = run_from_flags(cfg, detected.flags, reference, inner);
  a.times.insert(a.times.begin(), times.begin(), times.end());
  a.warnings = detected.warnings;
  if (options.out_dir) write_artifacts(cfg, a, *options.out_dir);
  return a;
}

}  // namespace anomalycd::pipeline
