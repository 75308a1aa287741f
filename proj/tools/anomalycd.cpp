#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "anomalycd/bayes_net.hpp"
#include "anomalycd/benchmark.hpp"
#include "anomalycd/config.hpp"
#include "anomalycd/error.hpp"
#include "anomalycd/graph_io.hpp"
#include "anomalycd/metrics.hpp"
#include "anomalycd/online_ad.hpp"
#include "anomalycd/pipeline.hpp"
#include "anomalycd/refine.hpp"
#include "anomalycd/skeleton.hpp"
#include "anomalycd/sparse.hpp"
#include "anomalycd/synthetic.hpp"
#include "anomalycd/timeseries.hpp"

using namespace anomalycd;

namespace {

enum Exit { kOk = 0, kInput = 2, kStage = 3, kInvariant = 4 };

// Command-line values layered over the config file.
struct Settings {
  std::string config_path;
  config::KeyValues overrides;
  std::vector<std::string> sets;
  unsigned threads = 1;
  std::optional<std::uint64_t> seed;
  std::string log_level = "info";

  config::PipelineConfig resolve() const {
    config::PipelineConfig cfg;
    if (!config_path.empty()) config::apply(cfg, config::parse_key_values(ts::read_file(config_path)));
    config::KeyValues extra = overrides;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw InputError("--set expects KEY=VALUE, got '" + s + "'");
      const auto parsed = config::parse_key_values(s.substr(0, eq) + " = " + s.substr(eq + 1));
      extra.insert(parsed.begin(), parsed.end());
    }
    config::apply(cfg, extra);
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
  }
};

// Adds `--name` whose value overrides config key `key`.
void keyed(CLI::App* app, Settings& s, const std::string& name, const std::string& key, const std::string& help) {
  app->add_option_function<std::string>(
      name, [&s, key](const std::string& v) { s.overrides[key] = {v}; }, help);
}

void keyed_flag(CLI::App* app, Settings& s, const std::string& name, const std::string& key, bool value,
                const std::string& help) {
  app->add_flag_callback(name, [&s, key, value] { s.overrides[key] = {value ? "true" : "false"}; }, help);
}

std::pair<std::string, int> parse_state(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) return {text, 1};
  const auto state = text.substr(eq + 1);
  if (state != "0" && state != "1") throw InputError("state must be 0 or 1 in '" + text + "'");
  return {text.substr(0, eq), state == "1" ? 1 : 0};
}

std::vector<std::string> split_commas(const std::vector<std::string>& parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) {
    std::size_t start = 0;
    while (start <= p.size()) {
      const auto comma = p.find(',', start);
      const auto piece = p.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!piece.empty()) out.push_back(piece);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return out;
}

eval::SummaryGraph load_reference(const std::string& path) {
  const auto doc = io::graph_from_json(io::read_json(path));
  return eval::summarize(doc.nodes, doc.edges, doc.undirected);
}

ts::TimeFrame scores_frame(const ts::TimeFrame& frame, const ad::DetectionResult& r) {
  ts::TimeFrame out;
  out.timestamps = frame.timestamps;
  out.interval = frame.interval;
  out.time_format = frame.time_format;
  out.segment_starts = frame.segment_starts;
  for (std::size_t c = 0; c < frame.num_channels(); ++c) {
    const auto& s = r.scores[c];
    const std::pair<const char*, const std::vector<double>*> streams[] = {
        {"_theta", &s.lambda_theta}, {"_iota", &s.lambda_iota}, {"_eta", &s.lambda_eta}};
    for (const auto& [suffix, values] : streams) {
      out.channels.push_back(frame.channels[c] + suffix);
      std::vector<ts::Cell> col(frame.rows());
      for (std::size_t t = 0; t < frame.rows() && t < values->size(); ++t) col[t] = (*values)[t];
      out.values.push_back(std::move(col));
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("anomalycd");
  spdlog::set_default_logger(logger);

  CLI::App app{"Causal discovery on binary anomaly-flag time series"};
  app.require_subcommand(1);
  app.fallthrough();
  Settings s;
  app.add_option("--config", s.config_path, "Key = value config file; command-line values override it");
  app.add_option("--threads", s.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  app.add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { s.seed = v; }, "Seed for all randomness");
  app.add_option("--log-level", s.log_level, "trace, debug, info, warn, error or off");
  app.add_option("--set", s.sets, "Config override KEY=VALUE (repeatable)");

  // detect
  auto* detect = app.add_subcommand("detect", "Flag anomalies in a sensor CSV");
  std::string d_input, d_out, d_mask, d_scores;
  detect->add_option("--input", d_input, "Sensor CSV")->required();
  detect->add_option("--out", d_out, "Flags CSV")->required();
  detect->add_option("--mask", d_mask, "Operation mask CSV (timestamp,active)");
  detect->add_option("--scores", d_scores, "Per-detector score CSV");
  keyed(detect, s, "--ts-col", "timestamp_column", "Timestamp column name");
  keyed(detect, s, "--alpha-theta", "alpha_theta", "Moving-SD threshold");
  keyed(detect, s, "--w-theta", "w_theta", "Moving-SD window");
  keyed(detect, s, "--alpha-iota", "alpha_iota", "Trend-drift threshold");
  keyed(detect, s, "--k-iota", "k_iota", "Trend step scale");
  keyed(detect, s, "--p-iota", "p_iota", "Decomposition period or 'auto'");
  keyed(detect, s, "--alpha-eta", "alpha_eta", "Spectral threshold");
  keyed(detect, s, "--q-eta", "q_eta", "Spectral kernel");
  keyed(detect, s, "--max-gap", "max_gap", "Longest interpolated gap (timestamp units)");

  // compress
  auto* compress = app.add_subcommand("compress", "Drop long uniform joint-state runs");
  std::string c_flags, c_out, c_report;
  compress->add_option("--flags", c_flags, "Flags CSV")->required();
  compress->add_option("--out", c_out, "Compressed flags CSV")->required();
  compress->add_option("--report", c_report, "Compression report JSON");
  keyed(compress, s, "--lm", "l_m", "Samples kept per run");
  keyed(compress, s, "--ts-col", "timestamp_column", "Timestamp column name");

  // discover
  auto* discover = app.add_subcommand("discover", "Learn the lagged skeleton");
  std::string s_flags, s_out;
  discover->add_option("--flags", s_flags, "Flags CSV (raw flags give the priors their intended geometry)")->required();
  discover->add_option("--out", s_out, "Skeleton JSON")->required();
  keyed(discover, s, "--tau-max", "tau_max", "Largest lag");
  keyed(discover, s, "--alpha", "alpha", "Link significance");
  keyed(discover, s, "--alpha-pc", "alpha_pc", "Parent-selection significance");
  keyed(discover, s, "--alpha-tau", "alpha_tau", "Prior overlap threshold");
  keyed(discover, s, "--max-conds", "max_conds", "Parent-selection conditioning cap");
  keyed(discover, s, "--mci-mode", "mci_mode", "full or target-only");
  keyed(discover, s, "--lm", "l_m", "Samples kept per run");
  keyed(discover, s, "--onset-mode", "onset_mode", "onsets or signed");
  keyed(discover, s, "--ts-col", "timestamp_column", "Timestamp column name");
  keyed_flag(discover, s, "--no-priors", "use_priors", false, "Test every ordered pair");
  keyed_flag(discover, s, "--no-compress", "use_compression", false, "Skip compression");
  keyed_flag(discover, s, "--no-anac", "use_anac", false, "Accept negative associations");

  // refine
  auto* refine_cmd = app.add_subcommand("refine", "Prune a skeleton into a temporal DAG");
  std::string r_skeleton, r_flags, r_out;
  refine_cmd->add_option("--skeleton", r_skeleton, "Skeleton JSON")->required();
  refine_cmd->add_option("--flags", r_flags, "Flags CSV the skeleton was learned from")->required();
  refine_cmd->add_option("--out", r_out, "DAG JSON")->required();
  keyed_flag(refine_cmd, s, "--direct-t0", "direct_t0", true, "Orient tied contemporaneous pairs by chi-square");
  keyed(refine_cmd, s, "--t0-orient", "t0_orient", "chi2 or lex fallback orientation");
  keyed(refine_cmd, s, "--tau-max", "tau_max", "Onset window");
  keyed(refine_cmd, s, "--ts-col", "timestamp_column", "Timestamp column name");

  // fit-bn
  auto* fit_cmd = app.add_subcommand("fit-bn", "Fit the Bayesian network");
  std::string f_flags, f_dag, f_out;
  fit_cmd->add_option("--flags", f_flags, "Flags CSV")->required();
  fit_cmd->add_option("--dag", f_dag, "DAG JSON")->required();
  fit_cmd->add_option("--out", f_out, "Model JSON")->required();
  keyed(fit_cmd, s, "--ess", "ess", "Equivalent sample size");
  keyed(fit_cmd, s, "--ts-col", "timestamp_column", "Timestamp column name");

  // query
  auto* query = app.add_subcommand("query", "Conditional probability or d-connection");
  std::string q_model, q_target;
  std::vector<std::string> q_evidence, q_path;
  query->add_option("--model", q_model, "Model JSON")->required();
  auto* q_target_opt = query->add_option("--target", q_target, "NODE=STATE");
  auto* q_path_opt = query->add_option("--path", q_path, "SOURCE TARGET")->expected(2);
  q_target_opt->excludes(q_path_opt);
  query->add_option("--evidence", q_evidence, "NODE=STATE list, comma separated");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Compare an estimated graph with a reference");
  std::string e_est, e_ref, e_out;
  bool e_directed_only = false;
  evaluate->add_option("--estimated", e_est, "Estimated graph JSON")->required();
  evaluate->add_option("--reference", e_ref, "Reference graph JSON")->required();
  evaluate->add_option("--out", e_out, "Metrics JSON")->required();
  evaluate->add_flag("--directed-only", e_directed_only, "Ignore the undirected list of the estimate");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate synthetic flags with a known graph");
  std::string m_spec, m_out, m_truth;
  simulate->add_option("--spec", m_spec, "Spec JSON")->required();
  simulate->add_option("--out", m_out, "Flags CSV")->required();
  simulate->add_option("--truth", m_truth, "Ground-truth graph JSON")->required();

  // bench
  auto* bench = app.add_subcommand("bench", "Compression and skeleton timing over l_m");
  std::string b_flags, b_ref, b_out, b_lm = "10,15,20,25,30";
  std::size_t b_repeats = 1;
  bench->add_option("--flags", b_flags, "Flags CSV")->required();
  bench->add_option("--lm", b_lm, "Comma-separated l_m grid");
  bench->add_option("--reference", b_ref, "Reference graph JSON");
  bench->add_option("--out", b_out, "Bench JSON")->required();
  bench->add_option("--repeats", b_repeats, "Timing repeats (fastest kept)")->check(CLI::PositiveNumber);
  keyed(bench, s, "--tau-max", "tau_max", "Largest lag");
  keyed(bench, s, "--alpha", "alpha", "Link significance");
  keyed_flag(bench, s, "--no-priors", "use_priors", false, "Test every ordered pair");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "detect -> compress -> discover -> refine -> fit-bn");
  std::string p_input, p_flags, p_mask, p_ref, p_out;
  auto* p_input_opt = pipe->add_option("--input", p_input, "Sensor CSV");
  auto* p_flags_opt = pipe->add_option("--flags", p_flags, "Start from a flags CSV instead");
  p_input_opt->excludes(p_flags_opt);
  pipe->add_option("--mask", p_mask, "Operation mask CSV");
  pipe->add_option("--reference", p_ref, "Reference graph JSON for metrics");
  pipe->add_option("--out-dir", p_out, "Artifact directory")->required();
  keyed(pipe, s, "--lm", "l_m", "Samples kept per run");
  keyed(pipe, s, "--tau-max", "tau_max", "Largest lag");
  keyed(pipe, s, "--alpha", "alpha", "Link significance");
  keyed(pipe, s, "--alpha-eta", "alpha_eta", "Spectral threshold");
  keyed(pipe, s, "--ts-col", "timestamp_column", "Timestamp column name");
  keyed_flag(pipe, s, "--no-priors", "use_priors", false, "Test every ordered pair");
  keyed_flag(pipe, s, "--no-compress", "use_compression", false, "Skip compression");
  keyed_flag(pipe, s, "--no-anac", "use_anac", false, "Accept negative associations");
  keyed_flag(pipe, s, "--no-pruning", "use_pruning", false, "Score the unpruned skeleton");
  keyed_flag(pipe, s, "--direct-t0", "direct_t0", true, "Orient tied contemporaneous pairs by chi-square");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }
  spdlog::set_level(spdlog::level::from_str(s.log_level));

  try {
    const auto cfg = s.resolve();
    const auto& col = cfg.timestamp_column;

    if (detect->parsed()) {
      auto frame = ts::load_csv(d_input, col);
      if (!d_mask.empty()) frame = ts::apply_mask(frame, ts::load_mask_csv(d_mask));
      if (cfg.max_gap > 0.0) frame = ts::interpolate_gaps(frame, cfg.max_gap, frame.interval);
      const auto result = ad::detect(frame, cfg.detector, s.threads);
      for (const auto& w : result.warnings) spdlog::warn("{}", w);
      ts::write_flags_csv(result.flags, d_out, col);
      if (!d_scores.empty()) ts::write_csv(scores_frame(frame, result), d_scores, col);
    } else if (compress->parsed()) {
      const auto c = sparse::compress_sparse(ts::load_flags_csv(c_flags, col), cfg.l_m);
      spdlog::info("compressed {} -> {} samples", c.report.original_length, c.report.compressed_length);
      ts::write_flags_csv(c.flags, c_out, col);
      if (!c_report.empty()) io::write_json(c_report, io::report_to_json(c.report));
    } else if (discover->parsed()) {
      const auto flags = ts::load_flags_csv(s_flags, col);
      const auto priors = cfg.use_priors
                              ? sparse::compute_prior_links(flags, cfg.tau_max, cfg.alpha_tau, cfg.onset_mode)
                              : sparse::PriorLinkSet::all(flags.num_channels(), cfg.tau_max);
      const auto input = cfg.use_compression ? sparse::compress_sparse(flags, cfg.l_m).flags : flags;
      const auto g = skeleton::learn_skeleton(input, cfg.skeleton_options(s.threads), priors);
      spdlog::info("{} links over {} samples", g.links.size(), input.length());
      io::write_json(s_out, io::graph_to_json(io::to_doc(g)));
    } else if (refine_cmd->parsed()) {
      const auto skel = io::to_skeleton(io::graph_from_json(io::read_json(r_skeleton)));
      auto flags = ts::load_flags_csv(r_flags, col);
      // Align channels with the skeleton's node order.
      std::vector<std::vector<std::uint8_t>> cols;
      for (const auto& n : skel.nodes) {
        const auto c = flags.find_channel(n);
        if (!c) throw InputError("refine: skeleton node '" + n + "' missing from flags");
        const auto ch = flags.channel(*c);
        cols.emplace_back(ch.begin(), ch.end());
      }
      const ts::FlagMatrix aligned(skel.nodes, flags.timestamps(), std::move(cols), flags.time_format());
      const auto result = refine::prune(skel, aligned, cfg.refine_options());
      io::write_json(r_out, io::graph_to_json(io::to_doc(result)));
    } else if (fit_cmd->parsed()) {
      const auto dag = io::to_refined(io::graph_from_json(io::read_json(f_dag))).dag;
      const auto u = bn::unroll(ts::load_flags_csv(f_flags, col), dag);
      io::write_json(f_out, io::model_to_json(bn::fit(u.data, u.graph, cfg.ess)));
    } else if (query->parsed()) {
      const auto model = io::model_from_json(io::read_json(q_model));
      const auto evidence = split_commas(q_evidence);
      if (!q_path.empty()) {
        std::vector<std::string> names;
        for (const auto& e : evidence) names.push_back(parse_state(e).first);
        std::cout << (bn::check_causal_path(model, q_path[0], q_path[1], names) ? "true" : "false") << "\n";
      } else {
        if (q_target.empty()) throw InputError("query: give --target or --path");
        bn::Assignment ev;
        for (const auto& e : evidence) ev.push_back(parse_state(e));
        const auto r = bn::query_cp(model, parse_state(q_target), ev);
        std::cout << ts::format_double(r.probability) << "\n";
      }
    } else if (evaluate->parsed()) {
      const auto doc = io::graph_from_json(io::read_json(e_est));
      const auto est = eval::summarize(doc.nodes, doc.edges, e_directed_only ? decltype(doc.undirected){} : doc.undirected);
      io::write_json(e_out, io::metrics_to_json(eval::evaluate(est, load_reference(e_ref))));
    } else if (simulate->parsed()) {
      auto spec = io::spec_from_json(io::read_json(m_spec));
      if (s.seed) spec.seed = *s.seed;
      const auto data = eval::generate_synthetic(spec);
      ts::write_flags_csv(data.flags, m_out, col);
      io::write_json(m_truth, io::graph_to_json({data.truth.nodes, data.truth.edges, {}}));
    } else if (bench->parsed()) {
      eval::BenchOptions o;
      o.l_m_grid.clear();
      for (const auto& v : split_commas({b_lm})) {
        std::size_t pos = 0;
        long long x = -1;
        try {
          x = std::stoll(v, &pos);
        } catch (const std::exception&) {
        }
        if (x < 1 || pos != v.size()) throw InputError("bench: bad l_m '" + v + "'");
        o.l_m_grid.push_back(static_cast<std::size_t>(x));
      }
      o.skeleton = cfg.skeleton_options(s.threads);
      o.refine = cfg.refine_options();
      o.use_priors = cfg.use_priors;
      o.alpha_tau = cfg.alpha_tau;
      o.onset_mode = cfg.onset_mode;
      o.repeats = b_repeats;
      std::optional<eval::SummaryGraph> ref;
      if (!b_ref.empty()) ref = load_reference(b_ref);
      const auto rows = eval::benchmark(ts::load_flags_csv(b_flags, col), o, ref ? &*ref : nullptr);
      io::write_json(b_out, io::bench_to_json(rows));
    } else if (pipe->parsed()) {
      if (p_input.empty() && p_flags.empty()) throw InputError("pipeline: give --input or --flags");
      std::optional<eval::SummaryGraph> ref;
      if (!p_ref.empty()) ref = load_reference(p_ref);
      pipeline::RunOptions ro;
      ro.threads = s.threads;
      ro.out_dir = p_out;
      if (!p_flags.empty()) {
        pipeline::run_from_flags(cfg, ts::load_flags_csv(p_flags, col), ref, ro);
      } else {
        std::optional<ts::OperationMask> mask;
        if (!p_mask.empty()) mask = ts::load_mask_csv(p_mask);
        pipeline::run_pipeline(cfg, ts::load_csv(p_input, col), mask, ref, ro);
      }
    }
    return kOk;
  } catch (const InputError& e) {
    spdlog::error("input error: {}", e.what());
    return kInput;
  } catch (const StageError& e) {
    spdlog::error("stage '{}' failed: {}", e.stage(), e.what());
    return kStage;
  } catch (const InvariantError& e) {
    spdlog::error("invariant violated: {}", e.what());
    return kInvariant;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kStage;
  }
}
