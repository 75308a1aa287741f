// One PASS / FAIL / SKIP line per acceptance criterion. Exit status 1 when any criterion fails.

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "anomalycd/bayes_net.hpp"
#include "anomalycd/benchmark.hpp"
#include "anomalycd/config.hpp"
#include "anomalycd/graph_io.hpp"
#include "anomalycd/metrics.hpp"
#include "anomalycd/online_ad.hpp"
#include "anomalycd/pipeline.hpp"
#include "anomalycd/refine.hpp"
#include "anomalycd/sparse.hpp"
#include "anomalycd/synthetic.hpp"
#include "oracles/gen.hpp"
#include "oracles/graphs.hpp"

using namespace anomalycd;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome verdict(bool ok, const std::string& detail) { return {ok ? Status::Pass : Status::Fail, detail}; }

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Every joint-state transition survives compression.
Outcome transition_preservation() {
  const auto start = Clock::now();
  oracle::Rng rng(1);
  std::size_t violations = 0, transitions = 0;
  for (int fixture = 0; fixture < 1000; ++fixture) {
    const auto n = static_cast<std::size_t>(rng.integer(1, 16));
    const auto len = static_cast<std::size_t>(rng.integer(1, 10000));
    const auto f = oracle::random_run_flags(rng, n, len);
    const auto runs = oracle::joint_runs(f);
    for (std::size_t l_m : {1u, 5u, 10u}) {
      const auto kept = sparse::compress_sparse(f, l_m).report.kept_indices;
      for (std::size_t r = 1; r < runs.size(); ++r) {
        ++transitions;
        if (!std::binary_search(kept.begin(), kept.end(), runs[r].first)) ++violations;
      }
    }
  }
  const double secs = seconds_since(start);
  return verdict(violations == 0 && secs < 10.0,
                 fmt("%zu violations over %zu transitions, %.2f s (budget 10 s)", violations, transitions, secs));
}

// 400K samples x 12 channels with 30 propagating anomaly episodes.
ts::FlagMatrix long_fixture() {
  const std::size_t n = 400000, channels = 12;
  oracle::Rng rng(400);
  std::vector<std::vector<std::uint8_t>> f(channels, std::vector<std::uint8_t>(n, 0));
  const std::size_t episodes = 30, spacing = n / episodes;
  for (std::size_t e = 0; e < episodes; ++e) {
    const std::size_t t0 = e * spacing + static_cast<std::size_t>(rng.integer(100, static_cast<long>(spacing) - 500));
    const std::size_t root = 3 * static_cast<std::size_t>(rng.integer(0, 3));
    const auto dur = static_cast<std::size_t>(rng.integer(20, 60));
    // root -> root+1 (lag 2) -> root+2 (lag 1)
    std::size_t start = t0;
    for (std::size_t c = root; c < root + 3; ++c) {
      for (std::size_t t = start; t < start + dur; ++t) f[c][t] = 1;
      if (!rng.chance(0.9)) break;
      start += c == root ? 2 : 1;
    }
  }
  return oracle::make_flags(std::move(f));
}

// 2. Compression ratio and skeleton speedup on the long fixture.
Outcome compression_speedup(const ts::FlagMatrix& flags) {
  const auto start = Clock::now();
  const auto c = sparse::compress_sparse(flags, 10);
  const skeleton::SkeletonOptions o;
  const auto priors = sparse::compute_prior_links(flags, o.tau_max, 0.01);
  const double t_comp = eval::time_skeleton(c.flags, o, priors, 5);
  const double t_raw = eval::time_skeleton(flags, o, priors, 1);
  const double ratio = c.report.ratio(), speedup = t_raw / t_comp;
  const double secs = seconds_since(start);
  return verdict(ratio >= 0.99 && speedup >= 10.0 && secs < 600.0,
                 fmt("%zu -> %zu samples (%.2f%% removed), skeleton %.3f s raw vs %.4f s compressed (%.0fx), %.1f s",
                     c.report.original_length, c.report.compressed_length, 100.0 * ratio, t_raw, t_comp, speedup, secs));
}

// 3. Size and skeleton time both grow over the l_m grid.
Outcome monotone_cost(const ts::FlagMatrix& flags) {
  eval::BenchOptions o;
  o.repeats = 15;
  const auto rows = eval::benchmark(flags, o);
  bool sizes = true, times = true;
  std::ostringstream detail;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k > 0) {
      sizes = sizes && rows[k].compressed_length > rows[k - 1].compressed_length;
      times = times && rows[k].skeleton_seconds > rows[k - 1].skeleton_seconds;
    }
    detail << (k ? ", " : "") << "l_m " << rows[k].l_m << ": " << rows[k].compressed_length << " / "
           << fmt("%.2f ms", 1e3 * rows[k].skeleton_seconds);
  }
  return verdict(sizes && times, detail.str());
}

// 4. Full pipeline recovers generator graphs.
Outcome oracle_recovery() {
  const auto start = Clock::now();
  std::vector<double> f1;
  std::size_t bad_graphs = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    eval::SyntheticSpec spec;
    spec.n_nodes = 4 + seed % 5;
    spec.max_lag = 1 + static_cast<int>(seed % 3);
    spec.n_samples = 5000;
    spec.propagation_probability = 0.8 + 0.01 * static_cast<double>(seed % 11);
    spec.seed = 1000 + seed;
    const auto d = eval::generate_synthetic(spec);
    const auto ref = eval::summarize(d.truth.nodes, d.truth.edges);
    const auto a = pipeline::run_from_flags({}, d.flags, ref, {});
    f1.push_back(a.metrics->f1);
    if (!oracle::dag_violation(a.refined.dag).empty()) ++bad_graphs;
  }
  std::sort(f1.begin(), f1.end());
  const double median = (f1[9] + f1[10]) / 2.0;
  const double secs = seconds_since(start);
  return verdict(median >= 0.8 && bad_graphs == 0 && secs < 300.0,
                 fmt("median F1 %.3f (min %.3f), %zu graphs with loops or cycles, %.2f s", median, f1.front(), bad_graphs,
                     secs));
}

// Evidence assignments: each node absent, 0 or 1.
std::vector<std::pair<std::size_t, int>> evidence_from_code(std::size_t code, std::size_t n) {
  std::vector<std::pair<std::size_t, int>> ev;
  for (std::size_t v = 0; v < n; ++v, code /= 3)
    if (code % 3 != 0) ev.emplace_back(v, static_cast<int>(code % 3) - 1);
  return ev;
}

// 5. Variable elimination equals full-joint enumeration.
Outcome inference_exactness() {
  const auto start = Clock::now();
  oracle::Rng rng(5);
  std::vector<bn::BayesNetModel> models;
  while (models.size() < 40) models.push_back(oracle::random_model(rng, 6, rng.uniform(0.2, 0.8)));
  // Models fitted on unrolled synthetic data with at most six unrolled nodes.
  for (std::uint64_t seed = 0; models.size() < 50; ++seed) {
    eval::SyntheticSpec spec;
    spec.n_nodes = 3;
    spec.edge_probability = 0.7;
    spec.n_samples = 2000;
    spec.base_rate = 0.05;
    spec.seed = seed;
    const auto d = eval::generate_synthetic(spec);
    const auto u = bn::unroll(d.flags, d.truth);
    if (u.graph.nodes.size() > 6 || u.graph.edges.empty()) continue;
    models.push_back(bn::fit(u.data, u.graph, 1.0));
  }
  double worst = 0.0;
  std::size_t queries = 0;
  for (const auto& m : models) {
    const std::size_t n = m.size();
    std::size_t codes = 1;
    for (std::size_t i = 0; i < n; ++i) codes *= 3;
    for (std::size_t code = 0; code < codes; ++code) {
      const auto ev = evidence_from_code(code, n);
      bn::Assignment named;
      for (const auto& [v, s] : ev) named.emplace_back(m.nodes()[v], s);
      for (std::size_t target = 0; target < n; ++target) {
        const double got = bn::query_cp(m, {m.nodes()[target], 1}, named).probability;
        worst = std::max(worst, std::abs(got - oracle::joint_posterior(m, target, ev)));
        ++queries;
      }
    }
  }
  const double secs = seconds_since(start);
  return verdict(worst <= 1e-9 && secs < 120.0,
                 fmt("%zu models, %zu queries, max error %.2e, %.2f s", models.size(), queries, worst, secs));
}

// 6. SHD / SHDU / P / R / F1 against a brute-force comparator.
Outcome metric_fidelity() {
  const std::size_t n = 8;
  eval::SummaryGraph ref(oracle::names(n)), rev(oracle::names(n));
  const std::vector<std::pair<std::size_t, std::size_t>> edges{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5},
                                                               {5, 6}, {6, 7}, {0, 2}, {1, 3}};
  for (const auto& [a, b] : edges) {
    ref.add_edge(a, b, 1.0);
    if (a == 2 && b == 3) rev.add_edge(b, a, 1.0);
    else rev.add_edge(a, b, 1.0);
  }
  const auto r = eval::evaluate(rev, ref);
  const bool reversal_ok = r.shd == 2 && r.shdu == 1;

  oracle::Rng rng(6);
  std::size_t mismatches = 0;
  for (int pair = 0; pair < 200; ++pair) {
    const auto size = static_cast<std::size_t>(rng.integer(2, 10));
    eval::SummaryGraph a(oracle::names(size)), b(oracle::names(size));
    const double pa = rng.uniform(0.0, 0.6), pb = rng.uniform(0.0, 0.6);
    for (std::size_t i = 0; i < size; ++i)
      for (std::size_t j = 0; j < size; ++j) {
        if (i == j) continue;
        if (rng.chance(pa)) a.add_edge(i, j, rng.uniform(0.1, 1.0));
        if (rng.chance(pb)) b.add_edge(i, j, 1.0);
      }
    const auto m = eval::evaluate(a, b);
    const auto brute = oracle::brute_metrics(oracle::adjacency(a), oracle::adjacency(b));
    const bool same = m.shd == brute.shd && m.shdu == brute.shdu && m.precision == brute.precision &&
                      m.recall == brute.recall && m.f1 == brute.f1;
    mismatches += same ? 0 : 1;
  }
  return verdict(reversal_ok && mismatches == 0,
                 fmt("reversal SHD %zu SHDU %zu; %zu of 200 random pairs mismatch", r.shd, r.shdu, mismatches));
}

// 7. prune output is a temporal DAG and prune is idempotent.
Outcome dag_invariants() {
  oracle::Rng rng(7);
  std::size_t violations = 0, unstable = 0, cyclic_inputs = 0, two_way_inputs = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const auto n = static_cast<std::size_t>(rng.integer(2, 9));
    const int tau = static_cast<int>(rng.integer(1, 5));
    const auto s = oracle::random_skeleton(rng, n, tau);
    const auto adj = oracle::summary_adjacency(n, s.links);
    cyclic_inputs += oracle::simple_cycles(adj).empty() ? 0 : 1;
    bool two_way = false;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) two_way = two_way || (adj[i][j] && adj[j][i]);
    two_way_inputs += two_way;

    const auto flags = oracle::random_flags(rng, n, 400, 0.1);
    refine::RefineOptions o;
    o.tau_max = tau;
    o.direct_t0 = rng.chance(0.5);
    o.t0_orient = rng.chance(0.5) ? refine::T0Orient::Chi2 : refine::T0Orient::Lex;
    const auto r = refine::prune(s, flags, o);
    violations += oracle::dag_violation(r.dag).empty() ? 0 : 1;
    const auto again = refine::prune({r.dag.nodes, r.dag.edges}, flags, o);
    unstable += again.dag.edges == r.dag.edges ? 0 : 1;
  }
  return verdict(violations == 0 && unstable == 0,
                 fmt("%zu invariant violations, %zu non-idempotent; inputs with cycles %zu, with two-way pairs %zu",
                     violations, unstable, cyclic_inputs, two_way_inputs));
}

// 8. Detector invariances and decomposition reconstruction.
Outcome ad_invariances() {
  oracle::Rng rng(8);
  std::size_t theta_changes = 0, eta_changes = 0, flagged_signals = 0;
  double worst_recon = 0.0;
  for (int sig = 0; sig < 100; ++sig) {
    const auto n = static_cast<std::size_t>(rng.integer(300, 3000));
    const double period = rng.uniform(8, 100);
    std::vector<double> x(n);
    for (std::size_t t = 0; t < n; ++t)
      x[t] = rng.uniform(0.1, 5) * std::sin(2 * std::numbers::pi * t / period) + rng.normal() + 1e-3 * t;
    for (int k = 0; k < 5; ++k) x[static_cast<std::size_t>(rng.integer(0, static_cast<long>(n) - 1))] += rng.uniform(-20, 20);
    std::vector<double> scaled(n), shifted(n);
    for (std::size_t t = 0; t < n; ++t) {
      scaled[t] = 3.0 * x[t];
      shifted[t] = 3.0 * x[t] + 7.0;
    }
    const auto w = static_cast<std::size_t>(rng.integer(16, 400));
    const auto q = static_cast<std::size_t>(rng.integer(4, 64));
    const auto theta = ad::moving_sd_detect(x, 4.0, w).flags;
    const auto eta = ad::spectral_detect(x, 3.0, q).flags;
    theta_changes += ad::moving_sd_detect(shifted, 4.0, w).flags == theta ? 0 : 1;
    eta_changes += ad::spectral_detect(scaled, 3.0, q).flags == eta ? 0 : 1;
    flagged_signals += std::count(theta.begin(), theta.end(), 1) > 0 && std::count(eta.begin(), eta.end(), 1) > 0;

    const auto p = static_cast<std::size_t>(std::clamp<long>(std::lround(period), 2, static_cast<long>(n / 2)));
    const auto d = ad::decompose(x, p);
    for (std::size_t t = 0; t < n; ++t) worst_recon = std::max(worst_recon, std::abs(d.trend[t] + d.seasonal[t] + d.residual[t] - x[t]));
  }
  return verdict(theta_changes == 0 && eta_changes == 0 && worst_recon < 1e-9,
                 fmt("moving-SD changed on %zu, spectral on %zu of 100 signals (%zu with flags from both); max "
                     "reconstruction error %.2e",
                     theta_changes, eta_changes, flagged_signals, worst_recon));
}

// 9. Public sensor dataset, when present: frame.csv, reference.json, optional mask.csv and config.toml.
Outcome easyvista() {
  const char* dir_env = std::getenv("ANOMALYCD_EASYVISTA_DIR");
  if (!dir_env) return {Status::Skip, "set ANOMALYCD_EASYVISTA_DIR to a directory with frame.csv and reference.json"};
  const fs::path dir(dir_env);
  if (!fs::exists(dir / "frame.csv") || !fs::exists(dir / "reference.json"))
    return {Status::Skip, "frame.csv or reference.json missing under " + dir.string()};

  const auto start = Clock::now();
  config::PipelineConfig cfg;
  cfg.detector.p_iota.reset();
  if (fs::exists(dir / "config.toml")) cfg = config::load_config(dir / "config.toml");
  cfg.detector.alpha_eta = 2.0;
  cfg.l_m = 10;
  cfg.tau_max = 5;
  cfg.alpha = 0.05;
  const auto frame = ts::load_csv(dir / "frame.csv", cfg.timestamp_column);
  std::optional<ts::OperationMask> mask;
  if (fs::exists(dir / "mask.csv")) mask = ts::load_mask_csv(dir / "mask.csv");
  const auto doc = io::graph_from_json(io::read_json(dir / "reference.json"));
  const auto ref = eval::summarize(doc.nodes, doc.edges, doc.undirected);
  const auto a = pipeline::run_pipeline(cfg, frame, mask, ref, {});
  const double secs = seconds_since(start);
  const auto& m = *a.metrics;
  return verdict(m.recall >= 0.55 && m.shdu <= 13 && secs < 60.0,
                 fmt("P %.3f R %.3f F1 %.3f SHDU %zu, %.1f%% compression, %.1f s", m.precision, m.recall, m.f1, m.shdu,
                     100.0 * a.report.ratio(), secs));
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::off);
  int failures = 0;
  auto report = [&](const char* name, const std::function<Outcome()>& body) {
    Outcome o;
    try {
      o = body();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    failures += o.status == Status::Fail;
    std::printf("%s  %-28s %s\n", tag, name, o.detail.c_str());
    std::fflush(stdout);
  };

  report("transition-preservation", transition_preservation);
  const auto fixture = long_fixture();
  report("compression-speedup", [&] { return compression_speedup(fixture); });
  report("monotone-cost", [&] { return monotone_cost(fixture); });
  report("oracle-recovery", oracle_recovery);
  report("inference-exactness", inference_exactness);
  report("metric-fidelity", metric_fidelity);
  report("dag-invariants", dag_invariants);
  report("ad-invariances", ad_invariances);
  report("easyvista-end-to-end", easyvista);
  return failures == 0 ? 0 : 1;
}
