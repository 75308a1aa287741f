#include "anomalycd/config.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>

#include "anomalycd/error.hpp"
#include "anomalycd/timeseries.hpp"

namespace anomalycd::config {

namespace {

const std::string& single(const std::string& key, const std::vector<std::string>& v) {
  if (v.size() != 1) throw InputError("config: '" + key + "' takes one value");
  return v.front();
}

double to_double(const std::string& key, const std::vector<std::string>& v) {
  const auto& s = single(key, v);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw InputError("config: '" + key + "' is not a number: " + s);
  return out;
}

long long to_int(const std::string& key, const std::vector<std::string>& v, long long min) {
  const auto& s = single(key, v);
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw InputError("config: '" + key + "' is not an integer: " + s);
  if (out < min) throw InputError("config: '" + key + "' must be >= " + std::to_string(min));
  return out;
}

bool to_bool(const std::string& key, const std::vector<std::string>& v) {
  const auto& s = single(key, v);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw InputError("config: '" + key + "' is not a boolean: " + s);
}

std::string strip_detector(const std::string& key) {
  constexpr std::string_view prefix = "detector.";
  return key.rfind(prefix, 0) == 0 ? key.substr(prefix.size()) : key;
}

// Returns false when the key is not a detector field.
bool apply_detector_key(ad::DetectorConfig& d, const std::string& key, const std::vector<std::string>& v) {
  if (key == "alpha_theta") d.alpha_theta = to_double(key, v);
  else if (key == "w_theta") d.w_theta = static_cast<std::size_t>(to_int(key, v, 1));
  else if (key == "alpha_iota") d.alpha_iota = to_double(key, v);
  else if (key == "k_iota") d.k_iota = to_double(key, v);
  else if (key == "p_iota") {
    if (single(key, v) == "auto") d.p_iota.reset();
    else d.p_iota = static_cast<std::size_t>(to_int(key, v, 2));
  } else if (key == "alpha_eta") d.alpha_eta = to_double(key, v);
  else if (key == "q_eta") d.q_eta = static_cast<std::size_t>(to_int(key, v, 1));
  else if (key == "change_points") {
    d.change_points.clear();
    for (const auto& s : v) d.change_points.push_back(to_double(key, {s}));
  } else return false;
  return true;
}

std::string fmt(double v) { return ts::format_double(v); }

}  // namespace

std::string to_string(skeleton::MciMode m) { return m == skeleton::MciMode::Full ? "full" : "target-only"; }
std::string to_string(sparse::OnsetMode m) { return m == sparse::OnsetMode::Onsets ? "onsets" : "signed"; }
std::string to_string(refine::T0Orient m) { return m == refine::T0Orient::Chi2 ? "chi2" : "lex"; }

void PipelineConfig::validate() const {
  try {
    detector.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  if (l_m < 1) throw InputError("config: l_m must be >= 1");
  if (tau_max < 1) throw InputError("config: tau_max must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("config: alpha must lie in (0, 1)");
  if (alpha_pc >= 1.0) throw InputError("config: alpha_pc must be < 1");
  if (!(alpha_tau >= 0.0 && alpha_tau <= 1.0)) throw InputError("config: alpha_tau must lie in [0, 1]");
  if (!(ess > 0.0)) throw InputError("config: ess must be > 0");
  if (max_gap < 0.0) throw InputError("config: max_gap must be >= 0");
}

skeleton::SkeletonOptions PipelineConfig::skeleton_options(unsigned threads) const {
  skeleton::SkeletonOptions o;
  o.tau_max = tau_max;
  o.alpha = alpha;
  o.alpha_pc = alpha_pc;
  o.max_conds = max_conds;
  o.mci_mode = mci_mode;
  o.positive_only = use_anac;
  o.threads = threads;
  return o;
}

refine::RefineOptions PipelineConfig::refine_options() const {
  refine::RefineOptions o;
  o.direct_t0 = direct_t0;
  o.t0_orient = t0_orient;
  o.tau_max = tau_max;
  return o;
}

KeyValues parse_key_values(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_config(in);
  } catch (const CLI::Error& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  KeyValues out;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    out[item.fullname()] = item.inputs;
  }
  return out;
}

void apply(ad::DetectorConfig& cfg, const KeyValues& values) {
  for (const auto& [raw, v] : values) {
    const auto key = strip_detector(raw);
    if (!apply_detector_key(cfg, key, v)) throw InputError("config: unknown detector key '" + raw + "'");
  }
}

void apply(PipelineConfig& cfg, const KeyValues& values) {
  for (const auto& [raw, v] : values) {
    const auto key = strip_detector(raw);
    if (apply_detector_key(cfg.detector, key, v)) continue;
    if (key == "l_m") cfg.l_m = static_cast<std::size_t>(to_int(key, v, 1));
    else if (key == "tau_max") cfg.tau_max = static_cast<int>(to_int(key, v, 1));
    else if (key == "alpha") cfg.alpha = to_double(key, v);
    else if (key == "alpha_pc") cfg.alpha_pc = to_double(key, v);
    else if (key == "max_conds") cfg.max_conds = static_cast<std::size_t>(to_int(key, v, 0));
    else if (key == "mci_mode") {
      const auto& s = single(key, v);
      if (s == "full") cfg.mci_mode = skeleton::MciMode::Full;
      else if (s == "target-only") cfg.mci_mode = skeleton::MciMode::TargetOnly;
      else throw InputError("config: mci_mode must be full or target-only");
    } else if (key == "alpha_tau") cfg.alpha_tau = to_double(key, v);
    else if (key == "onset_mode") {
      const auto& s = single(key, v);
      if (s == "onsets") cfg.onset_mode = sparse::OnsetMode::Onsets;
      else if (s == "signed") cfg.onset_mode = sparse::OnsetMode::Signed;
      else throw InputError("config: onset_mode must be onsets or signed");
    } else if (key == "ess") cfg.ess = to_double(key, v);
    else if (key == "max_gap") cfg.max_gap = to_double(key, v);
    else if (key == "timestamp_column") cfg.timestamp_column = single(key, v);
    else if (key == "use_priors") cfg.use_priors = to_bool(key, v);
    else if (key == "use_compression") cfg.use_compression = to_bool(key, v);
    else if (key == "direct_t0") cfg.direct_t0 = to_bool(key, v);
    else if (key == "use_anac") cfg.use_anac = to_bool(key, v);
    else if (key == "use_pruning") cfg.use_pruning = to_bool(key, v);
    else if (key == "t0_orient") {
      const auto& s = single(key, v);
      if (s == "chi2") cfg.t0_orient = refine::T0Orient::Chi2;
      else if (s == "lex") cfg.t0_orient = refine::T0Orient::Lex;
      else throw InputError("config: t0_orient must be chi2 or lex");
    } else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_int(key, v, 0));
    else throw InputError("config: unknown key '" + raw + "'");
  }
}

PipelineConfig load_config(const std::filesystem::path& path) {
  PipelineConfig cfg;
  config::apply(cfg, parse_key_values(ts::read_file(path)));
  cfg.validate();
  return cfg;
}

ad::DetectorConfig load_detector_config(const std::filesystem::path& path) {
  ad::DetectorConfig cfg;
  config::apply(cfg, parse_key_values(ts::read_file(path)));
  return cfg;
}

std::string canonical_text(const PipelineConfig& c) {
  std::map<std::string, std::string> kv;
  const auto& d = c.detector;
  kv["detector.alpha_theta"] = fmt(d.alpha_theta);
  kv["detector.w_theta"] = std::to_string(d.w_theta);
  kv["detector.alpha_iota"] = fmt(d.alpha_iota);
  kv["detector.k_iota"] = fmt(d.k_iota);
  kv["detector.p_iota"] = d.p_iota ? std::to_string(*d.p_iota) : "auto";
  kv["detector.alpha_eta"] = fmt(d.alpha_eta);
  kv["detector.q_eta"] = std::to_string(d.q_eta);
  std::string cps = "[";
  for (std::size_t i = 0; i < d.change_points.size(); ++i) cps += (i ? ", " : "") + fmt(d.change_points[i]);
  kv["detector.change_points"] = cps + "]";
  kv["l_m"] = std::to_string(c.l_m);
  kv["tau_max"] = std::to_string(c.tau_max);
  kv["alpha"] = fmt(c.alpha);
  kv["alpha_pc"] = fmt(c.alpha_pc);
  kv["max_conds"] = std::to_string(c.max_conds);
  kv["mci_mode"] = to_string(c.mci_mode);
  kv["alpha_tau"] = fmt(c.alpha_tau);
  kv["onset_mode"] = to_string(c.onset_mode);
  kv["ess"] = fmt(c.ess);
  kv["max_gap"] = fmt(c.max_gap);
  kv["timestamp_column"] = "\"" + c.timestamp_column + "\"";
  kv["use_priors"] = c.use_priors ? "true" : "false";
  kv["use_compression"] = c.use_compression ? "true" : "false";
  kv["direct_t0"] = c.direct_t0 ? "true" : "false";
  kv["use_anac"] = c.use_anac ? "true" : "false";
  kv["use_pruning"] = c.use_pruning ? "true" : "false";
  kv["t0_orient"] = to_string(c.t0_orient);
  kv["seed"] = std::to_string(c.seed);
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string config_hash(const PipelineConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_text(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace anomalycd::config
