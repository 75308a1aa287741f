#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "anomalycd/online_ad.hpp"
#include "anomalycd/refine.hpp"
#include "anomalycd/skeleton.hpp"
#include "anomalycd/sparse.hpp"

namespace anomalycd::config {

struct PipelineConfig {
  ad::DetectorConfig detector;
  std::size_t l_m = 10;
  int tau_max = 5;
  double alpha = 0.05;
  double alpha_pc = -1.0;  // < 0: same as alpha
  std::size_t max_conds = 3;
  skeleton::MciMode mci_mode = skeleton::MciMode::Full;
  double alpha_tau = 0.01;
  sparse::OnsetMode onset_mode = sparse::OnsetMode::Onsets;
  double ess = 1.0;
  double max_gap = 0.0;  // longest interpolated gap, in timestamp units; 0 disables
  std::string timestamp_column = "timestamp";

  bool use_priors = true;
  bool use_compression = true;
  bool direct_t0 = false;
  bool use_anac = true;     // positive-association test
  bool use_pruning = true;  // multi-lag grouping and pair resolution
  refine::T0Orient t0_orient = refine::T0Orient::Chi2;

  std::uint64_t seed = 0;

  void validate() const;  // throws InputError
  skeleton::SkeletonOptions skeleton_options(unsigned threads) const;
  refine::RefineOptions refine_options() const;
};

using KeyValues = std::map<std::string, std::vector<std::string>>;

/// Flat TOML subset: `key = value`, `# comment`, `[section]` prefixes keys
/// with `section.`, arrays as `[a, b]`. Later keys override earlier ones.
KeyValues parse_key_values(std::string_view text);

/// Applies known keys; `detector.` prefixes are optional. Unknown keys throw InputError.
void apply(PipelineConfig& cfg, const KeyValues& values);
void apply(ad::DetectorConfig& cfg, const KeyValues& values);

PipelineConfig load_config(const std::filesystem::path& path);
ad::DetectorConfig load_detector_config(const std::filesystem::path& path);

/// Canonical key = value text of every field, one per line, sorted by key.
std::string canonical_text(const PipelineConfig& cfg);
/// 16 hex digits of the FNV-1a hash of canonical_text.
std::string config_hash(const PipelineConfig& cfg);

std::string to_string(skeleton::MciMode m);
std::string to_string(sparse::OnsetMode m);
std::string to_string(refine::T0Orient m);

}  // namespace anomalycd::config
