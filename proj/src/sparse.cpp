#include "anomalycd/sparse.hpp"

#include <stdexcept>

#include "anomalycd/error.hpp"

namespace anomalycd::sparse {

std::vector<std::pair<std::size_t, std::size_t>> CompressionReport::kept_ranges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (auto idx : kept_indices) {
    if (!out.empty() && out.back().second + 1 == idx) {
      out.back().second = idx;
    } else {
      out.emplace_back(idx, idx);
    }
  }
  return out;
}

Compressed compress_sparse(const ts::FlagMatrix& flags, std::size_t l_m) {
  if (l_m < 1) throw InputError("compress: l_m must be >= 1");
  const std::size_t n = flags.length();
  const std::size_t nc = flags.num_channels();

  auto same_state = [&](std::size_t a, std::size_t b) {
    for (std::size_t c = 0; c < nc; ++c) {
      if (flags.at(c, a) != flags.at(c, b)) return false;
    }
    return true;
  };

  CompressionReport report;
  report.original_length = n;
  report.l_m = l_m;
  std::size_t run_length = 0;
  for (std::size_t t = 0; t < n; ++t) {
    run_length = (t > 0 && same_state(t, t - 1)) ? run_length + 1 : 1;
    if (run_length <= l_m) report.kept_indices.push_back(t);
  }
  report.compressed_length = report.kept_indices.size();
  ts::FlagMatrix compressed = flags.select_rows(report.kept_indices);
  return {std::move(compressed), std::move(report)};
}

PriorLinkSet::PriorLinkSet(std::size_t num_channels, int tau_max)
    : n_(num_channels), tau_max_(tau_max), allowed_(num_channels * num_channels, 0),
      scores_(num_channels * num_channels, 0.0) {
  if (tau_max < 0) throw InputError("prior links: tau_max must be >= 0");
}

PriorLinkSet PriorLinkSet::all(std::size_t num_channels, int tau_max) {
  PriorLinkSet p(num_channels, tau_max);
  for (std::size_t i = 0; i < num_channels; ++i) {
    for (std::size_t j = 0; j < num_channels; ++j) {
      if (i == j) continue;
      p.set_allowed(i, j, true);
      p.set_overlap_score(i, j, 1.0);
    }
  }
  return p;
}

void PriorLinkSet::set_allowed(std::size_t source, std::size_t target, bool value) {
  if (source == target && value) throw InvariantError("prior links: self links are never permitted");
  allowed_[source * n_ + target] = value ? 1 : 0;
}

std::size_t PriorLinkSet::num_allowed_pairs() const {
  std::size_t count = 0;
  for (auto a : allowed_) count += a;
  return count;
}

std::vector<std::vector<std::uint8_t>> time_extended_regions(const ts::FlagMatrix& flags, int tau_max,
                                                             OnsetMode mode) {
  if (tau_max < 1) throw InputError("prior links: tau_max must be >= 1");
  const std::size_t n = flags.length();
  const auto window = static_cast<std::size_t>(tau_max);
  std::vector<std::vector<std::uint8_t>> out(flags.num_channels(), std::vector<std::uint8_t>(n, 0));
  for (std::size_t c = 0; c < flags.num_channels(); ++c) {
    auto f = flags.channel(c);
    // The sample before the series start is taken as normal.
    std::vector<int> diff(n);
    for (std::size_t t = 0; t < n; ++t) {
      const int d = static_cast<int>(f[t]) - (t > 0 ? static_cast<int>(f[t - 1]) : 0);
      diff[t] = mode == OnsetMode::Onsets ? std::max(d, 0) : d;
    }
    long rolling = 0;
    for (std::size_t t = 0; t < n; ++t) {
      rolling += diff[t];
      if (t >= window) rolling -= diff[t - window];
      out[c][t] = rolling > 0 ? 1 : 0;
    }
  }
  return out;
}

PriorLinkSet compute_prior_links(const ts::FlagMatrix& flags, int tau_max, double alpha_tau, OnsetMode mode) {
  const auto regions = time_extended_regions(flags, tau_max, mode);
  const std::size_t nc = flags.num_channels();
  const std::size_t n = flags.length();
  std::vector<std::size_t> region_size(nc, 0);
  for (std::size_t c = 0; c < nc; ++c) {
    for (auto v : regions[c]) region_size[c] += v;
  }

  PriorLinkSet priors(nc, tau_max);
  for (std::size_t i = 0; i < nc; ++i) {
    for (std::size_t j = i + 1; j < nc; ++j) {
      std::size_t overlap = 0;
      for (std::size_t t = 0; t < n; ++t) overlap += regions[i][t] & regions[j][t];
      if (overlap == 0) continue;
      const double ij = static_cast<double>(overlap) / static_cast<double>(region_size[i]);
      const double ji = static_cast<double>(overlap) / static_cast<double>(region_size[j]);
      priors.set_overlap_score(i, j, ij);
      priors.set_overlap_score(j, i, ji);
      priors.set_allowed(i, j, ij >= alpha_tau);
      priors.set_allowed(j, i, ji >= alpha_tau);
    }
  }
  return priors;
}

}  // namespace anomalycd::sparse
