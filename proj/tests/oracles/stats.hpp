#pragma once

// Partial correlation by explicit least-squares residuals (normal equations,
// Gauss-Jordan in long double).

#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracle {

inline std::vector<long double> ols_residuals(const std::vector<double>& y, const std::vector<std::vector<double>>& z) {
  const std::size_t n = y.size(), k = z.size() + 1;
  auto col = [&](std::size_t c, std::size_t t) -> long double { return c == 0 ? 1.0L : z[c - 1][t]; };
  std::vector<std::vector<long double>> a(k, std::vector<long double>(k + 1, 0.0L));
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t t = 0; t < n; ++t) a[r][c] += col(r, t) * col(c, t);
    for (std::size_t t = 0; t < n; ++t) a[r][k] += col(r, t) * y[t];
  }
  for (std::size_t p = 0; p < k; ++p) {
    std::size_t piv = p;
    for (std::size_t r = p + 1; r < k; ++r)
      if (std::fabs(a[r][p]) > std::fabs(a[piv][p])) piv = r;
    std::swap(a[p], a[piv]);
    if (std::fabs(a[p][p]) < 1e-18L) throw std::runtime_error("oracle: singular design");
    for (std::size_t r = 0; r < k; ++r) {
      if (r == p) continue;
      const long double f = a[r][p] / a[p][p];
      for (std::size_t c = p; c <= k; ++c) a[r][c] -= f * a[p][c];
    }
  }
  std::vector<long double> res(n);
  for (std::size_t t = 0; t < n; ++t) {
    long double fit = 0.0L;
    for (std::size_t c = 0; c < k; ++c) fit += a[c][k] / a[c][c] * col(c, t);
    res[t] = y[t] - fit;
  }
  return res;
}

inline double partial_correlation(const std::vector<double>& x, const std::vector<double>& y,
                                  const std::vector<std::vector<double>>& z) {
  const auto rx = ols_residuals(x, z), ry = ols_residuals(y, z);
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    sxy += rx[t] * ry[t];
    sxx += rx[t] * rx[t];
    syy += ry[t] * ry[t];
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

}  // namespace oracle
