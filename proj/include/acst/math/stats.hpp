#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "acst/math/special.hpp"

// Sample statistics and distributional tests used by the verification
// suites: KS (one- and two-sample), chi-square GOF, rank correlations.

namespace acst {

inline double mean(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("mean: empty");
  return std::accumulate(x.begin(), x.end(), 0.0) / x.size();
}

inline double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / (x.size() - 1);
}

inline double skewness(const std::vector<double>& x) {
  const double m = mean(x);
  double s2 = 0.0, s3 = 0.0;
  for (double v : x) {
    const double d = v - m;
    s2 += d * d;
    s3 += d * d * d;
  }
  s2 /= x.size();
  s3 /= x.size();
  return s3 / std::pow(s2, 1.5);
}

// mid-ranks (average on ties)
inline std::vector<double> ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * (i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double spearman_sample(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("spearman_sample: bad inputs");
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = mean(rx), my = mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double pearson_sample(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("pearson_sample: bad inputs");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

namespace detail {
// counts inversions by merge sort; xs modified in place
inline long long count_inversions(std::vector<double>& xs, std::vector<double>& buf,
                                  std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  long long c = count_inversions(xs, buf, lo, mid) + count_inversions(xs, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (xs[j] < xs[i]) {
      c += static_cast<long long>(mid - i);
      buf[k++] = xs[j++];
    } else {
      buf[k++] = xs[i++];
    }
  }
  while (i < mid) buf[k++] = xs[i++];
  while (j < hi) buf[k++] = xs[j++];
  std::copy(buf.begin() + lo, buf.begin() + hi, xs.begin() + lo);
  return c;
}
}  // namespace detail

// Kendall tau-a via inversion counting, O(n log n). Assumes no ties
// (continuous draws).
inline double kendall_sample(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (y.size() != n || n < 3) throw std::invalid_argument("kendall_sample: bad inputs");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
  const long long inv = detail::count_inversions(ys, buf, 0, n);
  const long long total = static_cast<long long>(n) * (n - 1) / 2;
  return 1.0 - 2.0 * static_cast<double>(inv) / static_cast<double>(total);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

// One-sample KS against a continuous CDF.
inline KsResult ks_test(std::vector<double> x, const std::function<double(double)>& cdf) {
  const std::size_t n = x.size();
  if (n < 5) throw std::invalid_argument("ks_test: too few points");
  std::sort(x.begin(), x.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double F = cdf(x[i]);
    d = std::max(d, std::fabs(F - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - F));
  }
  const double en = std::sqrt(static_cast<double>(n));
  return {d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d)};
}

inline KsResult ks_test_uniform(std::vector<double> u) {
  return ks_test(std::move(u), [](double v) { return std::min(1.0, std::max(0.0, v)); });
}

// Two-sample KS.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t n = a.size(), m = b.size();
  if (n < 5 || m < 5) throw std::invalid_argument("ks_two_sample: too few points");
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    const double v = (a[i] <= b[j]) ? a[i] : b[j];
    while (i < n && a[i] <= v) ++i;
    while (j < m && b[j] <= v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double en = std::sqrt(static_cast<double>(n) * m / static_cast<double>(n + m));
  return {d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d)};
}

// Chi-square GOF given observed counts and expected probabilities.
inline double chi2_gof_pvalue(const std::vector<double>& observed,
                              const std::vector<double>& expected_prob,
                              double total) {
  if (observed.size() != expected_prob.size() || observed.size() < 2)
    throw std::invalid_argument("chi2_gof_pvalue: bad inputs");
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = expected_prob[i] * total;
    if (e <= 0.0) throw std::invalid_argument("chi2_gof_pvalue: zero expected count");
    stat += (observed[i] - e) * (observed[i] - e) / e;
  }
  return chi2_sf(stat, static_cast<double>(observed.size() - 1));
}

}  // namespace acst
