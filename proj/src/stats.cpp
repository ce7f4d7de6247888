#include "oatta/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace oatta::stats {

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size())
    throw std::invalid_argument("accuracy: sequence length mismatch");
  if (predicted.empty()) throw std::invalid_argument("accuracy: empty sequences");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == truth[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double structural_gain(const TransitionMatrix& dynamics) {
  const std::size_t k = dynamics.dim();
  double diag = 0.0;
  for (std::size_t i = 0; i < k; ++i) diag += dynamics.at(i, i);
  return diag / static_cast<double>(k) - 1.0 / static_cast<double>(k);
}

std::vector<double> smoothed_trace(std::span<const double> values, std::size_t span) {
  if (span < 1) throw std::invalid_argument("smoothed_trace: span must be >= 1");
  std::vector<double> out(values.begin(), values.end());
  if (out.empty()) return out;
  const double a = 2.0 / (static_cast<double>(span) + 1.0);
  for (std::size_t t = 1; t < out.size(); ++t) {
    out[t] = (1.0 - a) * out[t - 1] + a * values[t];
  }
  return out;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("linear_fit: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw std::invalid_argument("linear_fit: needs at least 3 points");
  const double nd = static_cast<double>(n);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= nd;
  my /= nd;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0) throw std::invalid_argument("linear_fit: x is constant");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy == 0.0) {
    fit.degenerate = true;
    fit.pearson_r = 0.0;
  } else {
    fit.pearson_r = sxy / std::sqrt(sxx * syy);
  }
  fit.x_at_zero = fit.slope == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                   : -fit.intercept / fit.slope;
  return fit;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share the mean rank; with 1-based ranks that
    // is (i + 1 + j + 1) / 2.
    const double shared = 0.5 * static_cast<double>(i + j + 2);
    for (std::size_t p = i; p <= j; ++p) ranks[order[p]] = shared;
    i = j + 1;
  }
  return ranks;
}

namespace {

constexpr std::size_t kExactEnumerationLimit = 25;

// Standard normal upper tail via the complementary error function.
double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Exact two-sided p for the positive-rank sum, over all 2^n equally likely
// sign assignments. Ranks arrive doubled so ties' half-ranks are integers.
double exact_two_sided_p(const std::vector<std::int64_t>& doubled_ranks,
                         std::int64_t doubled_w_plus) {
  std::int64_t total = 0;
  for (auto r : doubled_ranks) total += r;
  // counts[s] = number of subsets whose doubled-rank sum is s.
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(total) + 1, 0);
  counts[0] = 1;
  std::int64_t reach = 0;
  for (auto r : doubled_ranks) {
    reach += r;
    for (std::int64_t s = reach; s >= r; --s) {
      counts[static_cast<std::size_t>(s)] += counts[static_cast<std::size_t>(s - r)];
    }
  }
  std::uint64_t low = 0, high = 0, all = 0;
  for (std::int64_t s = 0; s <= total; ++s) {
    const std::uint64_t c = counts[static_cast<std::size_t>(s)];
    all += c;
    if (s <= doubled_w_plus) low += c;
    if (s >= doubled_w_plus) high += c;
  }
  const double tail = static_cast<double>(std::min(low, high)) / static_cast<double>(all);
  return std::min(1.0, 2.0 * tail);
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> diffs) {
  if (diffs.empty()) throw std::invalid_argument("wilcoxon_signed_rank: empty input");
  std::vector<double> magnitudes;
  std::vector<bool> positive;
  magnitudes.reserve(diffs.size());
  for (double d : diffs) {
    if (!std::isfinite(d)) throw std::invalid_argument("wilcoxon_signed_rank: non-finite diff");
    if (d == 0.0) continue;
    magnitudes.push_back(std::abs(d));
    positive.push_back(d > 0.0);
  }
  WilcoxonResult res;
  res.n_effective = magnitudes.size();
  if (magnitudes.empty()) {
    res.all_zero = true;
    res.p_value = 1.0;
    return res;
  }

  const std::vector<double> ranks = average_ranks(magnitudes);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (positive[i]) w_plus += ranks[i];
  }
  res.statistic = w_plus;

  const std::size_t n = magnitudes.size();
  if (n <= kExactEnumerationLimit) {
    // Average ranks are multiples of 1/2, so doubling makes them integers.
    std::vector<std::int64_t> doubled(n);
    for (std::size_t i = 0; i < n; ++i) doubled[i] = std::llround(2.0 * ranks[i]);
    res.exact = true;
    res.p_value = exact_two_sided_p(doubled, std::llround(2.0 * w_plus));
    return res;
  }

  // Normal approximation with tie-corrected variance and continuity
  // correction. Tie groups are runs of equal magnitude.
  const double nd = static_cast<double>(n);
  const double mean = nd * (nd + 1.0) / 4.0;
  double tie_term = 0.0;
  {
    std::vector<double> sorted(magnitudes);
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie_term += t * t * t - t;
      i = j + 1;
    }
  }
  const double variance = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
  const double sd = std::sqrt(variance);
  const double centered = w_plus - mean;
  const double continuity = centered > 0.0 ? -0.5 : (centered < 0.0 ? 0.5 : 0.0);
  const double z = (centered + continuity) / sd;
  res.p_value = std::min(1.0, 2.0 * normal_sf(std::abs(z)));
  return res;
}

std::vector<double> holm_adjust(std::span<const double> p_values) {
  const std::size_t m = p_values.size();
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("holm_adjust: p outside [0, 1]");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<double> adjusted(m, 0.0);
  double running_max = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double scaled =
        std::min(1.0, static_cast<double>(m - i) * p_values[order[i]]);
    running_max = std::max(running_max, scaled);
    adjusted[order[i]] = running_max;
  }
  return adjusted;
}

double spearman_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman_correlation: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("spearman_correlation: needs at least 2 points");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const std::size_t n = x.size();
  const double nd = static_cast<double>(n);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= nd;
  my /= nd;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mx;
    const double dy = ry[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace oatta::stats
