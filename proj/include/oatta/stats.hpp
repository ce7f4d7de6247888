#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "oatta/simplex.hpp"

namespace oatta::stats {

/**
 * Evaluation metrics and the paired significance machinery used by the
 * experiment harness.
 *
 * Wilcoxon conventions (classical signed-rank, two-sided):
 *  - zero differences are dropped before ranking;
 *  - tied magnitudes receive average ranks;
 *  - for n <= 25 effective pairs the p-value is exact, from the full
 *    distribution of the positive-rank sum over all 2^n sign assignments
 *    (tabulated by dynamic programming over twice-the-rank integer sums);
 *  - for larger n, a normal approximation with tie-corrected variance and a
 *    continuity correction of 1/2;
 *  - p = min(1, 2 * min(P(W <= w), P(W >= w))).
 */

// Fraction of positions where the two label sequences agree.
double accuracy(std::span<const int> predicted, std::span<const int> truth);

// Mean diagonal mass above chance: (1/K) sum_i A_ii - 1/K. Zero for uniform
// dynamics, alpha - 1/K for a sticky matrix.
double structural_gain(const TransitionMatrix& dynamics);

// EMA smoothing with factor 2 / (span + 1), seeded at the first value.
// span = 1 returns the input unchanged.
std::vector<double> smoothed_trace(std::span<const double> values, std::size_t span);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double pearson_r = 0.0;
  double x_at_zero = 0.0;  // -intercept / slope; NaN when the fit is flat
  bool degenerate = false; // constant y: slope 0, r defined as 0
};

// Ordinary least squares y ~ slope * x + intercept. Requires >= 3 points and
// non-constant x (throws std::invalid_argument otherwise).
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

struct WilcoxonResult {
  double p_value = 1.0;
  std::size_t n_effective = 0;  // pairs surviving the zero-drop
  double statistic = 0.0;       // positive-rank sum W+
  bool exact = false;
  bool all_zero = false;        // every diff was zero; p = 1 by convention
};

WilcoxonResult wilcoxon_signed_rank(std::span<const double> diffs);

// Holm step-down adjustment; output is aligned with the input order.
std::vector<double> holm_adjust(std::span<const double> p_values);

// Rank correlation (Pearson on average ranks). Returns 0 with no error when
// either side is constant.
double spearman_correlation(std::span<const double> x, std::span<const double> y);

// Average ranks (1-based; ties share the mean of their positions). Exposed
// for the significance tests' oracles.
std::vector<double> average_ranks(std::span<const double> values);

}  // namespace oatta::stats
