#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace oatta {

/**
 * Probability-simplex primitives shared by the filter, the gate and the
 * simulators: normalized class distributions, nonnegative count matrices and
 * row-stochastic transition matrices, plus the handful of operations the
 * recursive update is built from.
 *
 * Numerical conventions:
 *  - entropies are measured in nats;
 *  - a normalization whose input mass is below epsilon falls back to the
 *    uniform distribution instead of dividing by ~0, and the event is counted
 *    in a process-wide diagnostic (uniform_fallback_count). Downstream
 *    consumers must keep running on degenerate inputs, not halt.
 */

inline constexpr double kDefaultEpsilon = 1e-8;
// Tight tolerance for "sums to one" checks on vectors/matrix rows.
inline constexpr double kSimplexTol = 1e-9;

// ============================================================================
// ProbVec: a point on the K-class probability simplex.
// ============================================================================
//
// Instances are normalized by construction; arbitrary raw data enters only
// through normalize(), which validates and rescales. unchecked() exists for
// internal producers whose arithmetic already guarantees normalization.
class ProbVec {
 public:
  ProbVec() = default;

  static ProbVec uniform(std::size_t k);
  static ProbVec one_hot(std::size_t k, std::size_t index);
  // Trusts the caller that `values` already sums to 1; no validation.
  static ProbVec unchecked(std::vector<double> values) { return ProbVec(std::move(values)); }

  // Hot-path reuse: overwrites the contents without reallocating when the
  // capacity suffices. The caller guarantees `values` sums to 1.
  void assign_unchecked(std::span<const double> values) { v_.assign(values.begin(), values.end()); }

  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }
  double operator[](std::size_t i) const { return v_[i]; }
  const std::vector<double>& values() const { return v_; }

  // Index of the largest entry; ties resolve to the lowest index.
  std::size_t argmax() const;

  bool operator==(const ProbVec& other) const { return v_ == other.v_; }

 private:
  explicit ProbVec(std::vector<double> values) : v_(std::move(values)) {}
  std::vector<double> v_;
};

// Rescales nonnegative finite data to sum to one. If the total mass is below
// epsilon the result is uniform (and the diagnostic counter is bumped).
// Throws std::invalid_argument on empty input, negative or non-finite
// entries.
ProbVec normalize(std::span<const double> values, double epsilon = kDefaultEpsilon);

// Process-wide count of uniform fallbacks taken by normalize(); thread-safe.
std::uint64_t uniform_fallback_count();
void reset_uniform_fallback_count();

// Shannon entropy in nats. Zero entries contribute zero (the 0*log 0 = 0
// convention); entries below 1e-300 are treated as zero before the log.
double shannon_entropy(const ProbVec& q);

// Convex combination weight_on_a * a + (1 - weight_on_a) * b, renormalized.
// weight_on_a must lie in [0, 1].
ProbVec mix(const ProbVec& a, const ProbVec& b, double weight_on_a);

// Element-wise product of two distributions, renormalized; the Bayes
// measurement update. An all-zero product (disjoint supports) falls back to
// uniform via normalize().
ProbVec multiply_and_normalize(const ProbVec& a, const ProbVec& b,
                               double epsilon = kDefaultEpsilon);

// ============================================================================
// SquareMatrix: dense row-major K x K storage.
// ============================================================================
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t k, double fill = 0.0) : k_(k), m_(k * k, fill) {}

  std::size_t dim() const { return k_; }
  double& at(std::size_t i, std::size_t j) { return m_[i * k_ + j]; }
  double at(std::size_t i, std::size_t j) const { return m_[i * k_ + j]; }
  std::span<const double> row(std::size_t i) const { return {m_.data() + i * k_, k_}; }
  std::span<double> row(std::size_t i) { return {m_.data() + i * k_, k_}; }
  const std::vector<double>& data() const { return m_; }
  std::vector<double>& data() { return m_; }

  bool operator==(const SquareMatrix& other) const { return k_ == other.k_ && m_ == other.m_; }

 private:
  std::size_t k_ = 0;
  std::vector<double> m_;
};

// Outer product a b^T (K x K), the per-step transition evidence.
SquareMatrix outer_product(const ProbVec& a, const ProbVec& b);

// ============================================================================
// CountMatrix: nonnegative transition pseudo-counts.
// ============================================================================
//
// Invariants kept by construction: entries are nonnegative and every row sum
// is strictly positive. Initialization places kappa > 0 on the diagonal, and
// ema_update is a convex blend with rate < 1, so row mass can shrink but
// never vanish.
class CountMatrix {
 public:
  CountMatrix() = default;

  // kappa * I. kappa must be > 0.
  static CountMatrix scaled_identity(std::size_t k, double kappa);

  // C <- (1 - rate) * C + rate * (prev ⊗ cur), with rate in [0, 1).
  void ema_update(const ProbVec& prev, const ProbVec& cur, double rate);

  std::size_t dim() const { return m_.dim(); }
  double at(std::size_t i, std::size_t j) const { return m_.at(i, j); }
  std::span<const double> row(std::size_t i) const { return m_.row(i); }
  double row_sum(std::size_t i) const;
  const SquareMatrix& raw() const { return m_; }

  // For deserialization: validates nonnegativity and positive row sums.
  static CountMatrix from_raw(SquareMatrix m);

  bool operator==(const CountMatrix& other) const { return m_ == other.m_; }

 private:
  SquareMatrix m_;
};

// ============================================================================
// TransitionMatrix: row-stochastic K x K matrix.
// ============================================================================
class TransitionMatrix {
 public:
  TransitionMatrix() = default;

  static TransitionMatrix identity(std::size_t k);
  // Validates rows within `tol` of unit mass, then renormalizes each row
  // exactly. Throws std::invalid_argument on negative entries or a row whose
  // sum is off by more than tol.
  static TransitionMatrix from_raw(SquareMatrix m, double tol = 1e-6);
  // Trusts the caller that rows already sum to one.
  static TransitionMatrix unchecked(SquareMatrix m) { return TransitionMatrix(std::move(m)); }

  // In-place row normalization of `counts`, reusing this matrix's storage.
  void assign_row_normalized(const CountMatrix& counts);

  std::size_t dim() const { return m_.dim(); }
  double at(std::size_t i, std::size_t j) const { return m_.at(i, j); }
  std::span<const double> row(std::size_t i) const { return m_.row(i); }
  const SquareMatrix& raw() const { return m_; }

  bool operator==(const TransitionMatrix& other) const { return m_ == other.m_; }

 private:
  explicit TransitionMatrix(SquareMatrix m) : m_(std::move(m)) {}
  SquareMatrix m_;
};

// Divides every row of C by its sum. Row sums are positive by the
// CountMatrix invariants, so this is always well defined.
TransitionMatrix row_normalize(const CountMatrix& counts);

// One-step-ahead projection pi(j) = sum_i A(i, j) p(i) — the posterior pushed
// through the dynamics — renormalized defensively before return.
ProbVec project_posterior(const TransitionMatrix& dynamics, const ProbVec& posterior);

// Buffer-reusing variant; out is resized to K.
void project_posterior_into(const TransitionMatrix& dynamics, const ProbVec& posterior,
                            std::vector<double>& out);

}  // namespace oatta
