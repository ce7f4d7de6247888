#include "oatta/simplex.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace oatta {

namespace {
std::atomic<std::uint64_t> g_uniform_fallbacks{0};

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}
}  // namespace

std::uint64_t uniform_fallback_count() { return g_uniform_fallbacks.load(std::memory_order_relaxed); }
void reset_uniform_fallback_count() { g_uniform_fallbacks.store(0, std::memory_order_relaxed); }

// ============================================================================
// ProbVec
// ============================================================================

ProbVec ProbVec::uniform(std::size_t k) {
  require(k >= 1, "ProbVec::uniform: k must be >= 1");
  return ProbVec(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

ProbVec ProbVec::one_hot(std::size_t k, std::size_t index) {
  require(k >= 1, "ProbVec::one_hot: k must be >= 1");
  require(index < k, "ProbVec::one_hot: index out of range");
  std::vector<double> v(k, 0.0);
  v[index] = 1.0;
  return ProbVec(std::move(v));
}

std::size_t ProbVec::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v_.size(); ++i) {
    if (v_[i] > v_[best]) best = i;
  }
  return best;
}

ProbVec normalize(std::span<const double> values, double epsilon) {
  require(!values.empty(), "normalize: empty input");
  double sum = 0.0;
  for (double x : values) {
    require(std::isfinite(x), "normalize: non-finite entry");
    require(x >= 0.0, "normalize: negative entry");
    sum += x;
  }
  const std::size_t k = values.size();
  if (sum < epsilon) {
    g_uniform_fallbacks.fetch_add(1, std::memory_order_relaxed);
    return ProbVec::uniform(k);
  }
  std::vector<double> out(k);
  const double inv = 1.0 / sum;
  for (std::size_t i = 0; i < k; ++i) out[i] = values[i] * inv;
  return ProbVec::unchecked(std::move(out));
}

double shannon_entropy(const ProbVec& q) {
  double h = 0.0;
  for (double x : q.values()) {
    if (x > 1e-300) h -= x * std::log(x);
  }
  return h;
}

ProbVec mix(const ProbVec& a, const ProbVec& b, double weight_on_a) {
  require(a.size() == b.size(), "mix: dimension mismatch");
  require(weight_on_a >= 0.0 && weight_on_a <= 1.0, "mix: weight outside [0, 1]");
  const std::size_t k = a.size();
  std::vector<double> out(k);
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    out[i] = weight_on_a * a[i] + (1.0 - weight_on_a) * b[i];
    sum += out[i];
  }
  const double inv = 1.0 / sum;  // convex combo of unit-mass vectors: sum ~ 1
  for (double& x : out) x *= inv;
  return ProbVec::unchecked(std::move(out));
}

ProbVec multiply_and_normalize(const ProbVec& a, const ProbVec& b, double epsilon) {
  require(a.size() == b.size(), "multiply_and_normalize: dimension mismatch");
  std::vector<double> prod(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) prod[i] = a[i] * b[i];
  return normalize(prod, epsilon);
}

// ============================================================================
// Matrices
// ============================================================================

SquareMatrix outer_product(const ProbVec& a, const ProbVec& b) {
  require(a.size() == b.size(), "outer_product: dimension mismatch");
  const std::size_t k = a.size();
  SquareMatrix m(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double ai = a[i];
    auto row = m.row(i);
    for (std::size_t j = 0; j < k; ++j) row[j] = ai * b[j];
  }
  return m;
}

CountMatrix CountMatrix::scaled_identity(std::size_t k, double kappa) {
  require(k >= 1, "CountMatrix::scaled_identity: k must be >= 1");
  require(kappa > 0.0, "CountMatrix::scaled_identity: kappa must be > 0");
  CountMatrix c;
  c.m_ = SquareMatrix(k);
  for (std::size_t i = 0; i < k; ++i) c.m_.at(i, i) = kappa;
  return c;
}

void CountMatrix::ema_update(const ProbVec& prev, const ProbVec& cur, double rate) {
  const std::size_t k = m_.dim();
  require(prev.size() == k && cur.size() == k, "CountMatrix::ema_update: dimension mismatch");
  require(rate >= 0.0 && rate < 1.0, "CountMatrix::ema_update: rate outside [0, 1)");
  const double keep = 1.0 - rate;
  const double* pv = prev.values().data();
  const double* cv = cur.values().data();
  double* c = m_.data().data();
  for (std::size_t i = 0; i < k; ++i) {
    const double gain = rate * pv[i];
    double* row = c + i * k;
    for (std::size_t j = 0; j < k; ++j) row[j] = keep * row[j] + gain * cv[j];
  }
}

double CountMatrix::row_sum(std::size_t i) const {
  double s = 0.0;
  for (double x : m_.row(i)) s += x;
  return s;
}

CountMatrix CountMatrix::from_raw(SquareMatrix m) {
  const std::size_t k = m.dim();
  require(k >= 1, "CountMatrix::from_raw: empty matrix");
  for (std::size_t i = 0; i < k; ++i) {
    double s = 0.0;
    for (double x : m.row(i)) {
      require(std::isfinite(x) && x >= 0.0, "CountMatrix::from_raw: invalid entry");
      s += x;
    }
    require(s > 0.0, "CountMatrix::from_raw: row " + std::to_string(i) + " has zero mass");
  }
  CountMatrix c;
  c.m_ = std::move(m);
  return c;
}

TransitionMatrix TransitionMatrix::identity(std::size_t k) {
  require(k >= 1, "TransitionMatrix::identity: k must be >= 1");
  SquareMatrix m(k);
  for (std::size_t i = 0; i < k; ++i) m.at(i, i) = 1.0;
  return TransitionMatrix(std::move(m));
}

TransitionMatrix TransitionMatrix::from_raw(SquareMatrix m, double tol) {
  const std::size_t k = m.dim();
  require(k >= 1, "TransitionMatrix::from_raw: empty matrix");
  for (std::size_t i = 0; i < k; ++i) {
    double s = 0.0;
    for (double x : m.row(i)) {
      require(std::isfinite(x) && x >= 0.0,
              "TransitionMatrix::from_raw: invalid entry in row " + std::to_string(i));
      s += x;
    }
    require(std::abs(s - 1.0) <= tol,
            "TransitionMatrix::from_raw: row " + std::to_string(i) + " sums to " +
                std::to_string(s) + ", expected 1");
    const double inv = 1.0 / s;
    for (double& x : m.row(i)) x *= inv;
  }
  return TransitionMatrix(std::move(m));
}

void TransitionMatrix::assign_row_normalized(const CountMatrix& counts) {
  const std::size_t k = counts.dim();
  if (m_.dim() != k) m_ = SquareMatrix(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto src = counts.row(i);
    double s = 0.0;
    for (double x : src) s += x;
    const double inv = 1.0 / s;  // > 0 by the CountMatrix invariant
    auto dst = m_.row(i);
    for (std::size_t j = 0; j < k; ++j) dst[j] = src[j] * inv;
  }
}

TransitionMatrix row_normalize(const CountMatrix& counts) {
  TransitionMatrix a;
  a.assign_row_normalized(counts);
  return a;
}

void project_posterior_into(const TransitionMatrix& dynamics, const ProbVec& posterior,
                            std::vector<double>& out) {
  const std::size_t k = dynamics.dim();
  if (posterior.size() != k) throw std::invalid_argument("project_posterior: dimension mismatch");
  out.assign(k, 0.0);
  const double* p = posterior.values().data();
  for (std::size_t i = 0; i < k; ++i) {
    const double pi = p[i];
    if (pi == 0.0) continue;
    const auto row = dynamics.row(i);
    for (std::size_t j = 0; j < k; ++j) out[j] += pi * row[j];
  }
  double sum = 0.0;
  for (double x : out) sum += x;
  const double inv = 1.0 / sum;  // sum ~ 1: rows and posterior are unit mass
  for (double& x : out) x *= inv;
}

ProbVec project_posterior(const TransitionMatrix& dynamics, const ProbVec& posterior) {
  std::vector<double> out;
  project_posterior_into(dynamics, posterior, out);
  return ProbVec::unchecked(std::move(out));
}

}  // namespace oatta
