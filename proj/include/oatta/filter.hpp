#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"
#include "oatta/simplex.hpp"

namespace oatta {

/**
 * Gradient-free recursive label filter.
 *
 * Wraps any per-step source of class probabilities q_t and re-ranks it with a
 * temporal prior learned online. Each step performs, in order:
 *
 *   1. predict:  pi_t = A_{t-1}^T p_{t-1}
 *   2. update:   p_t  ∝ L_t ⊙ pi_t, with likelihood L_t ∝ q_t / rho
 *   3. weight:   w_t  = exp(-H(q_t) / tau_H)      (entropy in nats)
 *   4. learn:    C_t  = (1 - g w_t) C_{t-1} + g w_t (q_{t-1} ⊗ q_t)
 *                A_t  = row_normalize(C_t)
 *   5. carry:    p_{t-1} <- p_t, q_{t-1} <- q_t
 *
 * Two properties are load-bearing and covered by tests:
 *  - limiting behavior: uniform q_t leaves the prediction untouched
 *    (p_t = pi_t), and a uniform prior with uniform rho returns the source
 *    verbatim (p_t = q_t);
 *  - decoupling: the transition statistics C/A depend only on the raw inputs
 *    q, never on the carried posterior, so a filtering mistake cannot
 *    contaminate what is learned about the dynamics.
 *
 * The first observation has no predecessor; by default it contributes no
 * transition evidence (count_first_transition pairs it against the uniform
 * q_0 instead).
 *
 * Everything here is single-writer: one FilterState per stream, mutated in
 * place. Cost per step is Theta(K^2) time and memory, independent of t.
 */

struct FilterConfig {
  std::size_t num_classes = 0;
  // Source-marginal divisor rho for the likelihood conversion; empty means
  // uniform, which leaves q untouched (exactly — no division is performed).
  std::optional<ProbVec> class_prior;
  double pseudocount = 1.0;          // kappa, diagonal init of C
  double forgetting_rate = 0.05;     // g, count EMA rate
  double entropy_temperature = 1.0;  // tau_H, nats
  double epsilon = 1e-8;
  bool count_first_transition = false;

  // Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

struct FilterState {
  FilterConfig config;
  CountMatrix counts;            // C_t
  TransitionMatrix dynamics;     // A_t = row_normalize(C_t)
  ProbVec posterior_prev;        // p_{t-1}
  ProbVec raw_prev;              // q_{t-1}
  std::uint64_t step_index = 0;  // number of observations consumed

  // Scratch for the allocation-free step; never serialized or compared.
  std::vector<double> scratch_prior, scratch_likelihood, scratch_posterior;
};

struct StepOutput {
  ProbVec raw;             // q_t as given
  ProbVec temporal_prior;  // pi_t
  ProbVec filtered;        // p_t
  double entropy_weight = 0.0;
  std::size_t predicted_class = 0;  // argmax of filtered
};

// C_0 = kappa I, A_0 = I, p_0 = q_0 = uniform.
FilterState init_filter(const FilterConfig& config);

// Likelihood conversion: normalize(q / rho). With rho uniform (all entries
// equal to 1/K) the input is returned verbatim, bit for bit.
ProbVec to_likelihood(const ProbVec& q, const ProbVec& rho, double epsilon = kDefaultEpsilon);

// One observation. Throws on dimension mismatch; never throws on degenerate
// numerics (uniform fallbacks keep the recursion alive).
StepOutput filter_step(FilterState& state, const ProbVec& q);

// Allocation-free variant for hot loops: output buffers are reused.
void filter_step(FilterState& state, const ProbVec& q, StepOutput& out);

// Convenience wrapper: init + step over the whole stream. Errors are
// rethrown with the offending step index prepended.
std::vector<StepOutput> run_stream(const FilterConfig& config, const std::vector<ProbVec>& stream);

// ---------------------------------------------------------------------------
// Composable pieces, shared with the gated variant.
// ---------------------------------------------------------------------------

// pi_t from the current dynamics and carried posterior.
ProbVec filter_predict(const FilterState& state);
// p_t from q_t and a prediction (applies the class-prior division).
ProbVec filter_measure(const FilterState& state, const ProbVec& q, const ProbVec& prediction);
// w_t = exp(-H(q) / tau).
double entropy_weight(const ProbVec& q, double tau);
// Count EMA + row normalization; honors the first-step skip.
void filter_learn(FilterState& state, const ProbVec& q, double weight);
// Advances the carried state; `carried` becomes p_{t-1} for the next step.
void filter_advance(FilterState& state, const ProbVec& q, const ProbVec& carried);

// ---------------------------------------------------------------------------
// Snapshot serialization
// ---------------------------------------------------------------------------
//
// JSON with the full double precision preserved (round-trip is bit-exact):
// {"format": "oatta.filter_state.v1", "config": {...}, "counts": [[...]],
//  "posterior_prev": [...], "raw_prev": [...], "step_index": n}
nlohmann::json filter_state_to_json(const FilterState& state);
FilterState filter_state_from_json(const nlohmann::json& j);

nlohmann::json filter_config_to_json(const FilterConfig& config);
FilterConfig filter_config_from_json(const nlohmann::json& j);

}  // namespace oatta
