#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "oatta/filter.hpp"
#include "oatta/simplex.hpp"

namespace oatta {

/**
 * Evidence gate: a safety valve around the recursive filter.
 *
 * On streams with no temporal order the learned dynamics are pure noise and
 * filtering can only hurt. The gate watches how much better the temporal
 * prior pi_t explains the incoming predictions than an order-agnostic
 * baseline prior pi_bar_t (an EMA of the raw q's), and softly interpolates
 * between the filtered posterior and the untouched source:
 *
 *   pi_bar_t = normalize((1 - eta) pi_bar_{t-1} + eta q_t)
 *   delta_t  = log(<q_t, pi_t> + eps) - log(<q_t, pi_bar_t> + eps)
 *   llr_t    = (1 - 1/W) llr_{t-1} + (1/W) delta_t
 *   lambda_t = sigmoid((llr_t - margin) / tau_G)
 *   p_hat_t  = normalize(lambda_t p_t + (1 - lambda_t) q_t)
 *
 * With no order signal, delta_t hovers near zero, lambda_t stays low and the
 * output falls back to q_t; on genuinely ordered streams the evidence
 * accumulates, lambda_t -> 1 and the filter takes over. Raising the margin
 * makes the gate more conservative: lambda_t is weakly decreasing in it for
 * any fixed evidence trace.
 *
 * Transition learning stays untouched: counts always update from the raw
 * q's, regardless of lambda. By default the gated posterior is what the next
 * prediction is built from (carry = Gated); carry = Ungated instead carries
 * the pure filtered posterior.
 *
 * The default llr estimator is the EWMA above (W acts as an effective memory
 * length). A strict sliding-window mean over the last round(W) deltas is
 * available for equivalence studies.
 */

enum class GateCarry { Gated, Ungated };
enum class EvidenceWindow { Ewma, Sliding };

struct GateConfig {
  double margin = 0.0;                // m, in llr units
  double sigmoid_temperature = 0.05;  // tau_G
  double window = 50.0;               // W >= 1
  double baseline_rate = 0.02;        // eta, in (0, 1]
  double epsilon = 1e-8;
  GateCarry carry = GateCarry::Gated;
  EvidenceWindow window_mode = EvidenceWindow::Ewma;

  void validate() const;
};

struct GateState {
  GateConfig config;
  ProbVec baseline_prior;           // pi_bar_{t}
  double llr = 0.0;
  std::deque<double> recent_deltas; // sliding mode only
  FilterState filter;
};

struct GatedStepOutput {
  StepOutput step;               // raw / temporal prior / filtered, as in the plain filter
  double evidence_delta = 0.0;   // delta_t
  double llr = 0.0;              // after this step's update
  double mixing_weight = 0.0;    // lambda_t
  ProbVec gated;                 // p_hat_t
  std::size_t gated_class = 0;   // argmax of gated
};

GateState init_gate(const FilterConfig& filter_config, const GateConfig& gate_config);

// pi_bar update: EMA toward q, renormalized.
ProbVec update_baseline_prior(const ProbVec& baseline, const ProbVec& q, double rate);

// One-step log evidence for "ordered" vs "order-free" explanations of q.
// Antisymmetric under swapping the two priors.
double evidence_delta(const ProbVec& q, const ProbVec& temporal_prior,
                      const ProbVec& baseline_prior, double epsilon);

// EWMA accumulator: (1 - 1/W) llr + (1/W) delta.
double update_llr(double llr_prev, double delta, double window);

// lambda = sigmoid((llr - margin) / temperature).
double mixing_weight(double llr, double margin, double temperature);

GatedStepOutput gated_step(GateState& state, const ProbVec& q);

std::vector<GatedStepOutput> run_gated_stream(const FilterConfig& filter_config,
                                              const GateConfig& gate_config,
                                              const std::vector<ProbVec>& stream);

}  // namespace oatta
