#include "oatta/gate.hpp"

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>

namespace oatta {

void GateConfig::validate() const {
  if (!(sigmoid_temperature > 0.0))
    throw std::invalid_argument("GateConfig: sigmoid_temperature must be > 0");
  if (!(window >= 1.0)) throw std::invalid_argument("GateConfig: window must be >= 1");
  if (!(baseline_rate > 0.0 && baseline_rate <= 1.0))
    throw std::invalid_argument("GateConfig: baseline_rate must be in (0, 1]");
  if (!(epsilon > 0.0)) throw std::invalid_argument("GateConfig: epsilon must be > 0");
  if (!std::isfinite(margin)) throw std::invalid_argument("GateConfig: margin must be finite");
}

GateState init_gate(const FilterConfig& filter_config, const GateConfig& gate_config) {
  gate_config.validate();
  GateState s;
  s.config = gate_config;
  s.filter = init_filter(filter_config);
  s.baseline_prior = ProbVec::uniform(filter_config.num_classes);
  s.llr = 0.0;
  return s;
}

ProbVec update_baseline_prior(const ProbVec& baseline, const ProbVec& q, double rate) {
  return mix(baseline, q, 1.0 - rate);
}

double evidence_delta(const ProbVec& q, const ProbVec& temporal_prior,
                      const ProbVec& baseline_prior, double epsilon) {
  if (q.size() != temporal_prior.size() || q.size() != baseline_prior.size())
    throw std::invalid_argument("evidence_delta: dimension mismatch");
  double on_temporal = 0.0;
  double on_baseline = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    on_temporal += q[i] * temporal_prior[i];
    on_baseline += q[i] * baseline_prior[i];
  }
  return std::log(on_temporal + epsilon) - std::log(on_baseline + epsilon);
}

double update_llr(double llr_prev, double delta, double window) {
  const double rate = 1.0 / window;
  return (1.0 - rate) * llr_prev + rate * delta;
}

double mixing_weight(double llr, double margin, double temperature) {
  const double z = (llr - margin) / temperature;
  // Evaluate the saturating branch explicitly so extreme llr stays in [0, 1].
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

GatedStepOutput gated_step(GateState& state, const ProbVec& q) {
  FilterState& f = state.filter;
  if (q.size() != f.config.num_classes)
    throw std::invalid_argument("gated_step: q has dimension " + std::to_string(q.size()) +
                                ", expected " + std::to_string(f.config.num_classes));

  GatedStepOutput out;
  out.step.temporal_prior = filter_predict(f);
  out.step.filtered = filter_measure(f, q, out.step.temporal_prior);

  // Evidence accounting. The baseline tracks the raw source regardless of
  // what the gate decides, so the comparison stays untainted.
  state.baseline_prior = update_baseline_prior(state.baseline_prior, q, state.config.baseline_rate);
  out.evidence_delta =
      evidence_delta(q, out.step.temporal_prior, state.baseline_prior, state.config.epsilon);
  if (state.config.window_mode == EvidenceWindow::Ewma) {
    state.llr = update_llr(state.llr, out.evidence_delta, state.config.window);
  } else {
    const auto width = static_cast<std::size_t>(std::llround(state.config.window));
    state.recent_deltas.push_back(out.evidence_delta);
    if (state.recent_deltas.size() > width) state.recent_deltas.pop_front();
    state.llr = std::accumulate(state.recent_deltas.begin(), state.recent_deltas.end(), 0.0) /
                static_cast<double>(state.recent_deltas.size());
  }
  out.llr = state.llr;
  out.mixing_weight = mixing_weight(state.llr, state.config.margin, state.config.sigmoid_temperature);
  out.gated = mix(out.step.filtered, q, out.mixing_weight);

  // Transition learning sees only raw q's; the gate cannot contaminate it.
  out.step.entropy_weight = entropy_weight(q, f.config.entropy_temperature);
  filter_learn(f, q, out.step.entropy_weight);
  const ProbVec& carried = state.config.carry == GateCarry::Gated ? out.gated : out.step.filtered;
  filter_advance(f, q, carried);

  out.step.raw = q;
  out.step.predicted_class = out.step.filtered.argmax();
  out.gated_class = out.gated.argmax();
  return out;
}

std::vector<GatedStepOutput> run_gated_stream(const FilterConfig& filter_config,
                                              const GateConfig& gate_config,
                                              const std::vector<ProbVec>& stream) {
  GateState state = init_gate(filter_config, gate_config);
  std::vector<GatedStepOutput> outputs;
  outputs.reserve(stream.size());
  for (std::size_t t = 0; t < stream.size(); ++t) {
    try {
      outputs.push_back(gated_step(state, stream[t]));
    } catch (const std::exception& e) {
      throw std::runtime_error("run_gated_stream: step " + std::to_string(t) + ": " + e.what());
    }
  }
  return outputs;
}

}  // namespace oatta
