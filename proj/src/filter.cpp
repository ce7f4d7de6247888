#include "oatta/filter.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace oatta {

namespace {

bool is_uniform(const ProbVec& v) {
  const double u = 1.0 / static_cast<double>(v.size());
  for (double x : v.values()) {
    if (x != u) return false;
  }
  return true;
}

// In-place counterpart of normalize() for internally built nonnegative
// buffers: same arithmetic, same uniform fallback, no per-entry validation.
void normalize_in_place(std::vector<double>& v, double epsilon) {
  double sum = 0.0;
  for (double x : v) sum += x;
  if (sum < epsilon) {
    const ProbVec u = normalize(v, epsilon);  // routes through the fallback + diagnostic
    v.assign(u.values().begin(), u.values().end());
    return;
  }
  const double inv = 1.0 / sum;
  for (double& x : v) x *= inv;
}

}  // namespace

void FilterConfig::validate() const {
  if (num_classes < 2) throw std::invalid_argument("FilterConfig: num_classes must be >= 2");
  if (class_prior) {
    if (class_prior->size() != num_classes)
      throw std::invalid_argument("FilterConfig: class_prior dimension mismatch");
    for (double x : class_prior->values()) {
      if (!(x > 0.0)) throw std::invalid_argument("FilterConfig: class_prior entries must be > 0");
    }
  }
  if (!(pseudocount > 0.0)) throw std::invalid_argument("FilterConfig: pseudocount must be > 0");
  if (!(forgetting_rate > 0.0 && forgetting_rate < 1.0))
    throw std::invalid_argument("FilterConfig: forgetting_rate must be in (0, 1)");
  if (!(entropy_temperature > 0.0))
    throw std::invalid_argument("FilterConfig: entropy_temperature must be > 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("FilterConfig: epsilon must be > 0");
}

FilterState init_filter(const FilterConfig& config) {
  config.validate();
  FilterState s;
  s.config = config;
  // Canonical form: an explicitly uniform prior behaves exactly like no
  // prior, so fold it away and keep the verbatim-q fast path honest.
  if (s.config.class_prior && is_uniform(*s.config.class_prior)) s.config.class_prior.reset();
  s.counts = CountMatrix::scaled_identity(config.num_classes, config.pseudocount);
  s.dynamics = row_normalize(s.counts);  // = identity
  s.posterior_prev = ProbVec::uniform(config.num_classes);
  s.raw_prev = ProbVec::uniform(config.num_classes);
  s.step_index = 0;
  return s;
}

ProbVec to_likelihood(const ProbVec& q, const ProbVec& rho, double epsilon) {
  if (q.size() != rho.size()) throw std::invalid_argument("to_likelihood: dimension mismatch");
  if (is_uniform(rho)) return q;  // division by a constant is a no-op
  std::vector<double> ratio(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!(rho[i] > 0.0)) throw std::invalid_argument("to_likelihood: rho entries must be > 0");
    ratio[i] = q[i] / rho[i];
  }
  return normalize(ratio, epsilon);
}

ProbVec filter_predict(const FilterState& state) {
  return project_posterior(state.dynamics, state.posterior_prev);
}

ProbVec filter_measure(const FilterState& state, const ProbVec& q, const ProbVec& prediction) {
  if (state.config.class_prior) {
    const ProbVec likelihood = to_likelihood(q, *state.config.class_prior, state.config.epsilon);
    return multiply_and_normalize(likelihood, prediction, state.config.epsilon);
  }
  return multiply_and_normalize(q, prediction, state.config.epsilon);
}

double entropy_weight(const ProbVec& q, double tau) {
  return std::exp(-shannon_entropy(q) / tau);
}

void filter_learn(FilterState& state, const ProbVec& q, double weight) {
  if (state.step_index == 0 && !state.config.count_first_transition) return;
  state.counts.ema_update(state.raw_prev, q, state.config.forgetting_rate * weight);
  state.dynamics.assign_row_normalized(state.counts);
}

void filter_advance(FilterState& state, const ProbVec& q, const ProbVec& carried) {
  state.posterior_prev = carried;
  state.raw_prev = q;
  ++state.step_index;
}

StepOutput filter_step(FilterState& state, const ProbVec& q) {
  StepOutput out;
  filter_step(state, q, out);
  return out;
}

void filter_step(FilterState& state, const ProbVec& q, StepOutput& out) {
  const std::size_t k = state.config.num_classes;
  if (q.size() != k)
    throw std::invalid_argument("filter_step: q has dimension " + std::to_string(q.size()) +
                                ", expected " + std::to_string(k));

  // Predict, then measure, both in scratch storage: the arithmetic mirrors
  // filter_predict/filter_measure exactly, without per-step allocation.
  project_posterior_into(state.dynamics, state.posterior_prev, state.scratch_prior);

  auto& post = state.scratch_posterior;
  post.resize(k);
  if (state.config.class_prior) {
    auto& lik = state.scratch_likelihood;
    lik.resize(k);
    const ProbVec& rho = *state.config.class_prior;
    for (std::size_t i = 0; i < k; ++i) lik[i] = q[i] / rho[i];
    normalize_in_place(lik, state.config.epsilon);
    for (std::size_t i = 0; i < k; ++i) post[i] = lik[i] * state.scratch_prior[i];
  } else {
    // Uniform rho: the likelihood is q itself, verbatim.
    for (std::size_t i = 0; i < k; ++i) post[i] = q[i] * state.scratch_prior[i];
  }
  normalize_in_place(post, state.config.epsilon);

  out.temporal_prior.assign_unchecked(state.scratch_prior);
  out.filtered.assign_unchecked(post);
  out.entropy_weight = entropy_weight(q, state.config.entropy_temperature);
  filter_learn(state, q, out.entropy_weight);
  state.posterior_prev.assign_unchecked(post);
  state.raw_prev = q;
  ++state.step_index;
  out.raw = q;
  out.predicted_class = out.filtered.argmax();
}

std::vector<StepOutput> run_stream(const FilterConfig& config, const std::vector<ProbVec>& stream) {
  FilterState state = init_filter(config);
  std::vector<StepOutput> outputs;
  outputs.reserve(stream.size());
  for (std::size_t t = 0; t < stream.size(); ++t) {
    try {
      outputs.push_back(filter_step(state, stream[t]));
    } catch (const std::exception& e) {
      throw std::runtime_error("run_stream: step " + std::to_string(t) + ": " + e.what());
    }
  }
  return outputs;
}

// ============================================================================
// Serialization
// ============================================================================

namespace {

nlohmann::json matrix_to_json(const SquareMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.dim(); ++i) {
    rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  }
  return rows;
}

SquareMatrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const std::size_t k = rows.size();
  SquareMatrix m(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (rows[i].size() != k) throw std::invalid_argument("matrix_from_json: ragged rows");
    for (std::size_t c = 0; c < k; ++c) m.at(i, c) = rows[i][c];
  }
  return m;
}

}  // namespace

nlohmann::json filter_config_to_json(const FilterConfig& config) {
  nlohmann::json j{{"num_classes", config.num_classes},
                   {"pseudocount", config.pseudocount},
                   {"forgetting_rate", config.forgetting_rate},
                   {"entropy_temperature", config.entropy_temperature},
                   {"epsilon", config.epsilon},
                   {"count_first_transition", config.count_first_transition}};
  if (config.class_prior) {
    j["class_prior"] = config.class_prior->values();
  } else {
    j["class_prior"] = "uniform";
  }
  return j;
}

FilterConfig filter_config_from_json(const nlohmann::json& j) {
  FilterConfig c;
  c.num_classes = j.at("num_classes").get<std::size_t>();
  if (j.contains("class_prior") && !j.at("class_prior").is_string()) {
    c.class_prior = normalize(j.at("class_prior").get<std::vector<double>>());
  }
  c.pseudocount = j.value("pseudocount", c.pseudocount);
  c.forgetting_rate = j.value("forgetting_rate", c.forgetting_rate);
  c.entropy_temperature = j.value("entropy_temperature", c.entropy_temperature);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.count_first_transition = j.value("count_first_transition", c.count_first_transition);
  c.validate();
  return c;
}

nlohmann::json filter_state_to_json(const FilterState& state) {
  return nlohmann::json{{"format", "oatta.filter_state.v1"},
                        {"config", filter_config_to_json(state.config)},
                        {"counts", matrix_to_json(state.counts.raw())},
                        {"posterior_prev", state.posterior_prev.values()},
                        {"raw_prev", state.raw_prev.values()},
                        {"step_index", state.step_index}};
}

FilterState filter_state_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "oatta.filter_state.v1")
    throw std::invalid_argument("filter_state_from_json: unknown format tag");
  FilterState s;
  s.config = filter_config_from_json(j.at("config"));
  s.counts = CountMatrix::from_raw(matrix_from_json(j.at("counts")));
  if (s.counts.dim() != s.config.num_classes)
    throw std::invalid_argument("filter_state_from_json: counts dimension mismatch");
  s.dynamics = row_normalize(s.counts);
  // Snapshot values are trusted verbatim so the round-trip is bit-exact.
  s.posterior_prev = ProbVec::unchecked(j.at("posterior_prev").get<std::vector<double>>());
  s.raw_prev = ProbVec::unchecked(j.at("raw_prev").get<std::vector<double>>());
  if (s.posterior_prev.size() != s.config.num_classes || s.raw_prev.size() != s.config.num_classes)
    throw std::invalid_argument("filter_state_from_json: vector dimension mismatch");
  s.step_index = j.at("step_index").get<std::uint64_t>();
  return s;
}

}  // namespace oatta
