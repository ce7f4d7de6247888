#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "oatta/filter.hpp"
#include "oatta/rng.hpp"

using namespace oatta;

// ============================================================================
// Independent scalar reference: plain loops over std::vector<double>, no
// library calls, mirroring the documented recursion step by step.
// ============================================================================
namespace reference {

struct Params {
  std::size_t k = 0;
  std::vector<double> rho;  // empty = uniform
  double kappa = 1.0;
  double gamma = 0.05;
  double tau = 1.0;
  double epsilon = 1e-8;
  bool count_first = false;
};

struct State {
  std::vector<std::vector<double>> counts;
  std::vector<double> posterior;
  std::vector<double> raw_prev;
  std::uint64_t step = 0;
};

struct Output {
  std::vector<double> prior;
  std::vector<double> filtered;
  double weight = 0.0;
};

inline State init(const Params& p) {
  State s;
  s.counts.assign(p.k, std::vector<double>(p.k, 0.0));
  for (std::size_t i = 0; i < p.k; ++i) s.counts[i][i] = p.kappa;
  s.posterior.assign(p.k, 1.0 / double(p.k));
  s.raw_prev = s.posterior;
  return s;
}

inline std::vector<double> norm_or_uniform(std::vector<double> v, double epsilon) {
  double sum = 0.0;
  for (double x : v) sum += x;
  if (sum < epsilon) return std::vector<double>(v.size(), 1.0 / double(v.size()));
  for (double& x : v) x /= sum;
  return v;
}

inline Output step(State& s, const std::vector<double>& q, const Params& p) {
  Output out;
  // row-normalized dynamics from counts
  std::vector<std::vector<double>> a(p.k, std::vector<double>(p.k));
  for (std::size_t i = 0; i < p.k; ++i) {
    double rs = 0.0;
    for (double x : s.counts[i]) rs += x;
    for (std::size_t j = 0; j < p.k; ++j) a[i][j] = s.counts[i][j] / rs;
  }
  // temporal prior through the transpose
  out.prior.assign(p.k, 0.0);
  for (std::size_t i = 0; i < p.k; ++i)
    for (std::size_t j = 0; j < p.k; ++j) out.prior[j] += a[i][j] * s.posterior[i];
  // likelihood: q over rho (uniform rho leaves q untouched)
  std::vector<double> lik = q;
  if (!p.rho.empty()) {
    for (std::size_t i = 0; i < p.k; ++i) lik[i] = q[i] / p.rho[i];
    lik = norm_or_uniform(lik, p.epsilon);
  }
  // posterior
  std::vector<double> post(p.k);
  for (std::size_t i = 0; i < p.k; ++i) post[i] = lik[i] * out.prior[i];
  out.filtered = norm_or_uniform(post, p.epsilon);
  // confidence weight from the raw entropy
  double h = 0.0;
  for (double x : q)
    if (x > 0.0) h -= x * std::log(x);
  out.weight = std::exp(-h / p.tau);
  // count update from consecutive raw inputs only
  if (s.step > 0 || p.count_first) {
    const double rate = p.gamma * out.weight;
    for (std::size_t i = 0; i < p.k; ++i)
      for (std::size_t j = 0; j < p.k; ++j)
        s.counts[i][j] = (1.0 - rate) * s.counts[i][j] + rate * s.raw_prev[i] * q[j];
  }
  s.posterior = out.filtered;
  s.raw_prev = q;
  ++s.step;
  return out;
}

}  // namespace reference

namespace {

ProbVec random_simplex(std::size_t k, Rng& rng) {
  std::vector<double> v(k);
  for (double& x : v) x = -std::log(1.0 - rng.next_double());
  return normalize(v);
}

// A mildly peaked random simplex, to exercise confident inputs too.
ProbVec random_peaked(std::size_t k, Rng& rng) {
  std::vector<double> v(k);
  for (double& x : v) x = 0.05 + rng.next_double();
  v[rng.next_below(k)] += 3.0 * rng.next_double();
  return normalize(v);
}

}  // namespace

// ============================================================================
// Oracle equivalence
// ============================================================================

TEST_CASE("filter matches the scalar reference over random streams") {
  Rng rng(424242);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t k = 2 + rng.next_below(9);  // 2..10
    const bool with_rho = (rep % 3 == 2);
    const bool count_first = (rep % 5 == 4);

    FilterConfig config;
    config.num_classes = k;
    config.pseudocount = 0.5 + rng.next_double();
    config.forgetting_rate = 0.02 + 0.1 * rng.next_double();
    config.entropy_temperature = 0.5 + rng.next_double();
    config.count_first_transition = count_first;

    reference::Params params;
    params.k = k;
    params.kappa = config.pseudocount;
    params.gamma = config.forgetting_rate;
    params.tau = config.entropy_temperature;
    params.epsilon = config.epsilon;
    params.count_first = count_first;
    if (with_rho) {
      const ProbVec rho = random_peaked(k, rng);
      config.class_prior = rho;
      params.rho = rho.values();
    }

    FilterState state = init_filter(config);
    reference::State ref = reference::init(params);

    for (int t = 0; t < 25; ++t) {
      const ProbVec q = (t % 2 == 0) ? random_simplex(k, rng) : random_peaked(k, rng);
      const StepOutput out = filter_step(state, q);
      const reference::Output expect = reference::step(ref, q.values(), params);

      CHECK(out.entropy_weight == doctest::Approx(expect.weight).epsilon(1e-12));
      for (std::size_t i = 0; i < k; ++i) {
        CHECK(out.temporal_prior[i] == doctest::Approx(expect.prior[i]).epsilon(1e-12));
        CHECK(out.filtered[i] == doctest::Approx(expect.filtered[i]).epsilon(1e-12));
      }
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
          CHECK(state.counts.at(i, j) == doctest::Approx(ref.counts[i][j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("allocating and scratch step overloads are bit-identical") {
  Rng rng(5150);
  FilterConfig config;
  config.num_classes = 6;
  FilterState a = init_filter(config);
  FilterState b = init_filter(config);
  StepOutput out_b;
  for (int t = 0; t < 200; ++t) {
    const ProbVec q = random_peaked(6, rng);
    const StepOutput out_a = filter_step(a, q);
    filter_step(b, q, out_b);
    CHECK(out_a.filtered == out_b.filtered);
    CHECK(out_a.temporal_prior == out_b.temporal_prior);
    CHECK(out_a.entropy_weight == out_b.entropy_weight);
    CHECK(out_a.predicted_class == out_b.predicted_class);
  }
  CHECK(a.counts == b.counts);
  CHECK(a.dynamics == b.dynamics);
  CHECK(a.posterior_prev == b.posterior_prev);
}

// ============================================================================
// Limiting behavior
// ============================================================================

TEST_CASE("uninformative input collapses the update onto the temporal prior") {
  Rng rng(77);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t k = 2 + rng.next_below(9);
    FilterConfig config;
    config.num_classes = k;
    FilterState state = init_filter(config);
    // roughen the state so the prior is far from uniform
    for (int t = 0; t < 10; ++t) (void)filter_step(state, random_peaked(k, rng));
    const StepOutput out = filter_step(state, ProbVec::uniform(k));
    for (std::size_t i = 0; i < k; ++i)
      CHECK(out.filtered[i] == doctest::Approx(out.temporal_prior[i]).epsilon(1e-12));
  }
}

TEST_CASE("uninformative temporal prior returns the input verbatim") {
  Rng rng(78);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t k = 2 + rng.next_below(9);
    FilterConfig config;
    config.num_classes = k;
    FilterState state = init_filter(config);
    // Freshly initialized: identity dynamics over a uniform posterior gives
    // a uniform temporal prior, so the first step must hand back q.
    const ProbVec q = random_peaked(k, rng);
    const StepOutput out = filter_step(state, q);
    for (std::size_t i = 0; i < k; ++i)
      CHECK(out.filtered[i] == doctest::Approx(q[i]).epsilon(1e-12));
  }
}

TEST_CASE("uniform rho takes the verbatim fast path bit for bit") {
  FilterConfig implicit_uniform;
  implicit_uniform.num_classes = 7;
  FilterConfig explicit_uniform = implicit_uniform;
  explicit_uniform.class_prior = ProbVec::uniform(7);

  Rng rng(12);
  FilterState a = init_filter(implicit_uniform);
  FilterState b = init_filter(explicit_uniform);
  for (int t = 0; t < 50; ++t) {
    const ProbVec q = random_peaked(7, rng);
    CHECK(filter_step(a, q).filtered == filter_step(b, q).filtered);
  }
  // first step: uniform prior, uniform rho -> exactly q
  const ProbVec q = random_peaked(7, rng);
  FilterState fresh = init_filter(implicit_uniform);
  CHECK(filter_step(fresh, q).filtered == q);
}

// ============================================================================
// Decoupled structure learning
// ============================================================================

TEST_CASE("perturbing the carried posterior never changes the counts") {
  Rng rng(90210);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t k = 2 + rng.next_below(9);
    FilterConfig config;
    config.num_classes = k;
    FilterState clean = init_filter(config);
    FilterState dirty = init_filter(config);
    for (int t = 0; t < 500 / 25; ++t) {  // short bursts, many repetitions
      const ProbVec q = random_peaked(k, rng);
      (void)filter_step(clean, q);
      // adversarial carry: replace the posterior before the next step
      dirty.posterior_prev = random_simplex(k, rng);
      (void)filter_step(dirty, q);
      CHECK(clean.counts == dirty.counts);      // exact equality
      CHECK(clean.dynamics == dirty.dynamics);  // and of the derived rows
    }
  }
}

TEST_CASE("first transition is skipped unless explicitly requested") {
  FilterConfig config;
  config.num_classes = 3;
  FilterState state = init_filter(config);
  const ProbVec q = ProbVec::unchecked({0.7, 0.2, 0.1});
  (void)filter_step(state, q);
  // counts still the untouched pseudocount identity
  CHECK(state.counts == CountMatrix::scaled_identity(3, config.pseudocount));

  config.count_first_transition = true;
  FilterState eager = init_filter(config);
  (void)filter_step(eager, q);
  CHECK_FALSE(eager.counts == CountMatrix::scaled_identity(3, config.pseudocount));
}

TEST_CASE("confidence weighting follows the raw entropy") {
  // uniform input at unit temperature: weight is exactly 1/K
  CHECK(entropy_weight(ProbVec::uniform(10), 1.0) == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(entropy_weight(ProbVec::one_hot(10, 4), 1.0) == 1.0);
  // colder temperature discounts uncertain inputs harder
  const ProbVec q = ProbVec::unchecked({0.6, 0.3, 0.1});
  CHECK(entropy_weight(q, 0.5) < entropy_weight(q, 1.0));
}

TEST_CASE("degenerate product falls back to uniform and keeps running") {
  reset_uniform_fallback_count();
  FilterConfig config;
  config.num_classes = 4;
  FilterState state = init_filter(config);
  state.posterior_prev = ProbVec::one_hot(4, 0);  // identity dynamics keep it one-hot
  const StepOutput out = filter_step(state, ProbVec::one_hot(4, 2));
  for (std::size_t i = 0; i < 4; ++i) CHECK(out.filtered[i] == 0.25);
  CHECK(uniform_fallback_count() > 0);
  reset_uniform_fallback_count();
  // and the recursion is still alive
  (void)filter_step(state, ProbVec::unchecked({0.4, 0.3, 0.2, 0.1}));
}

// ============================================================================
// Configuration and serialization
// ============================================================================

TEST_CASE("config validation rejects out-of-range settings") {
  const auto valid = [] {
    FilterConfig c;
    c.num_classes = 4;
    return c;
  };
  CHECK_NOTHROW(valid().validate());
  // the class count has no usable default; everything else does
  CHECK_THROWS_AS(FilterConfig{}.validate(), std::invalid_argument);
  FilterConfig c = valid();
  c.num_classes = 1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = valid();
  c.forgetting_rate = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = valid();
  c.forgetting_rate = -0.1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = valid();
  c.entropy_temperature = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = valid();
  c.pseudocount = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = valid();
  c.epsilon = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = valid();
  c.class_prior = ProbVec::uniform(5);  // wrong width
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("snapshot round trip resumes bit-exactly") {
  Rng rng(31337);
  FilterConfig config;
  config.num_classes = 8;
  config.class_prior = random_peaked(8, rng);

  std::vector<ProbVec> stream;
  for (int t = 0; t < 100; ++t) stream.push_back(random_peaked(8, rng));

  FilterState continuous = init_filter(config);
  std::vector<StepOutput> expected;
  for (const ProbVec& q : stream) expected.push_back(filter_step(continuous, q));

  FilterState first_half = init_filter(config);
  for (int t = 0; t < 50; ++t) (void)filter_step(first_half, stream[t]);
  const nlohmann::json snapshot = filter_state_to_json(first_half);
  FilterState resumed = filter_state_from_json(snapshot);
  CHECK(resumed.step_index == 50);
  for (int t = 50; t < 100; ++t) {
    const StepOutput out = filter_step(resumed, stream[t]);
    CHECK(out.filtered == expected[t].filtered);  // bit-exact
    CHECK(out.temporal_prior == expected[t].temporal_prior);
  }
  CHECK(resumed.counts == continuous.counts);
  CHECK(resumed.posterior_prev == continuous.posterior_prev);
}

TEST_CASE("snapshot parsing rejects inconsistent payloads") {
  FilterConfig config;
  config.num_classes = 3;
  FilterState state = init_filter(config);
  nlohmann::json j = filter_state_to_json(state);
  j["posterior_prev"] = std::vector<double>{0.5, 0.5};  // wrong width
  CHECK_THROWS(filter_state_from_json(j));
  nlohmann::json bad_format = filter_state_to_json(state);
  bad_format["format"] = "something.else";
  CHECK_THROWS(filter_state_from_json(bad_format));
}

TEST_CASE("config json round trip covers the uniform and explicit prior") {
  FilterConfig c;
  c.num_classes = 5;
  c.forgetting_rate = 0.07;
  const FilterConfig back = filter_config_from_json(filter_config_to_json(c));
  CHECK(back.num_classes == 5);
  CHECK(back.forgetting_rate == 0.07);
  CHECK_FALSE(back.class_prior.has_value());

  // exactly unit-mass prior survives the load-time renormalization bit for bit
  c.class_prior = ProbVec::unchecked({0.5, 0.25, 0.125, 0.0625, 0.0625});
  const FilterConfig back2 = filter_config_from_json(filter_config_to_json(c));
  REQUIRE(back2.class_prior.has_value());
  CHECK(*back2.class_prior == *c.class_prior);

  // an off-mass prior is renormalized on load
  nlohmann::json scaled = filter_config_to_json(c);
  scaled["class_prior"] = std::vector<double>{1.0, 0.5, 0.25, 0.125, 0.125};
  const FilterConfig back3 = filter_config_from_json(scaled);
  REQUIRE(back3.class_prior.has_value());
  CHECK((*back3.class_prior)[0] == doctest::Approx(0.5).epsilon(1e-14));

  // the literal "uniform" string is accepted
  nlohmann::json j = filter_config_to_json(c);
  j["class_prior"] = "uniform";
  CHECK_FALSE(filter_config_from_json(j).class_prior.has_value());
}

TEST_CASE("run_stream reports the failing step") {
  FilterConfig config;
  config.num_classes = 4;
  std::vector<ProbVec> stream{ProbVec::uniform(4), ProbVec::uniform(3)};  // bad width at t=1
  try {
    (void)run_stream(config, stream);
    FAIL("expected a dimension error");
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    CHECK(msg.find("step 1") != std::string::npos);
  }
}

TEST_CASE("dynamics converge onto persistent structure") {
  // a strongly self-persistent stream of confident inputs should push the
  // mean diagonal of the learned dynamics well above chance
  Rng rng(2718);
  FilterConfig config;
  config.num_classes = 5;
  FilterState state = init_filter(config);
  int label = 0;
  for (int t = 0; t < 3000; ++t) {
    if (rng.next_double() > 0.9) label = int(rng.next_below(5));
    std::vector<double> v(5, 0.02 / 4);
    v[label] = 0.98;
    (void)filter_step(state, ProbVec::unchecked(std::move(v)));
  }
  double diag = 0.0;
  for (std::size_t i = 0; i < 5; ++i) diag += state.dynamics.at(i, i);
  diag /= 5.0;
  CHECK(diag > 0.5);  // chance is 0.2
}
