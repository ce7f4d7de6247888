#include "doctest.h"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "oatta/stream.hpp"

using namespace oatta;

namespace {

StreamSpec base_spec(StreamKind kind, std::size_t k, std::size_t length, double alpha,
                     std::uint64_t seed) {
  StreamSpec s;
  s.kind = kind;
  s.num_classes = k;
  s.length = length;
  s.alpha = alpha;
  s.seed = seed;
  return s;
}

double self_transition_fraction(const std::vector<int>& labels) {
  std::size_t same = 0;
  for (std::size_t t = 1; t < labels.size(); ++t) same += (labels[t] == labels[t - 1]);
  return double(same) / double(labels.size() - 1);
}

}  // namespace

// ============================================================================
// Matrix builders
// ============================================================================

TEST_CASE("sticky matrix splits the off-diagonal mass evenly") {
  const TransitionMatrix m = sticky_matrix(5, 0.7);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(m.at(i, i) == doctest::Approx(0.7).epsilon(1e-15));
    double sum = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      sum += m.at(i, j);
      if (i != j) CHECK(m.at(i, j) == doctest::Approx(0.075).epsilon(1e-15));
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("permuted matrix moves the favored mass to the permutation image") {
  const std::vector<std::size_t> sigma = cyclic_permutation(4, 1);
  CHECK(sigma == std::vector<std::size_t>{1, 2, 3, 0});
  const TransitionMatrix m = permuted_matrix(4, 0.8, sigma);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(m.at(i, sigma[i]) == doctest::Approx(0.8).epsilon(1e-15));
    for (std::size_t j = 0; j < 4; ++j)
      if (j != sigma[i]) CHECK(m.at(i, j) == doctest::Approx(0.2 / 3).epsilon(1e-14));
  }
}

TEST_CASE("row interpolation is convex row by row") {
  const TransitionMatrix a = sticky_matrix(6, 0.9);
  const TransitionMatrix b = permuted_matrix(6, 0.6, cyclic_permutation(6, 2));
  for (double beta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const TransitionMatrix m = interpolate_rows(a, b, beta);
    for (std::size_t i = 0; i < 6; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < 6; ++j) {
        const double expect = (1.0 - beta) * a.at(i, j) + beta * b.at(i, j);
        CHECK(m.at(i, j) == doctest::Approx(expect).epsilon(1e-12));
        sum += m.at(i, j);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("imbalanced matrices carry the pinned entries and unit rows") {
  const auto [no_shift, second] = imbalanced_sticky_matrices();
  REQUIRE(no_shift.dim() == 10);
  REQUIRE(second.dim() == 10);
  // majority rows: strong self mass, small leak to the five minority classes
  CHECK(no_shift.at(0, 0) == doctest::Approx(0.755).epsilon(1e-9));
  CHECK(no_shift.at(0, 1) == doctest::Approx(0.055).epsilon(1e-9));
  CHECK(no_shift.at(0, 5) == doctest::Approx(0.005).epsilon(1e-9));
  CHECK(no_shift.at(9, 9) == doctest::Approx(0.705).epsilon(1e-9));
  CHECK(no_shift.at(9, 0) == doctest::Approx(0.055).epsilon(1e-9));
  CHECK(second.at(0, 0) == doctest::Approx(0.5909).epsilon(1e-9));
  CHECK(second.at(0, 1) == doctest::Approx(0.0909).epsilon(1e-9));
  CHECK(second.at(0, 5) == doctest::Approx(0.0091).epsilon(1e-9));
  CHECK(second.at(7, 7) == doctest::Approx(0.5091).epsilon(1e-9));
  for (std::size_t i = 0; i < 10; ++i) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t j = 0; j < 10; ++j) {
      s1 += no_shift.at(i, j);
      s2 += second.at(i, j);
    }
    CHECK(s1 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s2 == doctest::Approx(1.0).epsilon(1e-9));
  }
}

// ============================================================================
// Sampling
// ============================================================================

TEST_CASE("identical specs sample identical streams") {
  const StreamSpec spec = base_spec(StreamKind::Sticky, 8, 500, 0.8, 42);
  const LabeledStream a = sample_stream(spec);
  const LabeledStream b = sample_stream(spec);
  CHECK(a.labels == b.labels);
  StreamSpec other = spec;
  other.seed = 43;
  CHECK(sample_stream(other).labels != a.labels);
}

TEST_CASE("random streams are uniform and ignore the persistence dial") {
  StreamSpec spec = base_spec(StreamKind::Random, 10, 100000, 0.99, 11);
  const LabeledStream s = sample_stream(spec);
  std::vector<int> counts(10, 0);
  for (int y : s.labels) {
    REQUIRE(y >= 0);
    REQUIRE(y < 10);
    ++counts[y];
  }
  for (int c : counts) CHECK(std::abs(c / 100000.0 - 0.1) < 0.01);
  // persistence near chance, not near alpha
  CHECK(self_transition_fraction(s.labels) < 0.12);
  // alpha genuinely has no effect, draw for draw
  StreamSpec low = spec;
  low.alpha = 0.01;
  CHECK(sample_stream(low).labels == s.labels);
}

TEST_CASE("sticky streams persist at the configured rate") {
  const StreamSpec spec = base_spec(StreamKind::Sticky, 10, 100000, 0.9, 17);
  const LabeledStream s = sample_stream(spec);
  const double frac = self_transition_fraction(s.labels);
  CHECK(frac > 0.89);
  CHECK(frac < 0.91);
}

TEST_CASE("full persistence is absorbing") {
  const StreamSpec spec = base_spec(StreamKind::Sticky, 6, 200, 1.0, 3);
  const LabeledStream s = sample_stream(spec);
  for (int y : s.labels) CHECK(y == s.labels[0]);
}

TEST_CASE("one-hot initial distribution pins the first label") {
  StreamSpec spec = base_spec(StreamKind::Sticky, 4, 10, 0.5, 9);
  spec.initial_distribution = {0.0, 0.0, 1.0, 0.0};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    spec.seed = seed;
    CHECK(sample_stream(spec).labels[0] == 2);
  }
}

TEST_CASE("permuted streams follow the cycle") {
  StreamSpec spec = base_spec(StreamKind::Permuted, 5, 50000, 0.95, 23);
  const LabeledStream s = sample_stream(spec);
  std::size_t cycle_moves = 0;
  for (std::size_t t = 1; t < s.labels.size(); ++t)
    cycle_moves += (s.labels[t] == (s.labels[t - 1] + 1) % 5);
  const double frac = double(cycle_moves) / double(s.labels.size() - 1);
  CHECK(frac > 0.94);
  CHECK(frac < 0.96);
}

TEST_CASE("regime switch changes the persistence at half time") {
  StreamSpec spec = base_spec(StreamKind::RegimeSwitch, 10, 60000, 0.9, 5);
  spec.alpha2 = 0.5;
  const LabeledStream s = sample_stream(spec);
  REQUIRE(s.phase_ids.size() == s.labels.size());
  CHECK(s.phase_ids.front() == 0);
  CHECK(s.phase_ids.back() == 1);
  std::vector<int> first(s.labels.begin(), s.labels.begin() + 30000);
  std::vector<int> second(s.labels.begin() + 30000, s.labels.end());
  CHECK(std::abs(self_transition_fraction(first) - 0.9) < 0.02);
  CHECK(std::abs(self_transition_fraction(second) - 0.5) < 0.02);
  // the chain continues across the boundary: phase ids flip exactly once
  std::size_t flips = 0;
  for (std::size_t t = 1; t < s.phase_ids.size(); ++t)
    flips += (s.phase_ids[t] != s.phase_ids[t - 1]);
  CHECK(flips == 1);
}

TEST_CASE("three-phase streams pass through all three phases") {
  StreamSpec spec = base_spec(StreamKind::ThreePhase, 6, 9000, 0.9, 29);
  spec.alpha2 = 0.6;
  const LabeledStream s = sample_stream(spec);
  std::set<int> phases(s.phase_ids.begin(), s.phase_ids.end());
  CHECK(phases == std::set<int>{0, 1, 2});
  CHECK(s.phase_ids[0] == 0);
  CHECK(s.phase_ids[2999] == 0);
  CHECK(s.phase_ids[3000] == 1);
  CHECK(s.phase_ids[5999] == 1);
  CHECK(s.phase_ids[6000] == 2);
  CHECK(s.phase_ids.back() == 2);
}

TEST_CASE("explicit matrix streams use the given dynamics verbatim") {
  // a deterministic cycle as an explicit matrix: each row one-hot
  SquareMatrix cycle(4);
  for (std::size_t i = 0; i < 4; ++i) cycle.at(i, (i + 1) % 4) = 1.0;
  StreamSpec spec = base_spec(StreamKind::ExplicitMatrix, 4, 40, 0.7, 1);
  spec.matrix = TransitionMatrix::from_raw(cycle);
  spec.initial_distribution = {1.0, 0.0, 0.0, 0.0};
  const LabeledStream s = sample_stream(spec);
  for (std::size_t t = 0; t < s.labels.size(); ++t) CHECK(s.labels[t] == int(t % 4));
}

TEST_CASE("explicit schedules change dynamics at the segment boundaries") {
  SquareMatrix stay(3), cycle(3);
  for (std::size_t i = 0; i < 3; ++i) {
    stay.at(i, i) = 1.0;
    cycle.at(i, (i + 1) % 3) = 1.0;
  }
  StreamSpec spec = base_spec(StreamKind::ExplicitSchedule, 3, 30, 0.7, 1);
  ScheduleSegment first;
  first.matrix = TransitionMatrix::from_raw(stay);
  first.until = 10;
  ScheduleSegment second;
  second.matrix = TransitionMatrix::from_raw(cycle);
  spec.schedule = {first, second};
  spec.initial_distribution = {0.0, 1.0, 0.0};
  const LabeledStream s = sample_stream(spec);
  for (std::size_t t = 0; t < 10; ++t) {
    CHECK(s.labels[t] == 1);
    CHECK(s.phase_ids[t] == 0);
  }
  for (std::size_t t = 10; t < 30; ++t) {
    CHECK(s.labels[t] == int((1 + (t - 9)) % 3));
    CHECK(s.phase_ids[t] == 1);
  }
}

// ============================================================================
// Validation and serialization
// ============================================================================

TEST_CASE("spec validation rejects malformed settings") {
  StreamSpec s = base_spec(StreamKind::Sticky, 10, 100, 1.5, 0);
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = base_spec(StreamKind::Sticky, 1, 100, 0.5, 0);
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = base_spec(StreamKind::Sticky, 10, 0, 0.5, 0);
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = base_spec(StreamKind::Permuted, 4, 100, 0.5, 0);
  s.permutation = {0, 1, 1, 3};  // duplicate image
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = base_spec(StreamKind::Sticky, 3, 100, 0.5, 0);
  s.initial_distribution = {0.5, 0.5};  // wrong width
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = base_spec(StreamKind::ThreePhase, 3, 100, 0.5, 0);
  s.phase1_end = 80;
  s.phase2_end = 40;  // out of order
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = base_spec(StreamKind::ExplicitMatrix, 3, 100, 0.5, 0);
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);  // matrix missing
  s = base_spec(StreamKind::ExplicitSchedule, 3, 100, 0.5, 0);
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);  // schedule missing
}

TEST_CASE("spec json round trip preserves sampling") {
  for (StreamKind kind : {StreamKind::Random, StreamKind::Sticky, StreamKind::Permuted,
                          StreamKind::RegimeSwitch, StreamKind::ThreePhase}) {
    StreamSpec spec = base_spec(kind, 7, 300, 0.8, 99);
    spec.alpha2 = 0.55;
    const StreamSpec back = stream_spec_from_json(stream_spec_to_json(spec));
    CHECK(sample_stream(back).labels == sample_stream(spec).labels);
  }
  // explicit matrix round trip
  StreamSpec spec = base_spec(StreamKind::ExplicitMatrix, 3, 50, 0.7, 7);
  spec.matrix = sticky_matrix(3, 0.6);
  const StreamSpec back = stream_spec_from_json(stream_spec_to_json(spec));
  CHECK(sample_stream(back).labels == sample_stream(spec).labels);
}

TEST_CASE("stream writers emit one row per step") {
  const LabeledStream s = sample_stream(base_spec(StreamKind::Sticky, 3, 5, 0.5, 1));
  std::ostringstream csv;
  write_stream_csv(csv, s);
  std::size_t lines = 0;
  for (char c : csv.str()) lines += (c == '\n');
  CHECK(lines == 6);  // header + 5 rows
  CHECK(csv.str().rfind("t,label", 0) == 0);
  std::ostringstream jsonl;
  write_stream_jsonl(jsonl, s);
  lines = 0;
  for (char c : jsonl.str()) lines += (c == '\n');
  CHECK(lines == 5);
}
