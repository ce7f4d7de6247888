#include "oatta/stream.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <string>

#include "oatta/rng.hpp"

namespace oatta {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

void require_permutation(std::span<const std::size_t> sigma, std::size_t k, const char* name) {
  require(sigma.size() == k, std::string(name) + " must have K entries");
  std::vector<bool> seen(k, false);
  for (std::size_t image : sigma) {
    require(image < k, std::string(name) + " image out of range");
    require(!seen[image], std::string(name) + " is not a bijection");
    seen[image] = true;
  }
}

// Inverse-CDF draw from a matrix row. The guard returns the last class if
// rounding leaves the cumulative sum a hair under 1.
int sample_row(std::span<const double> row, double u) {
  double acc = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    acc += row[j];
    if (u < acc) return static_cast<int>(j);
  }
  return static_cast<int>(row.size()) - 1;
}

int sample_categorical(const std::vector<double>& weights, double u) {
  return sample_row(std::span<const double>(weights.data(), weights.size()), u);
}

// Sub-stream tags for derive_seed.
constexpr std::uint64_t kLabelStreamTag = 1;

}  // namespace

TransitionMatrix sticky_matrix(std::size_t k, double alpha) {
  require(k >= 2, "sticky_matrix: K must be >= 2");
  require(alpha >= 0.0 && alpha <= 1.0, "sticky_matrix: alpha must be in [0, 1]");
  const double off = (1.0 - alpha) / static_cast<double>(k - 1);
  SquareMatrix m(k, off);
  for (std::size_t i = 0; i < k; ++i) m.at(i, i) = alpha;
  return TransitionMatrix::unchecked(std::move(m));
}

TransitionMatrix permuted_matrix(std::size_t k, double alpha, std::span<const std::size_t> sigma) {
  require(k >= 2, "permuted_matrix: K must be >= 2");
  require(alpha >= 0.0 && alpha <= 1.0, "permuted_matrix: alpha must be in [0, 1]");
  require_permutation(sigma, k, "permuted_matrix: sigma");
  const double off = (1.0 - alpha) / static_cast<double>(k - 1);
  SquareMatrix m(k, off);
  for (std::size_t i = 0; i < k; ++i) m.at(i, sigma[i]) = alpha;
  return TransitionMatrix::unchecked(std::move(m));
}

std::vector<std::size_t> cyclic_permutation(std::size_t k, std::size_t shift) {
  std::vector<std::size_t> sigma(k);
  for (std::size_t i = 0; i < k; ++i) sigma[i] = (i + shift) % k;
  return sigma;
}

TransitionMatrix interpolate_rows(const TransitionMatrix& a, const TransitionMatrix& b,
                                  double beta) {
  require(a.dim() == b.dim(), "interpolate_rows: dimension mismatch");
  require(beta >= 0.0 && beta <= 1.0, "interpolate_rows: beta must be in [0, 1]");
  const std::size_t k = a.dim();
  SquareMatrix m(k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      m.at(i, j) = (1.0 - beta) * a.at(i, j) + beta * b.at(i, j);
    }
  }
  return TransitionMatrix::unchecked(std::move(m));
}

std::pair<TransitionMatrix, TransitionMatrix> imbalanced_sticky_matrices() {
  constexpr std::size_t kK = 10;
  // Majority rows: diagonal self-mass, medium mass to the other majority
  // classes, a sliver to each minority class. Minority rows mirror that with
  // their own (slightly lower) self-mass.
  const auto build = [](double maj_diag, double to_majority, double to_minority,
                        double min_diag) {
    SquareMatrix m(kK);
    for (std::size_t i = 0; i < kK; ++i) {
      const bool i_major = i < 5;
      for (std::size_t j = 0; j < kK; ++j) {
        const bool j_major = j < 5;
        double v;
        if (i == j) {
          v = i_major ? maj_diag : min_diag;
        } else if (j_major) {
          v = to_majority;
        } else {
          v = to_minority;
        }
        m.at(i, j) = v;
      }
    }
    return TransitionMatrix::from_raw(std::move(m), 1e-9);
  };
  return {build(0.755, 0.055, 0.005, 0.705), build(0.5909, 0.0909, 0.0091, 0.5091)};
}

void StreamSpec::validate() const {
  require(num_classes >= 2, "StreamSpec: num_classes must be >= 2");
  require(length >= 1, "StreamSpec: length must be >= 1");
  require(alpha >= 0.0 && alpha <= 1.0, "StreamSpec: alpha must be in [0, 1]");
  require(alpha2 >= 0.0 && alpha2 <= 1.0, "StreamSpec: alpha2 must be in [0, 1]");
  if (!permutation.empty()) require_permutation(permutation, num_classes, "StreamSpec: permutation");
  if (!permutation2.empty())
    require_permutation(permutation2, num_classes, "StreamSpec: permutation2");
  if (!initial_distribution.empty()) {
    require(initial_distribution.size() == num_classes,
            "StreamSpec: initial_distribution dimension mismatch");
    double sum = 0.0;
    for (double x : initial_distribution) {
      require(x >= 0.0, "StreamSpec: initial_distribution entries must be >= 0");
      sum += x;
    }
    require(sum > 0.0, "StreamSpec: initial_distribution has zero mass");
  }
  if (kind == StreamKind::ExplicitMatrix) {
    require(matrix.has_value(), "StreamSpec: explicit_matrix requires a matrix");
    require(matrix->dim() == num_classes, "StreamSpec: matrix dimension mismatch");
  }
  if (kind == StreamKind::ExplicitSchedule) {
    require(!schedule.empty(), "StreamSpec: explicit_schedule requires segments");
    std::size_t prev_until = 0;
    for (std::size_t s = 0; s < schedule.size(); ++s) {
      require(schedule[s].matrix.dim() == num_classes,
              "StreamSpec: schedule segment " + std::to_string(s) + " dimension mismatch");
      if (s + 1 < schedule.size()) {
        require(schedule[s].until.has_value(),
                "StreamSpec: non-final schedule segment needs 'until'");
        require(*schedule[s].until > prev_until,
                "StreamSpec: schedule boundaries must be increasing");
        prev_until = *schedule[s].until;
      }
    }
  }
  if (kind == StreamKind::ThreePhase) {
    const std::size_t t1 = phase1_end.value_or(length / 3);
    const std::size_t t2 = phase2_end.value_or(2 * length / 3);
    require(t1 >= 1 && t1 < t2 && t2 <= length,
            "StreamSpec: three_phase boundaries must satisfy 1 <= phase1_end < phase2_end <= length");
  }
}

namespace {

// Per-step dynamics resolver; owns the per-kind matrices.
class DynamicsSchedule {
 public:
  explicit DynamicsSchedule(const StreamSpec& spec) : spec_(spec) {
    const std::size_t k = spec.num_classes;
    switch (spec.kind) {
      case StreamKind::Random:
        break;
      case StreamKind::Sticky:
        phase_matrices_.push_back(sticky_matrix(k, spec.alpha));
        break;
      case StreamKind::Permuted:
        phase_matrices_.push_back(permuted_matrix(k, spec.alpha, sigma1()));
        break;
      case StreamKind::RegimeSwitch:
        phase_matrices_.push_back(sticky_matrix(k, spec.alpha));
        phase_matrices_.push_back(sticky_matrix(k, spec.alpha2));
        switch_step_ = spec.length / 2;
        break;
      case StreamKind::ThreePhase:
        phase_matrices_.push_back(permuted_matrix(k, spec.alpha, sigma1()));
        phase_matrices_.push_back(permuted_matrix(k, spec.alpha2, sigma2()));
        t1_ = spec.phase1_end.value_or(spec.length / 3);
        t2_ = spec.phase2_end.value_or(2 * spec.length / 3);
        break;
      case StreamKind::ExplicitMatrix:
        phase_matrices_.push_back(*spec.matrix);
        break;
      case StreamKind::ExplicitSchedule:
        for (const auto& seg : spec.schedule) phase_matrices_.push_back(seg.matrix);
        break;
    }
  }

  // Phase id for step t (also the id recorded for that step's label).
  int phase_of(std::size_t t) const {
    switch (spec_.kind) {
      case StreamKind::RegimeSwitch:
        return t < switch_step_ ? 0 : 1;
      case StreamKind::ThreePhase:
        return t < t1_ ? 0 : (t < t2_ ? 1 : 2);
      case StreamKind::ExplicitSchedule: {
        for (std::size_t s = 0; s + 1 < spec_.schedule.size(); ++s) {
          if (t < *spec_.schedule[s].until) return static_cast<int>(s);
        }
        return static_cast<int>(spec_.schedule.size()) - 1;
      }
      default:
        return 0;
    }
  }

  // The matrix governing the transition into step t (t >= 1).
  const TransitionMatrix& matrix_at(std::size_t t) {
    if (spec_.kind == StreamKind::ThreePhase && phase_of(t) == 1) {
      // Linear drift from the phase-1 to the phase-3 dynamics.
      const double beta = static_cast<double>(t - t1_) / static_cast<double>(t2_ - t1_);
      interpolated_ = interpolate_rows(phase_matrices_[0], phase_matrices_[1], beta);
      return interpolated_;
    }
    if (spec_.kind == StreamKind::ThreePhase) {
      return phase_matrices_[phase_of(t) == 0 ? 0 : 1];
    }
    return phase_matrices_[static_cast<std::size_t>(phase_of(t))];
  }

 private:
  std::vector<std::size_t> sigma1() const {
    return spec_.permutation.empty() ? cyclic_permutation(spec_.num_classes, 1)
                                     : spec_.permutation;
  }
  std::vector<std::size_t> sigma2() const {
    return spec_.permutation2.empty() ? cyclic_permutation(spec_.num_classes, 2)
                                      : spec_.permutation2;
  }

  const StreamSpec& spec_;
  std::vector<TransitionMatrix> phase_matrices_;
  TransitionMatrix interpolated_;
  std::size_t switch_step_ = 0;
  std::size_t t1_ = 0, t2_ = 0;
};

}  // namespace

LabeledStream sample_stream(const StreamSpec& spec) {
  spec.validate();
  const std::size_t k = spec.num_classes;
  const std::size_t n = spec.length;
  Rng rng(derive_seed(spec.seed, kLabelStreamTag));

  LabeledStream out;
  out.labels.resize(n);
  out.phase_ids.resize(n);

  if (spec.kind == StreamKind::Random) {
    for (std::size_t t = 0; t < n; ++t) {
      out.labels[t] = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(k)));
      out.phase_ids[t] = 0;
    }
    return out;
  }

  DynamicsSchedule dynamics(spec);

  if (spec.initial_distribution.empty()) {
    out.labels[0] = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(k)));
  } else {
    std::vector<double> init = spec.initial_distribution;
    double sum = 0.0;
    for (double x : init) sum += x;
    for (double& x : init) x /= sum;
    out.labels[0] = sample_categorical(init, rng.next_double());
  }
  out.phase_ids[0] = dynamics.phase_of(0);

  for (std::size_t t = 1; t < n; ++t) {
    const TransitionMatrix& a = dynamics.matrix_at(t);
    out.labels[t] = sample_row(a.row(static_cast<std::size_t>(out.labels[t - 1])),
                               rng.next_double());
    out.phase_ids[t] = dynamics.phase_of(t);
  }
  return out;
}

// ============================================================================
// Serialization
// ============================================================================

namespace {

const char* kind_name(StreamKind kind) {
  switch (kind) {
    case StreamKind::Random: return "random";
    case StreamKind::Sticky: return "sticky";
    case StreamKind::Permuted: return "permuted";
    case StreamKind::RegimeSwitch: return "regime_switch";
    case StreamKind::ThreePhase: return "three_phase";
    case StreamKind::ExplicitMatrix: return "explicit_matrix";
    case StreamKind::ExplicitSchedule: return "explicit_schedule";
  }
  return "?";
}

StreamKind kind_from_name(const std::string& name) {
  for (StreamKind kind :
       {StreamKind::Random, StreamKind::Sticky, StreamKind::Permuted, StreamKind::RegimeSwitch,
        StreamKind::ThreePhase, StreamKind::ExplicitMatrix, StreamKind::ExplicitSchedule}) {
    if (name == kind_name(kind)) return kind;
  }
  throw std::invalid_argument("stream spec: unknown kind '" + name + "'");
}

nlohmann::json matrix_rows(const TransitionMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.dim(); ++i)
    rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  return rows;
}

TransitionMatrix matrix_from_rows(const nlohmann::json& j, std::size_t expect_k) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.size() != expect_k)
    throw std::invalid_argument("stream spec: matrix must have num_classes rows");
  SquareMatrix m(expect_k);
  for (std::size_t i = 0; i < expect_k; ++i) {
    if (rows[i].size() != expect_k)
      throw std::invalid_argument("stream spec: matrix row " + std::to_string(i) +
                                  " has wrong width");
    for (std::size_t c = 0; c < expect_k; ++c) m.at(i, c) = rows[i][c];
  }
  return TransitionMatrix::from_raw(std::move(m));
}

}  // namespace

nlohmann::json stream_spec_to_json(const StreamSpec& spec) {
  nlohmann::json j{{"kind", kind_name(spec.kind)},
                   {"num_classes", spec.num_classes},
                   {"length", spec.length},
                   {"seed", spec.seed}};
  switch (spec.kind) {
    case StreamKind::Random:
      break;
    case StreamKind::Sticky:
      j["alpha"] = spec.alpha;
      break;
    case StreamKind::Permuted:
      j["alpha"] = spec.alpha;
      if (!spec.permutation.empty()) j["permutation"] = spec.permutation;
      break;
    case StreamKind::RegimeSwitch:
      j["alpha"] = spec.alpha;
      j["alpha2"] = spec.alpha2;
      break;
    case StreamKind::ThreePhase:
      j["alpha"] = spec.alpha;
      j["alpha2"] = spec.alpha2;
      if (!spec.permutation.empty()) j["permutation"] = spec.permutation;
      if (!spec.permutation2.empty()) j["permutation2"] = spec.permutation2;
      if (spec.phase1_end) j["phase1_end"] = *spec.phase1_end;
      if (spec.phase2_end) j["phase2_end"] = *spec.phase2_end;
      break;
    case StreamKind::ExplicitMatrix:
      j["matrix"] = matrix_rows(*spec.matrix);
      break;
    case StreamKind::ExplicitSchedule: {
      nlohmann::json segs = nlohmann::json::array();
      for (const auto& seg : spec.schedule) {
        nlohmann::json s{{"matrix", matrix_rows(seg.matrix)}};
        if (seg.until) s["until"] = *seg.until;
        segs.push_back(std::move(s));
      }
      j["schedule"] = std::move(segs);
      break;
    }
  }
  if (!spec.initial_distribution.empty()) j["initial_distribution"] = spec.initial_distribution;
  return j;
}

StreamSpec stream_spec_from_json(const nlohmann::json& j) {
  StreamSpec spec;
  if (!j.contains("kind")) throw std::invalid_argument("stream spec: missing 'kind'");
  spec.kind = kind_from_name(j.at("kind").get<std::string>());
  spec.num_classes = j.value("num_classes", spec.num_classes);
  spec.length = j.value("length", spec.length);
  spec.alpha = j.value("alpha", spec.alpha);
  spec.alpha2 = j.value("alpha2", spec.alpha2);
  spec.seed = j.value("seed", spec.seed);
  if (j.contains("permutation"))
    spec.permutation = j.at("permutation").get<std::vector<std::size_t>>();
  if (j.contains("permutation2"))
    spec.permutation2 = j.at("permutation2").get<std::vector<std::size_t>>();
  if (j.contains("initial_distribution"))
    spec.initial_distribution = j.at("initial_distribution").get<std::vector<double>>();
  if (j.contains("phase1_end")) spec.phase1_end = j.at("phase1_end").get<std::size_t>();
  if (j.contains("phase2_end")) spec.phase2_end = j.at("phase2_end").get<std::size_t>();
  if (j.contains("matrix")) spec.matrix = matrix_from_rows(j.at("matrix"), spec.num_classes);
  if (j.contains("schedule")) {
    for (const auto& s : j.at("schedule")) {
      ScheduleSegment seg;
      seg.matrix = matrix_from_rows(s.at("matrix"), spec.num_classes);
      if (s.contains("until")) seg.until = s.at("until").get<std::size_t>();
      spec.schedule.push_back(std::move(seg));
    }
  }
  spec.validate();
  return spec;
}

void write_stream_csv(std::ostream& os, const LabeledStream& stream) {
  os << "t,label\n";
  for (std::size_t t = 0; t < stream.labels.size(); ++t) {
    os << t << ',' << stream.labels[t] << '\n';
  }
}

void write_stream_jsonl(std::ostream& os, const LabeledStream& stream) {
  for (std::size_t t = 0; t < stream.labels.size(); ++t) {
    os << nlohmann::json{{"t", t}, {"label", stream.labels[t]}}.dump() << '\n';
  }
}

}  // namespace oatta
