#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"
#include "oatta/simplex.hpp"

namespace oatta {

/**
 * Controlled label-stream simulator.
 *
 * Generates class-label sequences whose temporal structure is known exactly,
 * so that order-aware behavior can be measured against ground truth:
 *
 *  - Random:         i.i.d. uniform labels; no order signal at all.
 *  - Sticky:         first-order chain, A_ii = alpha, off-diagonal mass
 *                    spread evenly. Doubly stochastic, uniform stationary law.
 *  - Permuted:       mass alpha on a permutation sigma instead of the
 *                    diagonal: A[i][sigma(i)] = alpha. Also doubly stochastic.
 *  - RegimeSwitch:   Sticky(alpha) for the first half, Sticky(alpha2) for the
 *                    second; the chain continues through the switch without
 *                    resetting.
 *  - ThreePhase:     Permuted(sigma1) for the first third, a convex
 *                    interpolation A(t) = (1-beta) A1 + beta A2 across the
 *                    middle third (beta linear in t), Permuted(sigma2) for the
 *                    final third.
 *  - ExplicitMatrix / ExplicitSchedule: caller-provided stationary dynamics,
 *                    or a piecewise schedule of them.
 *
 * All sampling derives from the StreamSpec's 64-bit seed through the pinned
 * generator in rng.hpp; a given StreamSpec yields the same labels on any
 * platform.
 */

enum class StreamKind {
  Random,
  Sticky,
  Permuted,
  RegimeSwitch,
  ThreePhase,
  ExplicitMatrix,
  ExplicitSchedule,
};

struct ScheduleSegment {
  TransitionMatrix matrix;
  // First step index NOT covered by this segment; the last segment may omit
  // it (covers the remainder).
  std::optional<std::size_t> until;
};

struct StreamSpec {
  StreamKind kind = StreamKind::Sticky;
  std::size_t num_classes = 10;
  std::size_t length = 10000;
  double alpha = 0.7;    // self (or permuted-target) mass
  double alpha2 = 0.5;   // second regime / final phase
  // Permutations as images: sigma[i] is the favored successor of class i.
  // Empty selects the defaults: cyclic shift by one (sigma1) and by two
  // (sigma2).
  std::vector<std::size_t> permutation;
  std::vector<std::size_t> permutation2;
  std::uint64_t seed = 0;
  // Distribution of the first label; empty means uniform. Ignored by Random
  // streams, which are uniform at every step by definition.
  std::vector<double> initial_distribution;
  // ThreePhase boundaries; defaults are length/3 and 2*length/3.
  std::optional<std::size_t> phase1_end;
  std::optional<std::size_t> phase2_end;
  std::optional<TransitionMatrix> matrix;  // ExplicitMatrix
  std::vector<ScheduleSegment> schedule;   // ExplicitSchedule

  void validate() const;
};

struct LabeledStream {
  std::vector<int> labels;
  // Which regime generated each step: phase/segment index, 0 for stationary
  // kinds. Step 0 carries the id of the first phase.
  std::vector<int> phase_ids;
};

// A_ii = alpha, A_ij = (1 - alpha) / (K - 1). Doubly stochastic.
TransitionMatrix sticky_matrix(std::size_t k, double alpha);

// A[i][sigma(i)] = alpha, remaining mass spread over the other columns.
// sigma must be a bijection on {0..K-1}. Doubly stochastic.
TransitionMatrix permuted_matrix(std::size_t k, double alpha, std::span<const std::size_t> sigma);

// sigma(i) = (i + shift) mod K.
std::vector<std::size_t> cyclic_permutation(std::size_t k, std::size_t shift);

// Row-wise convex blend (1 - beta) A1 + beta A2; rows stay exactly unit mass.
TransitionMatrix interpolate_rows(const TransitionMatrix& a, const TransitionMatrix& b, double beta);

// Two hand-specified 10-class matrices for imbalanced-stream studies. Both
// favor transitions into the majority classes 0-4, so the stationary law
// keeps roughly an 11:1 majority/minority ratio. The first has strong
// persistence (diagonals 0.755 majority / 0.705 minority), the second
// reduced persistence (0.5909 / 0.5091) for use as a regime-switch second
// half.
std::pair<TransitionMatrix, TransitionMatrix> imbalanced_sticky_matrices();

// Samples the full label sequence for `spec`.
LabeledStream sample_stream(const StreamSpec& spec);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

nlohmann::json stream_spec_to_json(const StreamSpec& spec);
StreamSpec stream_spec_from_json(const nlohmann::json& j);

// "t,label" rows / {"t": n, "label": k} lines.
void write_stream_csv(std::ostream& os, const LabeledStream& stream);
void write_stream_jsonl(std::ostream& os, const LabeledStream& stream);

}  // namespace oatta
