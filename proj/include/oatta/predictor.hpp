#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "oatta/rng.hpp"
#include "oatta/simplex.hpp"

namespace oatta {

/**
 * Synthetic probabilistic predictor with a controllable accuracy dial.
 *
 * Emulates a frozen classifier scoring one observation per step: for true
 * label y the emitted distribution is
 *
 *   q = softmax(class_bias + signal_strength * onehot(y) + noise_scale * g),
 *
 * with g a vector of independent standard normals. signal_strength = 0 gives
 * chance-level predictions, large values approach a perfect one-hot oracle;
 * class_bias models a source-skewed model (e.g. one trained on imbalanced
 * data, bias ~ log source frequency).
 *
 * calibrate() inverts the dial: it finds the signal strength whose top-1
 * accuracy matches a target, by bisection against a Monte-Carlo estimate
 * with common random numbers (the same trial set at every evaluation, so
 * accuracy is deterministic and non-decreasing in s and the bisection is
 * exact).
 *
 * load_external_stream() accepts recorded per-step probabilities instead,
 * in JSONL ({"t": n, "probs": [...], "label": k?}) or CSV
 * (t,label,p0,...,p{K-1}) form.
 */

struct PredictorSpec {
  std::size_t num_classes = 10;
  double signal_strength = 0.0;   // s >= 0
  double noise_scale = 1.0;       // sigma_n >= 0
  std::vector<double> class_bias; // empty = zeros; else one logit offset per class

  void validate() const;
};

// One emission. Consumes exactly K gaussian draws from `rng` regardless of
// parameters, so seed bookkeeping is independent of the settings.
ProbVec emit(const PredictorSpec& spec, int true_label, Rng& rng);

struct CalibrationResult {
  double signal_strength = 0.0;
  double achieved_accuracy = 0.0;
  std::size_t trials = 0;
};

// Finds s in [0, 50] with |accuracy(s) - target| <= tolerance under uniform
// labels and zero class bias. Targets at or below chance (1/K) return s = 0.
// Throws std::runtime_error if the target cannot be bracketed or the trial
// resolution cannot reach the tolerance (the message carries the bracketing
// accuracies).
CalibrationResult calibrate(std::size_t num_classes, double noise_scale, double target_accuracy,
                            double tolerance, std::size_t trials, std::uint64_t seed);

struct StreamRecord {
  ProbVec probs;
  std::optional<int> label;
};

// Reads an external prediction stream. Format is chosen by extension
// (.jsonl/.ndjson vs .csv). Rows whose probabilities are off unit mass by
// less than 1e-3 are renormalized; anything worse, any negative entry, or a
// dimension change mid-file is an error naming the line number.
std::vector<StreamRecord> load_external_stream(const std::filesystem::path& path);

}  // namespace oatta
