#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "oatta/filter.hpp"
#include "oatta/gate.hpp"
#include "oatta/predictor.hpp"
#include "oatta/stats.hpp"
#include "oatta/stream.hpp"

namespace oatta {

/**
 * Experiment harness: ties streams, predictors and both filter variants into
 * paired, seeded, reproducible runs.
 *
 * One seed = one stream + one prediction sequence, scored three ways on
 * exactly the same inputs: the raw source (base), the plain filter, and the
 * gated filter. Gains are therefore paired per seed, which is what the
 * significance tests assume. Sub-generators (labels, logits) derive from the
 * run seed through fixed tags, so any spec field can change without
 * reshuffling the rest.
 *
 * Sweeps scan one knob (stream stickiness or calibrated predictor accuracy)
 * over a grid, aggregate per-cell means, and attach Wilcoxon p-values with
 * Holm correction across the grid (one family per filter variant).
 */

// Per-step trace of one run. Columns are parallel arrays of length T.
struct RunRecord {
  std::vector<int> true_labels;
  std::vector<int> raw_predictions;
  std::vector<int> filtered_predictions;
  std::vector<int> gated_predictions;
  std::vector<double> entropy_weights;   // w_t
  std::vector<double> mixing_weights;    // lambda_t
  std::vector<double> llr_trace;
  std::vector<double> diagonal_mass;     // mean A_ii after the step's update
};

struct GainSummary {
  std::uint64_t seed = 0;
  double base_accuracy = 0.0;
  double filtered_accuracy = 0.0;
  double gated_accuracy = 0.0;
  // Gains in percentage points over the base predictor.
  double filtered_gain() const { return 100.0 * (filtered_accuracy - base_accuracy); }
  double gated_gain() const { return 100.0 * (gated_accuracy - base_accuracy); }
};

struct SeedResult {
  RunRecord record;
  GainSummary summary;
};

// Synthetic pipeline: sample labels, emit predictions, run both variants.
SeedResult run_seed(const StreamSpec& stream_spec, const PredictorSpec& predictor_spec,
                    const FilterConfig& filter_config, const GateConfig& gate_config,
                    std::uint64_t seed);

// Recorded-predictions pipeline; every record must carry a label.
SeedResult run_external(const std::vector<StreamRecord>& records,
                        const FilterConfig& filter_config, const GateConfig& gate_config);

// ---------------------------------------------------------------------------
// Experiment configuration (the CLI's config file, minus the sweep section)
// ---------------------------------------------------------------------------

struct PredictorConfig {
  std::size_t num_classes = 10;
  double noise_scale = 1.0;
  // Exactly one of the two must be set.
  std::optional<double> signal_strength;
  std::optional<double> target_accuracy;
  std::size_t calibration_trials = 200000;
  double calibration_tolerance = 0.005;
  std::uint64_t calibration_seed = 9001;
  std::vector<double> class_bias;

  void validate() const;
  // Resolves target_accuracy via calibrate() when needed.
  PredictorSpec resolve() const;
};

struct SweepSection {
  std::string parameter;        // "alpha" | "target_accuracy"
  std::vector<double> values;
};

struct ExperimentConfig {
  StreamSpec stream;
  std::optional<PredictorConfig> predictor;
  std::optional<std::string> external_stream;  // path; exactly one source
  FilterConfig filter;
  GateConfig gate;
  bool gate_enabled = true;
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "out";
  std::string record_format = "csv";  // "csv" | "jsonl"
  std::optional<SweepSection> sweep;

  void validate() const;
};

nlohmann::json experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json gate_config_to_json(const GateConfig& config);
GateConfig gate_config_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepCell {
  double value = 0.0;                  // the swept knob
  std::vector<GainSummary> per_seed;
  double mean_base = 0.0;
  double mean_filtered_gain = 0.0, std_filtered_gain = 0.0;
  double mean_gated_gain = 0.0, std_gated_gain = 0.0;
  double p_filtered = 1.0, p_gated = 1.0;            // Wilcoxon across seeds
  double holm_p_filtered = 1.0, holm_p_gated = 1.0;  // adjusted across cells
  bool significant_filtered = false, significant_gated = false;  // at 0.05
};

struct SweepResult {
  std::string parameter;
  std::vector<SweepCell> cells;
  // Gain (pp) regressed on mean base accuracy (fraction); accuracy sweeps only.
  std::optional<stats::LinearFit> filtered_gain_fit;
  std::optional<stats::LinearFit> gated_gain_fit;
  // Rank correlation of mean gain with the swept value.
  double spearman_filtered = 0.0;
  double spearman_gated = 0.0;
};

// Runs the grid; cells x seeds are dispatched to a worker pool sized by
// OATTA_THREADS (default: hardware concurrency).
SweepResult run_sweep(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Writers (all deterministic; no timestamps outside the manifest)
// ---------------------------------------------------------------------------

void write_run_record_csv(std::ostream& os, const RunRecord& record);
void write_run_record_jsonl(std::ostream& os, const RunRecord& record);
RunRecord read_run_record_csv(std::istream& is, const std::string& context_name);

// t, mean diagonal mass of the learned transition matrix, and its EMA-
// smoothed trace; subtract 1/K to read it as structural gain.
void write_gain_trace_csv(std::ostream& os, const RunRecord& record, std::size_t span);

nlohmann::json summarize_runs(const std::vector<GainSummary>& summaries, bool gate_enabled);
nlohmann::json sweep_to_json(const SweepResult& result);
void write_sweep_cells_csv(std::ostream& os, const SweepResult& result);
void write_sweep_runs_csv(std::ostream& os, const SweepResult& result);

// Worker-pool width: OATTA_THREADS when set (>= 1), else hardware
// concurrency, else 1.
std::size_t worker_count();

}  // namespace oatta
