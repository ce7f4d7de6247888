#include "oatta/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "oatta/io.hpp"
#include "oatta/rng.hpp"

namespace oatta {

namespace {

// Sub-stream tag for the predictor's logit noise (the label stream has its
// own tag inside sample_stream).
constexpr std::uint64_t kPredictorTag = 2;

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double mean_diagonal(const TransitionMatrix& a) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) d += a.at(i, i);
  return d / static_cast<double>(a.dim());
}

// Three-way scoring of one prediction sequence against its labels.
SeedResult score_stream(const std::vector<int>& labels, const std::vector<ProbVec>& predictions,
                        const FilterConfig& filter_config, const GateConfig& gate_config,
                        std::uint64_t seed) {
  const std::size_t n = labels.size();
  SeedResult result;
  RunRecord& rec = result.record;
  rec.true_labels = labels;
  rec.raw_predictions.resize(n);
  rec.filtered_predictions.resize(n);
  rec.gated_predictions.resize(n);
  rec.entropy_weights.resize(n);
  rec.mixing_weights.resize(n);
  rec.llr_trace.resize(n);
  rec.diagonal_mass.resize(n);

  // Plain filter pass (allocation-free step) ...
  FilterState filter = init_filter(filter_config);
  StepOutput step;
  for (std::size_t t = 0; t < n; ++t) {
    filter_step(filter, predictions[t], step);
    rec.raw_predictions[t] = static_cast<int>(predictions[t].argmax());
    rec.filtered_predictions[t] = static_cast<int>(step.predicted_class);
    rec.entropy_weights[t] = step.entropy_weight;
    rec.diagonal_mass[t] = mean_diagonal(filter.dynamics);
  }

  // ... and the gated pass over the very same inputs. Its transition
  // statistics match the plain pass exactly (learning never sees the gate).
  GateState gate = init_gate(filter_config, gate_config);
  for (std::size_t t = 0; t < n; ++t) {
    const GatedStepOutput out = gated_step(gate, predictions[t]);
    rec.gated_predictions[t] = static_cast<int>(out.gated_class);
    rec.mixing_weights[t] = out.mixing_weight;
    rec.llr_trace[t] = out.llr;
  }

  result.summary.seed = seed;
  result.summary.base_accuracy = stats::accuracy(rec.raw_predictions, rec.true_labels);
  result.summary.filtered_accuracy = stats::accuracy(rec.filtered_predictions, rec.true_labels);
  result.summary.gated_accuracy = stats::accuracy(rec.gated_predictions, rec.true_labels);
  return result;
}

}  // namespace

SeedResult run_seed(const StreamSpec& stream_spec, const PredictorSpec& predictor_spec,
                    const FilterConfig& filter_config, const GateConfig& gate_config,
                    std::uint64_t seed) {
  predictor_spec.validate();
  if (stream_spec.num_classes != predictor_spec.num_classes)
    throw std::invalid_argument("run_seed: stream/predictor class-count mismatch");

  StreamSpec effective = stream_spec;
  effective.seed = seed;  // the run seed owns the whole pipeline
  const LabeledStream labels = sample_stream(effective);

  Rng logit_rng(derive_seed(seed, kPredictorTag));
  std::vector<ProbVec> predictions;
  predictions.reserve(labels.labels.size());
  for (int y : labels.labels) predictions.push_back(emit(predictor_spec, y, logit_rng));

  return score_stream(labels.labels, predictions, filter_config, gate_config, seed);
}

SeedResult run_external(const std::vector<StreamRecord>& records,
                        const FilterConfig& filter_config, const GateConfig& gate_config) {
  if (records.empty()) throw std::invalid_argument("run_external: empty stream");
  std::vector<int> labels(records.size());
  std::vector<ProbVec> predictions(records.size());
  for (std::size_t t = 0; t < records.size(); ++t) {
    if (!records[t].label)
      throw std::invalid_argument("run_external: record " + std::to_string(t) +
                                  " has no label; evaluation needs ground truth");
    labels[t] = *records[t].label;
    predictions[t] = records[t].probs;
  }
  return score_stream(labels, predictions, filter_config, gate_config, /*seed=*/0);
}

// ============================================================================
// Configuration
// ============================================================================

void PredictorConfig::validate() const {
  if (num_classes < 2) throw std::invalid_argument("predictor: num_classes must be >= 2");
  if (!(noise_scale >= 0.0)) throw std::invalid_argument("predictor: noise_scale must be >= 0");
  if (signal_strength.has_value() == target_accuracy.has_value())
    throw std::invalid_argument(
        "predictor: exactly one of signal_strength / target_accuracy must be set");
  if (target_accuracy && !class_bias.empty())
    throw std::invalid_argument(
        "predictor: accuracy calibration assumes zero class_bias; set signal_strength instead");
  if (!class_bias.empty() && class_bias.size() != num_classes)
    throw std::invalid_argument("predictor: class_bias dimension mismatch");
  if (calibration_trials == 0) throw std::invalid_argument("predictor: calibration_trials >= 1");
  if (!(calibration_tolerance > 0.0))
    throw std::invalid_argument("predictor: calibration_tolerance must be > 0");
}

PredictorSpec PredictorConfig::resolve() const {
  validate();
  PredictorSpec spec;
  spec.num_classes = num_classes;
  spec.noise_scale = noise_scale;
  spec.class_bias = class_bias;
  if (signal_strength) {
    spec.signal_strength = *signal_strength;
  } else {
    spec.signal_strength = calibrate(num_classes, noise_scale, *target_accuracy,
                                     calibration_tolerance, calibration_trials, calibration_seed)
                               .signal_strength;
  }
  spec.validate();
  return spec;
}

void ExperimentConfig::validate() const {
  stream.validate();
  filter.validate();
  gate.validate();
  if (predictor.has_value() == external_stream.has_value())
    throw std::invalid_argument(
        "experiment: exactly one of predictor / external_stream must be set");
  if (predictor) {
    predictor->validate();
    if (predictor->num_classes != stream.num_classes)
      throw std::invalid_argument("experiment: predictor/stream class-count mismatch");
    if (filter.num_classes != stream.num_classes)
      throw std::invalid_argument("experiment: filter/stream class-count mismatch");
  }
  if (seeds.empty()) throw std::invalid_argument("experiment: seeds must be non-empty");
  if (record_format != "csv" && record_format != "jsonl")
    throw std::invalid_argument("experiment: record_format must be csv or jsonl");
  if (sweep) {
    if (sweep->parameter != "alpha" && sweep->parameter != "target_accuracy")
      throw std::invalid_argument("experiment: sweep.parameter must be alpha or target_accuracy");
    if (sweep->values.empty()) throw std::invalid_argument("experiment: sweep.values empty");
    if (!predictor)
      throw std::invalid_argument("experiment: sweeps need the synthetic predictor");
    if (sweep->parameter == "target_accuracy" && predictor->signal_strength)
      throw std::invalid_argument(
          "experiment: target_accuracy sweeps conflict with a fixed signal_strength");
  }
}

nlohmann::json gate_config_to_json(const GateConfig& config) {
  return nlohmann::json{
      {"margin", config.margin},
      {"sigmoid_temperature", config.sigmoid_temperature},
      {"window", config.window},
      {"baseline_rate", config.baseline_rate},
      {"epsilon", config.epsilon},
      {"carry", config.carry == GateCarry::Gated ? "gated" : "ungated"},
      {"window_mode", config.window_mode == EvidenceWindow::Ewma ? "ewma" : "sliding"}};
}

GateConfig gate_config_from_json(const nlohmann::json& j) {
  GateConfig c;
  c.margin = j.value("margin", c.margin);
  c.sigmoid_temperature = j.value("sigmoid_temperature", c.sigmoid_temperature);
  c.window = j.value("window", c.window);
  c.baseline_rate = j.value("baseline_rate", c.baseline_rate);
  c.epsilon = j.value("epsilon", c.epsilon);
  const std::string carry = j.value("carry", "gated");
  if (carry == "gated") {
    c.carry = GateCarry::Gated;
  } else if (carry == "ungated") {
    c.carry = GateCarry::Ungated;
  } else {
    throw std::invalid_argument("gate: carry must be 'gated' or 'ungated'");
  }
  const std::string mode = j.value("window_mode", "ewma");
  if (mode == "ewma") {
    c.window_mode = EvidenceWindow::Ewma;
  } else if (mode == "sliding") {
    c.window_mode = EvidenceWindow::Sliding;
  } else {
    throw std::invalid_argument("gate: window_mode must be 'ewma' or 'sliding'");
  }
  c.validate();
  return c;
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& config) {
  nlohmann::json j;
  j["stream"] = stream_spec_to_json(config.stream);
  if (config.predictor) {
    const PredictorConfig& p = *config.predictor;
    nlohmann::json pj{{"num_classes", p.num_classes}, {"noise_scale", p.noise_scale}};
    if (p.signal_strength) pj["signal_strength"] = *p.signal_strength;
    if (p.target_accuracy) {
      pj["target_accuracy"] = *p.target_accuracy;
      pj["calibration_trials"] = p.calibration_trials;
      pj["calibration_tolerance"] = p.calibration_tolerance;
      pj["calibration_seed"] = p.calibration_seed;
    }
    if (!p.class_bias.empty()) pj["class_bias"] = p.class_bias;
    j["predictor"] = std::move(pj);
  }
  if (config.external_stream) j["external_stream"] = *config.external_stream;
  j["filter"] = filter_config_to_json(config.filter);
  j["gate"] = gate_config_to_json(config.gate);
  j["gate"]["enabled"] = config.gate_enabled;
  j["seeds"] = config.seeds;
  j["output_dir"] = config.output_dir;
  j["record_format"] = config.record_format;
  if (config.sweep) {
    j["sweep"] = nlohmann::json{{"parameter", config.sweep->parameter},
                                {"values", config.sweep->values}};
  }
  return j;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  if (!j.contains("stream")) throw std::invalid_argument("experiment: missing 'stream'");
  c.stream = stream_spec_from_json(j.at("stream"));
  if (j.contains("predictor")) {
    const nlohmann::json& pj = j.at("predictor");
    PredictorConfig p;
    p.num_classes = pj.value("num_classes", c.stream.num_classes);
    p.noise_scale = pj.value("noise_scale", p.noise_scale);
    if (pj.contains("signal_strength")) p.signal_strength = pj.at("signal_strength").get<double>();
    if (pj.contains("target_accuracy")) p.target_accuracy = pj.at("target_accuracy").get<double>();
    p.calibration_trials = pj.value("calibration_trials", p.calibration_trials);
    p.calibration_tolerance = pj.value("calibration_tolerance", p.calibration_tolerance);
    p.calibration_seed = pj.value("calibration_seed", p.calibration_seed);
    if (pj.contains("class_bias")) p.class_bias = pj.at("class_bias").get<std::vector<double>>();
    c.predictor = std::move(p);
  }
  if (j.contains("external_stream")) c.external_stream = j.at("external_stream").get<std::string>();
  if (!j.contains("filter")) throw std::invalid_argument("experiment: missing 'filter'");
  c.filter = filter_config_from_json(j.at("filter"));
  if (j.contains("gate")) {
    c.gate = gate_config_from_json(j.at("gate"));
    c.gate_enabled = j.at("gate").value("enabled", true);
  }
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.output_dir = j.value("output_dir", c.output_dir);
  c.record_format = j.value("record_format", c.record_format);
  if (j.contains("sweep")) {
    SweepSection s;
    s.parameter = j.at("sweep").at("parameter").get<std::string>();
    s.values = j.at("sweep").at("values").get<std::vector<double>>();
    c.sweep = std::move(s);
  }
  c.validate();
  return c;
}

// ============================================================================
// Parallel dispatch
// ============================================================================

std::size_t worker_count() {
  if (const char* env = std::getenv("OATTA_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
    throw std::runtime_error("OATTA_THREADS must be a positive integer, got '" + std::string(env) +
                             "'");
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<std::size_t>(hw);
}

namespace {

// Index-addressed task fan-out; results land in caller-owned slots, so the
// output order never depends on scheduling.
void run_parallel(std::size_t num_tasks, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::min(worker_count(), num_tasks);
  if (workers <= 1) {
    for (std::size_t i = 0; i < num_tasks; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= num_tasks) return;
        try {
          task(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

// ============================================================================
// Sweeps
// ============================================================================

SweepResult run_sweep(const ExperimentConfig& config) {
  config.validate();
  if (!config.sweep) throw std::invalid_argument("run_sweep: config has no sweep section");
  const SweepSection& sweep = *config.sweep;
  const std::size_t num_cells = sweep.values.size();
  const std::size_t num_seeds = config.seeds.size();

  // Resolve one predictor per cell up front (calibration is the expensive
  // part and must not run inside the task fan-out more than once per cell).
  std::vector<PredictorSpec> cell_predictors(num_cells);
  std::vector<StreamSpec> cell_streams(num_cells, config.stream);
  for (std::size_t c = 0; c < num_cells; ++c) {
    if (sweep.parameter == "alpha") {
      cell_streams[c].alpha = sweep.values[c];
      cell_predictors[c] = config.predictor->resolve();
    } else {  // target_accuracy
      PredictorConfig p = *config.predictor;
      p.target_accuracy = sweep.values[c];
      cell_predictors[c] = p.resolve();
    }
  }

  std::vector<std::vector<GainSummary>> grid(num_cells,
                                             std::vector<GainSummary>(num_seeds));
  run_parallel(num_cells * num_seeds, [&](std::size_t task) {
    const std::size_t c = task / num_seeds;
    const std::size_t s = task % num_seeds;
    grid[c][s] = run_seed(cell_streams[c], cell_predictors[c], config.filter, config.gate,
                          config.seeds[s])
                     .summary;
  });

  SweepResult result;
  result.parameter = sweep.parameter;
  result.cells.resize(num_cells);
  std::vector<double> p_filtered(num_cells), p_gated(num_cells);
  for (std::size_t c = 0; c < num_cells; ++c) {
    SweepCell& cell = result.cells[c];
    cell.value = sweep.values[c];
    cell.per_seed = grid[c];
    std::vector<double> base, fgain, ggain, fdiff, gdiff;
    for (const GainSummary& g : grid[c]) {
      base.push_back(g.base_accuracy);
      fgain.push_back(g.filtered_gain());
      ggain.push_back(g.gated_gain());
      fdiff.push_back(g.filtered_accuracy - g.base_accuracy);
      gdiff.push_back(g.gated_accuracy - g.base_accuracy);
    }
    cell.mean_base = mean_of(base);
    cell.mean_filtered_gain = mean_of(fgain);
    cell.std_filtered_gain = sample_std(fgain);
    cell.mean_gated_gain = mean_of(ggain);
    cell.std_gated_gain = sample_std(ggain);
    cell.p_filtered = stats::wilcoxon_signed_rank(fdiff).p_value;
    cell.p_gated = stats::wilcoxon_signed_rank(gdiff).p_value;
    p_filtered[c] = cell.p_filtered;
    p_gated[c] = cell.p_gated;
  }

  // One Holm family per variant, spanning the grid.
  const std::vector<double> holm_f = stats::holm_adjust(p_filtered);
  const std::vector<double> holm_g = stats::holm_adjust(p_gated);
  for (std::size_t c = 0; c < num_cells; ++c) {
    result.cells[c].holm_p_filtered = holm_f[c];
    result.cells[c].holm_p_gated = holm_g[c];
    result.cells[c].significant_filtered = holm_f[c] < 0.05;
    result.cells[c].significant_gated = holm_g[c] < 0.05;
  }

  std::vector<double> values(num_cells), fgains(num_cells), ggains(num_cells),
      bases(num_cells);
  for (std::size_t c = 0; c < num_cells; ++c) {
    values[c] = result.cells[c].value;
    fgains[c] = result.cells[c].mean_filtered_gain;
    ggains[c] = result.cells[c].mean_gated_gain;
    bases[c] = result.cells[c].mean_base;
  }
  if (num_cells >= 2) {
    result.spearman_filtered = stats::spearman_correlation(values, fgains);
    result.spearman_gated = stats::spearman_correlation(values, ggains);
  }
  if (sweep.parameter == "target_accuracy" && num_cells >= 3) {
    result.filtered_gain_fit = stats::linear_fit(bases, fgains);
    result.gated_gain_fit = stats::linear_fit(bases, ggains);
  }
  return result;
}

// ============================================================================
// Writers
// ============================================================================

void write_run_record_csv(std::ostream& os, const RunRecord& record) {
  os << "t,true_label,raw_prediction,filtered_prediction,gated_prediction,"
        "entropy_weight,mixing_weight,llr,diag_mass\n";
  for (std::size_t t = 0; t < record.true_labels.size(); ++t) {
    os << t << ',' << record.true_labels[t] << ',' << record.raw_predictions[t] << ','
       << record.filtered_predictions[t] << ',' << record.gated_predictions[t] << ','
       << format_double(record.entropy_weights[t]) << ','
       << format_double(record.mixing_weights[t]) << ',' << format_double(record.llr_trace[t])
       << ',' << format_double(record.diagonal_mass[t]) << '\n';
  }
}

void write_run_record_jsonl(std::ostream& os, const RunRecord& record) {
  for (std::size_t t = 0; t < record.true_labels.size(); ++t) {
    os << nlohmann::json{{"t", t},
                         {"true_label", record.true_labels[t]},
                         {"raw_prediction", record.raw_predictions[t]},
                         {"filtered_prediction", record.filtered_predictions[t]},
                         {"gated_prediction", record.gated_predictions[t]},
                         {"entropy_weight", record.entropy_weights[t]},
                         {"mixing_weight", record.mixing_weights[t]},
                         {"llr", record.llr_trace[t]},
                         {"diag_mass", record.diagonal_mass[t]}}
              .dump()
       << '\n';
  }
}

RunRecord read_run_record_csv(std::istream& is, const std::string& context_name) {
  RunRecord rec;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(is, line))
    throw std::runtime_error(context_name + ": empty run record");
  ++line_no;
  if (line.rfind("t,true_label,raw_prediction", 0) != 0)
    throw std::runtime_error(context_name + ": unexpected run-record header: " + line);
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != 9)
      throw std::runtime_error(context_name + ":" + std::to_string(line_no) +
                               ": expected 9 fields, got " + std::to_string(fields.size()));
    try {
      rec.true_labels.push_back(std::stoi(fields[1]));
      rec.raw_predictions.push_back(std::stoi(fields[2]));
      rec.filtered_predictions.push_back(std::stoi(fields[3]));
      rec.gated_predictions.push_back(std::stoi(fields[4]));
      rec.entropy_weights.push_back(std::stod(fields[5]));
      rec.mixing_weights.push_back(std::stod(fields[6]));
      rec.llr_trace.push_back(std::stod(fields[7]));
      rec.diagonal_mass.push_back(std::stod(fields[8]));
    } catch (const std::exception&) {
      throw std::runtime_error(context_name + ":" + std::to_string(line_no) +
                               ": unparseable field");
    }
  }
  return rec;
}

void write_gain_trace_csv(std::ostream& os, const RunRecord& record, std::size_t span) {
  // diag_mass is the mean diagonal of A_t; subtracting chance level turns it
  // into the structural-gain trace. Chance is recovered from the very first
  // step, where A is still the identity (mean diagonal exactly 1) — so we
  // carry the raw trace and the smoothed raw trace instead, leaving the
  // chance offset to the consumer. Columns: t, diag_mass, diag_mass_smoothed.
  const std::vector<double> smoothed = stats::smoothed_trace(record.diagonal_mass, span);
  os << "t,diag_mass,diag_mass_smoothed\n";
  for (std::size_t t = 0; t < record.diagonal_mass.size(); ++t) {
    os << t << ',' << format_double(record.diagonal_mass[t]) << ','
       << format_double(smoothed[t]) << '\n';
  }
}

nlohmann::json summarize_runs(const std::vector<GainSummary>& summaries, bool gate_enabled) {
  std::vector<double> base, filt, gated, fgain, ggain, fdiff, gdiff;
  nlohmann::json per_seed = nlohmann::json::array();
  for (const GainSummary& g : summaries) {
    base.push_back(g.base_accuracy);
    filt.push_back(g.filtered_accuracy);
    gated.push_back(g.gated_accuracy);
    fgain.push_back(g.filtered_gain());
    ggain.push_back(g.gated_gain());
    fdiff.push_back(g.filtered_accuracy - g.base_accuracy);
    gdiff.push_back(g.gated_accuracy - g.base_accuracy);
    nlohmann::json row{{"seed", g.seed},
                       {"base_accuracy", g.base_accuracy},
                       {"filtered_accuracy", g.filtered_accuracy},
                       {"filtered_gain_pp", g.filtered_gain()}};
    if (gate_enabled) {
      row["gated_accuracy"] = g.gated_accuracy;
      row["gated_gain_pp"] = g.gated_gain();
    }
    per_seed.push_back(std::move(row));
  }
  nlohmann::json j{
      {"num_runs", summaries.size()},
      {"base", {{"mean_accuracy", mean_of(base)}, {"std_accuracy", sample_std(base)}}},
      {"filtered",
       {{"mean_accuracy", mean_of(filt)},
        {"std_accuracy", sample_std(filt)},
        {"mean_gain_pp", mean_of(fgain)},
        {"std_gain_pp", sample_std(fgain)}}},
      {"per_seed", std::move(per_seed)}};
  if (summaries.size() >= 2) {
    j["filtered"]["wilcoxon_p"] = stats::wilcoxon_signed_rank(fdiff).p_value;
  }
  if (gate_enabled) {
    j["gated"] = {{"mean_accuracy", mean_of(gated)},
                  {"std_accuracy", sample_std(gated)},
                  {"mean_gain_pp", mean_of(ggain)},
                  {"std_gain_pp", sample_std(ggain)}};
    if (summaries.size() >= 2) {
      j["gated"]["wilcoxon_p"] = stats::wilcoxon_signed_rank(gdiff).p_value;
    }
  }
  return j;
}

namespace {
nlohmann::json fit_to_json(const stats::LinearFit& fit) {
  nlohmann::json j{{"slope", fit.slope},
                   {"intercept", fit.intercept},
                   {"pearson_r", fit.pearson_r},
                   {"degenerate", fit.degenerate}};
  if (std::isfinite(fit.x_at_zero)) j["x_at_zero"] = fit.x_at_zero;
  return j;
}
}  // namespace

nlohmann::json sweep_to_json(const SweepResult& result) {
  nlohmann::json cells = nlohmann::json::array();
  for (const SweepCell& c : result.cells) {
    cells.push_back({{"value", c.value},
                     {"mean_base_accuracy", c.mean_base},
                     {"filtered",
                      {{"mean_gain_pp", c.mean_filtered_gain},
                       {"std_gain_pp", c.std_filtered_gain},
                       {"wilcoxon_p", c.p_filtered},
                       {"holm_p", c.holm_p_filtered},
                       {"significant", c.significant_filtered}}},
                     {"gated",
                      {{"mean_gain_pp", c.mean_gated_gain},
                       {"std_gain_pp", c.std_gated_gain},
                       {"wilcoxon_p", c.p_gated},
                       {"holm_p", c.holm_p_gated},
                       {"significant", c.significant_gated}}}});
  }
  nlohmann::json j{{"parameter", result.parameter},
                   {"cells", std::move(cells)},
                   {"spearman_filtered", result.spearman_filtered},
                   {"spearman_gated", result.spearman_gated}};
  if (result.filtered_gain_fit) j["filtered_gain_fit"] = fit_to_json(*result.filtered_gain_fit);
  if (result.gated_gain_fit) j["gated_gain_fit"] = fit_to_json(*result.gated_gain_fit);
  return j;
}

void write_sweep_runs_csv(std::ostream& os, const SweepResult& result) {
  os << "parameter,value,seed,base_accuracy,filtered_accuracy,gated_accuracy,"
        "filtered_gain_pp,gated_gain_pp\n";
  for (const SweepCell& cell : result.cells) {
    for (const GainSummary& g : cell.per_seed) {
      os << result.parameter << ',' << format_double(cell.value) << ',' << g.seed << ','
         << format_double(g.base_accuracy) << ',' << format_double(g.filtered_accuracy) << ','
         << format_double(g.gated_accuracy) << ',' << format_double(g.filtered_gain()) << ','
         << format_double(g.gated_gain()) << '\n';
    }
  }
}

void write_sweep_cells_csv(std::ostream& os, const SweepResult& result) {
  os << "parameter,value,mean_base_accuracy,"
        "mean_filtered_gain_pp,std_filtered_gain_pp,p_filtered,holm_p_filtered,significant_filtered,"
        "mean_gated_gain_pp,std_gated_gain_pp,p_gated,holm_p_gated,significant_gated\n";
  for (const SweepCell& c : result.cells) {
    os << result.parameter << ',' << format_double(c.value) << ',' << format_double(c.mean_base)
       << ',' << format_double(c.mean_filtered_gain) << ',' << format_double(c.std_filtered_gain)
       << ',' << format_double(c.p_filtered) << ',' << format_double(c.holm_p_filtered) << ','
       << (c.significant_filtered ? 1 : 0) << ',' << format_double(c.mean_gated_gain) << ','
       << format_double(c.std_gated_gain) << ',' << format_double(c.p_gated) << ','
       << format_double(c.holm_p_gated) << ',' << (c.significant_gated ? 1 : 0) << '\n';
  }
}

}  // namespace oatta
