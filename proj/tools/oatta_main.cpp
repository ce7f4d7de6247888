// ============================================================================
// oatta — command-line front end
//
// Subcommands:
//   simulate   sample a label stream from a stream-spec JSON file
//   run        run the filter (and gate) over seeded synthetic streams or an
//              external prediction stream; writes per-step records, gain
//              traces, summary.json and manifest.json
//   sweep      grid sweep over alpha or target_accuracy with paired
//              significance tests; writes per-run and per-cell tables
//   evaluate   re-score previously written per-step record CSVs
//
// Every output except manifest.json is byte-stable: rerunning a command with
// the same config and seeds reproduces the files exactly.
// ============================================================================

#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "oatta/harness.hpp"
#include "oatta/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing output file: " + path.string());
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

// The manifest is the one deliberately non-reproducible output: it carries
// the wall-clock timestamp alongside the config fingerprint.
void write_manifest(const fs::path& dir, const json& effective_config,
                    const std::vector<std::string>& outputs) {
  json manifest{{"version", kVersion},
                {"config_hash", oatta::hex64(oatta::fnv1a64(effective_config.dump()))},
                {"generated_at", utc_timestamp()},
                {"outputs", outputs}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

void apply_gate_flag(oatta::ExperimentConfig& config, const std::string& gate_flag) {
  if (gate_flag.empty()) return;
  if (gate_flag == "on") {
    config.gate_enabled = true;
  } else if (gate_flag == "off") {
    config.gate_enabled = false;
  } else {
    throw std::runtime_error("--gate expects 'on' or 'off', got '" + gate_flag + "'");
  }
}

// ----------------------------------------------------------------------------
// simulate
// ----------------------------------------------------------------------------

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 const std::string& format, std::optional<std::uint64_t> seed) {
  oatta::StreamSpec spec = oatta::stream_spec_from_json(load_json_file(config_path));
  if (seed) spec.seed = *seed;
  spec.validate();

  const oatta::LabeledStream stream = oatta::sample_stream(spec);
  std::ostringstream body;
  if (format == "csv") {
    oatta::write_stream_csv(body, stream);
  } else {
    oatta::write_stream_jsonl(body, stream);
  }
  write_text_file(out_path, body.str());

  const json effective = oatta::stream_spec_to_json(spec);
  std::cout << "stream: " << stream.labels.size() << " steps -> " << out_path << "\n"
            << "spec_hash: " << oatta::hex64(oatta::fnv1a64(effective.dump())) << "\n";
  return 0;
}

// ----------------------------------------------------------------------------
// run
// ----------------------------------------------------------------------------

int cmd_run(oatta::ExperimentConfig config) {
  config.validate();
  const fs::path out_dir(config.output_dir);
  fs::create_directories(out_dir);
  std::vector<std::string> outputs;

  std::vector<oatta::GainSummary> summaries;
  auto emit_record = [&](const oatta::RunRecord& record, const std::string& tag) {
    const std::string record_name =
        "run_" + tag + (config.record_format == "csv" ? ".csv" : ".jsonl");
    std::ostringstream body;
    if (config.record_format == "csv") {
      oatta::write_run_record_csv(body, record);
    } else {
      oatta::write_run_record_jsonl(body, record);
    }
    write_text_file(out_dir / record_name, body.str());
    outputs.push_back(record_name);

    const std::string trace_name = "trace_" + tag + ".csv";
    std::ostringstream trace;
    oatta::write_gain_trace_csv(trace, record, /*span=*/300);
    write_text_file(out_dir / trace_name, trace.str());
    outputs.push_back(trace_name);
  };

  if (config.predictor) {
    const oatta::PredictorSpec predictor = config.predictor->resolve();
    for (std::uint64_t seed : config.seeds) {
      const oatta::SeedResult result =
          oatta::run_seed(config.stream, predictor, config.filter, config.gate, seed);
      emit_record(result.record, "seed" + std::to_string(seed));
      summaries.push_back(result.summary);
    }
  } else {
    const std::vector<oatta::StreamRecord> records =
        oatta::load_external_stream(*config.external_stream);
    if (!records.empty() && records.front().probs.size() != config.filter.num_classes)
      throw std::runtime_error("external stream has " +
                               std::to_string(records.front().probs.size()) +
                               " classes but the filter expects " +
                               std::to_string(config.filter.num_classes));
    const oatta::SeedResult result = oatta::run_external(records, config.filter, config.gate);
    emit_record(result.record, "external");
    summaries.push_back(result.summary);
  }

  const json summary = oatta::summarize_runs(summaries, config.gate_enabled);
  write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");
  outputs.push_back("summary.json");
  write_manifest(out_dir, oatta::experiment_config_to_json(config), outputs);

  std::cout << "runs: " << summaries.size() << " -> " << out_dir.string() << "\n"
            << "base mean accuracy:     "
            << oatta::format_double(summary["base"]["mean_accuracy"].get<double>()) << "\n"
            << "filtered mean gain pp:  "
            << oatta::format_double(summary["filtered"]["mean_gain_pp"].get<double>()) << "\n";
  if (config.gate_enabled) {
    std::cout << "gated mean gain pp:     "
              << oatta::format_double(summary["gated"]["mean_gain_pp"].get<double>()) << "\n";
  }
  return 0;
}

// ----------------------------------------------------------------------------
// sweep
// ----------------------------------------------------------------------------

int cmd_sweep(oatta::ExperimentConfig config) {
  config.validate();
  if (!config.sweep) throw std::runtime_error("sweep: config has no 'sweep' section");
  const fs::path out_dir(config.output_dir);
  fs::create_directories(out_dir);

  const oatta::SweepResult result = oatta::run_sweep(config);

  std::ostringstream runs_csv;
  oatta::write_sweep_runs_csv(runs_csv, result);
  write_text_file(out_dir / "sweep_runs.csv", runs_csv.str());

  std::ostringstream cells_csv;
  oatta::write_sweep_cells_csv(cells_csv, result);
  write_text_file(out_dir / "sweep_summary.csv", cells_csv.str());

  const json summary = oatta::sweep_to_json(result);
  write_text_file(out_dir / "sweep_summary.json", summary.dump(2) + "\n");

  write_manifest(out_dir, oatta::experiment_config_to_json(config),
                 {"sweep_runs.csv", "sweep_summary.csv", "sweep_summary.json"});

  std::cout << "sweep over " << result.parameter << ": " << result.cells.size() << " cells x "
            << config.seeds.size() << " seeds -> " << out_dir.string() << "\n";
  for (const oatta::SweepCell& cell : result.cells) {
    std::cout << "  " << result.parameter << "=" << oatta::format_double(cell.value)
              << "  filtered " << oatta::format_double(cell.mean_filtered_gain) << "pp (holm p "
              << oatta::format_double(cell.holm_p_filtered) << ")  gated "
              << oatta::format_double(cell.mean_gated_gain) << "pp (holm p "
              << oatta::format_double(cell.holm_p_gated) << ")\n";
  }
  return 0;
}

// ----------------------------------------------------------------------------
// evaluate
// ----------------------------------------------------------------------------

int cmd_evaluate(const std::vector<std::string>& record_paths, const std::string& gate_flag,
                 const std::string& out_path) {
  bool gate_enabled = true;
  if (gate_flag == "off") gate_enabled = false;

  std::vector<oatta::GainSummary> summaries;
  for (std::size_t i = 0; i < record_paths.size(); ++i) {
    std::ifstream in(record_paths[i]);
    if (!in) throw std::runtime_error("cannot open record file: " + record_paths[i]);
    const oatta::RunRecord rec = oatta::read_run_record_csv(in, record_paths[i]);
    oatta::GainSummary s;
    s.seed = i;
    s.base_accuracy = oatta::stats::accuracy(rec.raw_predictions, rec.true_labels);
    s.filtered_accuracy = oatta::stats::accuracy(rec.filtered_predictions, rec.true_labels);
    s.gated_accuracy = oatta::stats::accuracy(rec.gated_predictions, rec.true_labels);
    summaries.push_back(s);
  }
  const json summary = oatta::summarize_runs(summaries, gate_enabled);
  if (out_path.empty()) {
    std::cout << summary.dump(2) << "\n";
  } else {
    write_text_file(out_path, summary.dump(2) + "\n");
    std::cout << "summary -> " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"order-aware test-time adaptation: filter, gate, streams, evaluation"};
  app.require_subcommand(1);

  // simulate ------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "sample a label stream from a stream spec");
  std::string sim_config, sim_out, sim_format = "csv";
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--config", sim_config, "stream spec JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  sim->add_option("--out", sim_out, "output file for the sampled labels")->required();
  sim->add_option("--format", sim_format, "csv | jsonl")
      ->check(CLI::IsMember({"csv", "jsonl"}));
  sim->add_option("--seed", sim_seed, "override the stream seed");

  // run -------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "run filter and gate over streams");
  std::string run_config, run_out, run_gate, run_format;
  std::vector<std::uint64_t> run_seeds;
  run->add_option("--config", run_config, "experiment config JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "output directory (overrides config)");
  run->add_option("--seed", run_seeds, "seeds to run (overrides config)");
  run->add_option("--gate", run_gate, "on | off (overrides config)")
      ->check(CLI::IsMember({"on", "off"}));
  run->add_option("--format", run_format, "csv | jsonl record format (overrides config)")
      ->check(CLI::IsMember({"csv", "jsonl"}));

  // sweep -----------------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "grid sweep with paired significance tests");
  std::string sweep_config, sweep_out, sweep_gate;
  std::vector<std::uint64_t> sweep_seeds;
  sweep->add_option("--config", sweep_config, "experiment config JSON file with a sweep section")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--out", sweep_out, "output directory (overrides config)");
  sweep->add_option("--seed", sweep_seeds, "seeds to run (overrides config)");
  sweep->add_option("--gate", sweep_gate, "on | off (overrides config)")
      ->check(CLI::IsMember({"on", "off"}));

  // evaluate ----------------------------------------------------------------
  auto* eval = app.add_subcommand("evaluate", "re-score per-step record CSVs");
  std::vector<std::string> eval_records;
  std::string eval_gate = "on", eval_out;
  eval->add_option("--records", eval_records, "per-step record CSV files")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--gate", eval_gate, "on | off")->check(CLI::IsMember({"on", "off"}));
  eval->add_option("--out", eval_out, "summary JSON output (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(sim)) {
      return cmd_simulate(sim_config, sim_out, sim_format, sim_seed);
    }
    if (app.got_subcommand(run)) {
      oatta::ExperimentConfig config = oatta::experiment_config_from_json(load_json_file(run_config));
      if (!run_out.empty()) config.output_dir = run_out;
      if (!run_seeds.empty()) config.seeds = run_seeds;
      if (!run_format.empty()) config.record_format = run_format;
      apply_gate_flag(config, run_gate);
      return cmd_run(std::move(config));
    }
    if (app.got_subcommand(sweep)) {
      oatta::ExperimentConfig config =
          oatta::experiment_config_from_json(load_json_file(sweep_config));
      if (!sweep_out.empty()) config.output_dir = sweep_out;
      if (!sweep_seeds.empty()) config.seeds = sweep_seeds;
      apply_gate_flag(config, sweep_gate);
      return cmd_sweep(std::move(config));
    }
    if (app.got_subcommand(eval)) {
      return cmd_evaluate(eval_records, eval_gate, eval_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
