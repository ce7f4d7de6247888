#include "oatta/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace oatta {

void PredictorSpec::validate() const {
  if (num_classes < 2) throw std::invalid_argument("PredictorSpec: num_classes must be >= 2");
  if (!(signal_strength >= 0.0) || !std::isfinite(signal_strength))
    throw std::invalid_argument("PredictorSpec: signal_strength must be >= 0");
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale))
    throw std::invalid_argument("PredictorSpec: noise_scale must be >= 0");
  if (!class_bias.empty() && class_bias.size() != num_classes)
    throw std::invalid_argument("PredictorSpec: class_bias dimension mismatch");
  for (double b : class_bias) {
    if (!std::isfinite(b)) throw std::invalid_argument("PredictorSpec: class_bias must be finite");
  }
}

ProbVec emit(const PredictorSpec& spec, int true_label, Rng& rng) {
  const std::size_t k = spec.num_classes;
  if (true_label < 0 || static_cast<std::size_t>(true_label) >= k)
    throw std::invalid_argument("emit: true_label out of range");
  std::vector<double> logits(k);
  for (std::size_t i = 0; i < k; ++i) {
    double z = spec.noise_scale * rng.next_gaussian();
    if (!spec.class_bias.empty()) z += spec.class_bias[i];
    if (static_cast<std::size_t>(true_label) == i) z += spec.signal_strength;
    logits[i] = z;
  }
  // Stable softmax.
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& z : logits) {
    z = std::exp(z - top);
    sum += z;
  }
  const double inv = 1.0 / sum;
  for (double& z : logits) z *= inv;
  return ProbVec::unchecked(std::move(logits));
}

namespace {
constexpr std::uint64_t kCalibrationLabelTag = 11;
constexpr std::uint64_t kCalibrationNoiseTag = 12;
constexpr double kMaxSignal = 50.0;
}  // namespace

CalibrationResult calibrate(std::size_t num_classes, double noise_scale, double target_accuracy,
                            double tolerance, std::size_t trials, std::uint64_t seed) {
  if (num_classes < 2) throw std::invalid_argument("calibrate: num_classes must be >= 2");
  if (!(noise_scale >= 0.0)) throw std::invalid_argument("calibrate: noise_scale must be >= 0");
  if (!(target_accuracy < 1.0)) throw std::invalid_argument("calibrate: target_accuracy must be < 1");
  if (!(tolerance > 0.0)) throw std::invalid_argument("calibrate: tolerance must be > 0");
  if (trials == 0) throw std::invalid_argument("calibrate: trials must be >= 1");

  const std::size_t k = num_classes;

  // Common random numbers: one fixed trial set, reused at every signal
  // strength. Each trial keeps the noise of its true class and the maximum
  // competing noise; a trial is correct iff s + sigma*g_true > sigma*g_max.
  // That makes accuracy(s) exactly non-decreasing in s.
  std::vector<double> true_noise(trials), best_other(trials);
  {
    Rng label_rng(derive_seed(seed, kCalibrationLabelTag));
    Rng noise_rng(derive_seed(seed, kCalibrationNoiseTag));
    for (std::size_t i = 0; i < trials; ++i) {
      const auto y = label_rng.next_below(static_cast<std::uint32_t>(k));
      double g_true = 0.0, g_max = -1e300;
      for (std::size_t c = 0; c < k; ++c) {
        const double g = noise_rng.next_gaussian();
        if (c == y) {
          g_true = g;
        } else if (g > g_max) {
          g_max = g;
        }
      }
      true_noise[i] = noise_scale * g_true;
      best_other[i] = noise_scale * g_max;
    }
  }

  // Correct when the true logit strictly beats the best competitor; argmax
  // ties at s = 0, sigma = 0 resolve to the lowest index, matching emit().
  const auto accuracy_at = [&](double s) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < trials; ++i) {
      if (s + true_noise[i] > best_other[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(trials);
  };

  const double chance = 1.0 / static_cast<double>(k);
  if (target_accuracy <= chance) {
    return {0.0, accuracy_at(0.0), trials};
  }

  double lo = 0.0, hi = kMaxSignal;
  double acc_lo = accuracy_at(lo), acc_hi = accuracy_at(hi);
  if (std::abs(acc_lo - target_accuracy) <= tolerance) return {lo, acc_lo, trials};
  if (acc_hi < target_accuracy - tolerance) {
    throw std::runtime_error("calibrate: target accuracy " + std::to_string(target_accuracy) +
                             " unreachable; accuracy(" + std::to_string(lo) + ") = " +
                             std::to_string(acc_lo) + ", accuracy(" + std::to_string(hi) +
                             ") = " + std::to_string(acc_hi));
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double acc = accuracy_at(mid);
    if (std::abs(acc - target_accuracy) <= tolerance) return {mid, acc, trials};
    if (acc < target_accuracy) {
      lo = mid;
      acc_lo = acc;
    } else {
      hi = mid;
      acc_hi = acc;
    }
    if (hi - lo < 1e-12) break;
  }
  throw std::runtime_error(
      "calibrate: tolerance " + std::to_string(tolerance) + " not reachable at " +
      std::to_string(trials) + " trials; bracket accuracy [" + std::to_string(acc_lo) + ", " +
      std::to_string(acc_hi) + "] around target " + std::to_string(target_accuracy) +
      " — increase trials or widen the tolerance");
}

// ============================================================================
// External prediction streams
// ============================================================================

namespace {

[[noreturn]] void fail_line(const std::filesystem::path& path, std::size_t line_no,
                            const std::string& what) {
  throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

// Unit-mass check with repair: small drift renormalizes, big drift is data
// corruption and must surface.
ProbVec checked_probs(std::vector<double> probs, const std::filesystem::path& path,
                      std::size_t line_no) {
  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p)) fail_line(path, line_no, "non-finite probability");
    if (p < 0.0) fail_line(path, line_no, "negative probability " + std::to_string(p));
    sum += p;
  }
  if (std::abs(sum - 1.0) >= 1e-3)
    fail_line(path, line_no,
              "probabilities sum to " + std::to_string(sum) + ", outside the 1e-3 tolerance");
  const double inv = 1.0 / sum;
  for (double& p : probs) p *= inv;
  return ProbVec::unchecked(std::move(probs));
}

std::vector<StreamRecord> load_jsonl(const std::filesystem::path& path, std::ifstream& in) {
  std::vector<StreamRecord> records;
  std::string line;
  std::size_t line_no = 0;
  std::size_t k = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail_line(path, line_no, std::string("bad JSON: ") + e.what());
    }
    if (!j.contains("probs") || !j.at("probs").is_array())
      fail_line(path, line_no, "missing 'probs' array");
    auto probs = j.at("probs").get<std::vector<double>>();
    if (k == 0) k = probs.size();
    if (probs.size() != k)
      fail_line(path, line_no, "expected " + std::to_string(k) + " probabilities, got " +
                                   std::to_string(probs.size()));
    StreamRecord rec;
    rec.probs = checked_probs(std::move(probs), path, line_no);
    if (j.contains("label") && !j.at("label").is_null()) {
      const int label = j.at("label").get<int>();
      if (label < 0 || static_cast<std::size_t>(label) >= k)
        fail_line(path, line_no, "label " + std::to_string(label) + " out of range");
      rec.label = label;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<StreamRecord> load_csv(const std::filesystem::path& path, std::ifstream& in) {
  std::vector<StreamRecord> records;
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) return records;
  ++line_no;
  // Header: t,label,p0,...,p{K-1}
  std::size_t k = 0;
  {
    std::stringstream header(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(header, field, ',')) fields.push_back(field);
    if (fields.size() < 3 || fields[0] != "t" || fields[1] != "label")
      fail_line(path, line_no, "expected header t,label,p0,...");
    k = fields.size() - 2;
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != k + 2)
      fail_line(path, line_no, "expected " + std::to_string(k + 2) + " fields, got " +
                                   std::to_string(fields.size()));
    StreamRecord rec;
    std::vector<double> probs(k);
    try {
      for (std::size_t i = 0; i < k; ++i) probs[i] = std::stod(fields[i + 2]);
      if (!fields[1].empty()) {
        const int label = std::stoi(fields[1]);
        if (label < 0 || static_cast<std::size_t>(label) >= k)
          fail_line(path, line_no, "label " + std::to_string(label) + " out of range");
        rec.label = label;
      }
    } catch (const std::invalid_argument&) {
      fail_line(path, line_no, "unparseable numeric field");
    } catch (const std::out_of_range&) {
      fail_line(path, line_no, "numeric field out of range");
    }
    rec.probs = checked_probs(std::move(probs), path, line_no);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

std::vector<StreamRecord> load_external_stream(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_external_stream: cannot open " + path.string());
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".ndjson") return load_jsonl(path, in);
  if (ext == ".csv") return load_csv(path, in);
  throw std::runtime_error("load_external_stream: unsupported extension '" + ext +
                           "' (expected .csv, .jsonl or .ndjson): " + path.string());
}

}  // namespace oatta
