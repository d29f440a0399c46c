#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dybm/model.hpp"
#include "dybm/rng.hpp"
#include "dybm/sequence.hpp"

namespace dybm {

struct CorrelationReport {
  std::vector<std::pair<double, double>> pairs;  // (true_nll, model_nll)
  double pearson_r = 0.0;
};

// Sample Pearson r; throws UndefinedCorrelationError on fewer than two pairs
// or zero variance in either coordinate.
double pearson_correlation(std::span<const std::pair<double, double>> pairs);

struct AccuracyReport {
  std::vector<double> per_frame_accuracy;  // percent per time column
  double overall_accuracy = 0.0;
  double reconstruction_accuracy = 0.0;
  double prediction_accuracy = 0.0;
  int n_recon_frames = 0;
};

// Percent of matching bits, per frame and overall; columns before
// n_recon_frames count as reconstruction, the rest as prediction.
AccuracyReport bit_accuracy(const BinarySequence& predicted, const BinarySequence& truth,
                            int n_recon_frames);

enum class RolloutMode { sampled, thresholded };

// Teacher-forced one-step predictions over seed_frames (reconstruction), then
// n_future autoregressive frames. Thresholded mode emits 1 iff p > 0.5; ties
// at exactly 0.5 emit 0. Resets the model's dynamic state first.
BinarySequence generate_rollout(DybmModel& model, const BinarySequence& seed_frames,
                                int n_future, RolloutMode mode, double history_scale = 1.0,
                                Rng* rng = nullptr);

struct SweepRow {
  std::string method;
  double p = 0.0;
  double median = 0.0;
  double iqr = 0.0;
  int count = 0;
};

// Aggregate per-(method, p) accuracies over seeds into median and IQR rows,
// ordered by method name then p.
std::vector<SweepRow> sweep_report(
    const std::vector<std::tuple<std::string, double, double>>& results);

double median_of(std::vector<double> values);

void write_correlation_csv(const std::filesystem::path& path, const CorrelationReport& r);

struct AccuracyCsvRow {
  int video = 0;
  int frame = 0;
  double accuracy = 0.0;
  std::string phase;  // "reconstruction" or "prediction"
};
void write_accuracy_csv(const std::filesystem::path& path,
                        const std::vector<AccuracyCsvRow>& rows);

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

}  // namespace dybm
