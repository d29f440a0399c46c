#include "dybm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "dybm/errors.hpp"
#include "dybm/trainer.hpp"

namespace dybm {

double pearson_correlation(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 2) {
    throw UndefinedCorrelationError("pearson: need at least two pairs");
  }
  const double n = double(pairs.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pairs) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pairs) {
    sxx += (x - mx) * (x - mx);
    syy += (y - my) * (y - my);
    sxy += (x - mx) * (y - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedCorrelationError("pearson: zero variance in a coordinate");
  }
  return sxy / std::sqrt(sxx * syy);
}

AccuracyReport bit_accuracy(const BinarySequence& predicted, const BinarySequence& truth,
                            int n_recon_frames) {
  if (predicted.n_dims != truth.n_dims || predicted.length != truth.length) {
    throw ShapeError("bit_accuracy: shape mismatch");
  }
  AccuracyReport report;
  report.n_recon_frames = n_recon_frames;
  long total_match = 0, recon_match = 0, pred_match = 0;
  long recon_bits = 0, pred_bits = 0;
  for (int t = 0; t < predicted.length; ++t) {
    long match = 0;
    for (int i = 0; i < predicted.n_dims; ++i) {
      match += predicted.at(i, t) == truth.at(i, t) ? 1 : 0;
    }
    report.per_frame_accuracy.push_back(100.0 * double(match) / predicted.n_dims);
    total_match += match;
    if (t < n_recon_frames) {
      recon_match += match;
      recon_bits += predicted.n_dims;
    } else {
      pred_match += match;
      pred_bits += predicted.n_dims;
    }
  }
  const long total_bits = long(predicted.length) * predicted.n_dims;
  report.overall_accuracy = total_bits ? 100.0 * double(total_match) / total_bits : 0.0;
  report.reconstruction_accuracy =
      recon_bits ? 100.0 * double(recon_match) / recon_bits : 0.0;
  report.prediction_accuracy = pred_bits ? 100.0 * double(pred_match) / pred_bits : 0.0;
  return report;
}

BinarySequence generate_rollout(DybmModel& model, const BinarySequence& seed_frames,
                                int n_future, RolloutMode mode, double history_scale,
                                Rng* rng) {
  if (seed_frames.n_dims != model.config.n_units) {
    throw ShapeError("generate_rollout: dimension mismatch");
  }
  if (mode == RolloutMode::sampled && !rng) {
    throw ConfigError("generate_rollout: sampled mode needs an rng");
  }
  reset_dynamic_state(model);
  const int n = model.config.n_units;
  BinarySequence out(n, seed_frames.length + n_future);
  std::vector<std::uint8_t> emitted(n);
  for (int t = 0; t < seed_frames.length + n_future; ++t) {
    const std::vector<double> p = conditional_probs_scaled(model, history_scale);
    for (int j = 0; j < n; ++j) {
      emitted[j] = (mode == RolloutMode::thresholded) ? (p[j] > 0.5 ? 1 : 0)
                                                      : (rng->bernoulli(p[j]) ? 1 : 0);
      out.set(j, t, emitted[j]);
    }
    if (t < seed_frames.length) {
      step_advance(model, seed_frames, t);  // teacher forcing
    } else {
      step_advance(model, emitted.data(), n);
    }
  }
  return out;
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw Error("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

namespace {

// Quartile by linear interpolation over sorted values.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted[0];
  const double pos = q * double(sorted.size() - 1);
  const std::size_t lo = std::size_t(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - double(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

std::vector<SweepRow> sweep_report(
    const std::vector<std::tuple<std::string, double, double>>& results) {
  std::map<std::pair<std::string, double>, std::vector<double>> cells;
  for (const auto& [method, p, accuracy] : results) {
    cells[{method, p}].push_back(accuracy);
  }
  std::vector<SweepRow> rows;
  for (auto& [key, values] : cells) {
    std::sort(values.begin(), values.end());
    SweepRow row;
    row.method = key.first;
    row.p = key.second;
    row.median = quantile_sorted(values, 0.5);
    row.iqr = quantile_sorted(values, 0.75) - quantile_sorted(values, 0.25);
    row.count = int(values.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_correlation_csv(const std::filesystem::path& path, const CorrelationReport& r) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write correlation csv: " + path.string());
  os << "true_nll,model_nll\n";
  for (const auto& [t, m] : r.pairs) {
    os << format_double(t) << ',' << format_double(m) << '\n';
  }
}

void write_accuracy_csv(const std::filesystem::path& path,
                        const std::vector<AccuracyCsvRow>& rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write accuracy csv: " + path.string());
  os << "video,frame,accuracy,phase\n";
  for (const auto& r : rows) {
    os << r.video << ',' << r.frame << ',' << format_double(r.accuracy) << ',' << r.phase
       << '\n';
  }
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot write sweep csv: " + path.string());
  os << "method,p,median,iqr\n";
  for (const auto& r : rows) {
    os << r.method << ',' << format_double(r.p) << ',' << format_double(r.median) << ','
       << format_double(r.iqr) << '\n';
  }
}

}  // namespace dybm
