#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mdm/features.hpp"
#include "mdm/imgio.hpp"
#include "mdm/model_selection.hpp"
#include "mdm/optim.hpp"

namespace mdm {

/// f(x) = b1 (1/2 - 1/(1 + exp(b2 (x - b3)))) + b4 x + b5
double logistic5(const std::array<double, 5>& beta, double x);

struct LogisticFit {
  std::array<double, 5> beta{};
  double rmse = 0.0;
  bool converged = false;

  double operator()(double x) const { return logistic5(beta, x); }
};

/// Least-squares fit of the five-parameter logistic by Nelder-Mead from two
/// starts (a sigmoid-dominant one and a linear one); the lower-MSE fit wins.
/// Needs >= 5 samples; constant scores are Errc::DegenerateInput.
LogisticFit fit_logistic(std::span<const double> scores, std::span<const double> mos,
                         const NelderMeadOptions& options = {});

struct EvalReport {
  double src = 0.0;
  double pcc = 0.0;  // after logistic mapping
  LogisticFit fit;
  std::vector<double> residuals;  // mos - f(score)
  std::size_t n = 0;
};

EvalReport evaluate(std::span<const double> scores, std::span<const double> mos);

struct SplitSpec {
  double train_frac = 0.8;
  std::size_t repetitions = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Number of training contents: round(train_frac * n) clamped to [1, n - 1].
std::size_t train_content_count(const SplitSpec& split, std::size_t n_contents);

struct ContentSplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

/// Repetition `rep` shuffles the sorted distinct ids with an RNG seeded from
/// (seed, rep), so any repetition can be reproduced on its own.
ContentSplit split_contents(std::span<const std::string> content_ids, const SplitSpec& split, std::size_t rep);

struct ProtocolOptions {
  SvrGrid svr_grid;
  SvcGrid svc_grid;
  int folds = 5;
  int jobs = 1;
  bool use_downsample = true;
  SolverOptions solver;
};

/// Features for every record, read in parallel; order follows the manifest.
std::vector<FeatureVector> extract_features(const DatasetManifest& manifest, const MdmParams& params,
                                            bool use_downsample, int jobs);

struct Repetition {
  std::size_t index = 0;
  bool dropped = false;  // degenerate test split; src/pcc are NaN
  double src = 0.0;
  double pcc = 0.0;
  double accuracy = 0.0;  // classification protocol only
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double c = 0.0;
  double gamma = 0.0;
  double epsilon = 0.0;
};

struct ProtocolReport {
  double src = 0.0;       // medians over kept repetitions
  double pcc = 0.0;
  double accuracy = 0.0;  // classification protocol only
  std::size_t repetitions = 0;
  std::size_t dropped = 0;
  std::size_t train_contents = 0;
  std::size_t test_contents = 0;
  std::vector<Repetition> reps;
};

/// Repeated content-disjoint SVR evaluation. Each repetition selects
/// hyperparameters by content-disjoint CV on its training side only.
ProtocolReport run_protocol(const DatasetManifest& manifest, const MdmParams& params, const SplitSpec& split,
                            const ProtocolOptions& options = {});
ProtocolReport run_protocol(const DatasetManifest& manifest, std::span<const FeatureVector> features,
                            const SplitSpec& split, const ProtocolOptions& options = {});

/// Same splits, SVC on distortion labels; reports median test accuracy.
ProtocolReport run_classification_protocol(const DatasetManifest& manifest, std::span<const FeatureVector> features,
                                           const SplitSpec& split, const ProtocolOptions& options = {});

struct SweepRow {
  int rho = 0;
  int q = 0;
  double src = 0.0;
  double pcc = 0.0;
};

std::vector<SweepRow> sweep(const DatasetManifest& manifest, std::span<const int> rho_grid, std::span<const int> q_grid,
                            const SplitSpec& split, const ProtocolOptions& options = {});

/// `metric,value` rows.
void write_report_csv(std::ostream& out, const ProtocolReport& report, bool classification = false);
/// One row per repetition.
void write_reps_csv(std::ostream& out, const ProtocolReport& report, bool classification = false);
/// `rho,q,src,pcc`
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace mdm
