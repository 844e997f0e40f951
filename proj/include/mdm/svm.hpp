#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdm/features.hpp"
#include "mdm/smo.hpp"

namespace mdm {

using FeaturePoint = std::array<double, 3>;

/// Per-feature min-max scaling fit on training data. Constant features map to 0.
struct Scaler {
  FeaturePoint min{};
  FeaturePoint max{};

  static Scaler fit(std::span<const FeatureVector> features);
  FeaturePoint transform(const FeatureVector& f) const;
  bool operator==(const Scaler&) const = default;
};

enum class Task { Regression, Classification };

struct SvrHyper {
  double c = 1.0;
  double gamma = 1.0;
  double epsilon = 0.1;  // tube width on targets scaled to [0,1]
  bool operator==(const SvrHyper&) const = default;
};

struct SvcHyper {
  double c = 1.0;
  double gamma = 1.0;
  bool operator==(const SvcHyper&) const = default;
};

/// One kernel expansion: sum_i coef_i K(sv_i, x) + bias.
struct KernelMachine {
  std::vector<FeaturePoint> support_vectors;
  std::vector<double> coefs;
  double bias = 0.0;
  // Classification only: label indices voted for by positive / negative decisions.
  std::size_t positive = 0;
  std::size_t negative = 1;

  double decision(const FeaturePoint& scaled, double gamma) const;
  bool operator==(const KernelMachine&) const = default;
};

struct SvModel {
  Task task = Task::Regression;
  double gamma = 1.0;
  double c = 1.0;
  double epsilon = 0.0;
  Scaler scaler;
  // Regression targets are trained on [0,1]; predictions map back through these.
  double target_min = 0.0;
  double target_max = 1.0;
  // Set when all training targets were equal and the model is a constant.
  bool degenerate = false;
  std::vector<std::string> labels;       // sorted; classification only
  std::vector<KernelMachine> machines;   // one for regression / binary, one per pair otherwise

  bool operator==(const SvModel&) const = default;
};

double rbf_kernel(const FeaturePoint& a, const FeaturePoint& b, double gamma);

/// Epsilon-SVR on min-max scaled features and [0,1]-scaled targets.
/// Training order does not matter: samples are put in a canonical order first.
SvModel train_svr(std::span<const FeatureVector> features, std::span<const double> targets,
                  const SvrHyper& hyper, const SolverOptions& options = {});

/// C-SVC; more than two labels are handled one-vs-one with majority vote.
SvModel train_svc(std::span<const FeatureVector> features, std::span<const std::string> labels,
                  const SvcHyper& hyper, const SolverOptions& options = {});

/// Regression output in target units. Errc::TaskMismatch for classifiers.
double predict(const SvModel& model, const FeatureVector& f);

/// Predicted label. Errc::TaskMismatch for regressors.
std::string classify(const SvModel& model, const FeatureVector& f);

constexpr int kModelSchemaVersion = 1;

std::string model_to_json(const SvModel& model);
/// Errc::SchemaVersionMismatch for a foreign version, Errc::CorruptModel otherwise.
SvModel model_from_json(std::string_view text);
void save_model(const SvModel& model, const std::filesystem::path& path);
SvModel load_model(const std::filesystem::path& path);

}  // namespace mdm
