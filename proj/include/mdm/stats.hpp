#pragma once

#include <span>
#include <vector>

namespace mdm {

double mean(std::span<const double> x);
/// Unbiased (n - 1) variance.
double sample_variance(std::span<const double> x);
/// Median; even counts average the two middle values. Throws on empty input.
double median(std::vector<double> x);

/// 1-based ranks; ties receive the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> x);

/// Product-moment correlation. Requires equal lengths >= 3 and nonconstant
/// inputs (Errc::ZeroVariance otherwise).
double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

/// I_x(a, b) by continued fraction, |error| ~ 1e-14.
double regularized_incomplete_beta(double a, double b, double x);

/// P(F <= f) for an F(d1, d2) variate.
double f_cdf(double f, double d1, double d2);

/// f such that P(F > f) = upper_tail.
double f_critical(double upper_tail, double d1, double d2);

enum class FTestOutcome { SuperiorA, SuperiorB, Indistinguishable };

struct FTestResult {
  FTestOutcome outcome = FTestOutcome::Indistinguishable;
  double f_ratio = 1.0;   // larger variance over smaller
  double critical = 0.0;  // two-sided critical value at alpha
};

/// Variance-ratio test on two residual vectors (each length >= 3). The model
/// with the significantly smaller residual variance is superior.
FTestResult f_test(std::span<const double> resid_a, std::span<const double> resid_b,
                   double alpha = 0.05);

}  // namespace mdm
