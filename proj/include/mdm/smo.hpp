#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace mdm {

/// Dual problem shared by C-SVC and epsilon-SVR:
///
///   min 0.5 a'Qa + p'a   s.t.  y'a = 0,  0 <= a_i <= c
///
/// with Q_ij = y_i y_j K(row_i, row_j). Several variables may share a kernel
/// row (epsilon-SVR has two variables per sample).
struct DualProblem {
  std::vector<double> kernel;       // dense n_rows x n_rows, row-major
  std::size_t n_rows = 0;
  std::vector<std::size_t> row;     // variable -> kernel row
  std::vector<std::int8_t> y;       // +1 / -1 per variable
  std::vector<double> p;            // linear term per variable
  double c = 1.0;

  std::size_t size() const noexcept { return y.size(); }
  double q(std::size_t i, std::size_t j) const noexcept {
    return y[i] * y[j] * kernel[row[i] * n_rows + row[j]];
  }
};

struct SolverOptions {
  double tolerance = 1e-3;
  std::size_t max_iterations = 10'000'000;
};

struct DualSolution {
  std::vector<double> alpha;
  std::vector<double> gradient;  // Qa + p at the returned alpha
  double rho = 0.0;              // decision function is sum(...) - rho
  double max_violation = 0.0;    // m(a) - M(a) at exit
  std::size_t iterations = 0;
  bool converged = false;
};

/// Sequential minimal optimization with the maximal-violating-pair working
/// set; ties go to the lowest index so runs are reproducible.
DualSolution solve_dual(const DualProblem& problem, const SolverOptions& options = {});

/// m(a) - M(a) for a given alpha/gradient; <= tolerance means KKT holds.
double kkt_violation(const DualProblem& problem, const std::vector<double>& alpha,
                     const std::vector<double>& gradient);

}  // namespace mdm
