#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace mdm {

struct NelderMeadOptions {
  double diameter_tolerance = 1e-8;
  std::size_t max_iterations = 5000;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;  // simplex diameter fell below tolerance
};

/// Derivative-free minimization. The start simplex perturbs each coordinate by
/// 5% (or 0.00025 for zero coordinates). Diameter is the largest distance from
/// the best vertex to any other.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                             const NelderMeadOptions& options = {});

}  // namespace mdm
