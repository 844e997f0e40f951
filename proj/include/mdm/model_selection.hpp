#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mdm/svm.hpp"

namespace mdm {

struct SvrGrid {
  std::vector<double> c{1, 10, 100, 1000};
  std::vector<double> gamma{0.125, 0.25, 0.5, 1, 2, 4};
  std::vector<double> epsilon{0.01, 0.1};
};

struct SvcGrid {
  std::vector<double> c{1, 10, 100, 1000};
  std::vector<double> gamma{0.125, 0.25, 0.5, 1, 2, 4};
};

struct SearchOptions {
  int folds = 5;
  std::uint64_t seed = 0;
  int jobs = 1;
  SolverOptions solver;
};

/// Fold index per sample. Distinct content ids are sorted, shuffled with the
/// seed and dealt round-robin, so no content spans two folds. k is capped at
/// the number of distinct contents; fewer than 2 contents is Errc::TooFewContents.
std::vector<std::size_t> content_folds(std::span<const std::string> content_ids, int k, std::uint64_t seed);

template <class Hyper>
struct ScoredHyper {
  Hyper hyper;
  double score = 0.0;
};

template <class Hyper>
struct SearchResult {
  Hyper best;
  double best_score = 0.0;
  std::vector<ScoredHyper<Hyper>> table;  // every distinct grid point, sorted by (c, gamma, epsilon)
};

/// Mean validation SRC over folds. A fold with fewer than 3 samples or constant
/// predictions scores 0.
double cv_score_svr(std::span<const FeatureVector> features, std::span<const double> targets,
                    std::span<const std::size_t> folds, const SvrHyper& hyper, const SolverOptions& solver = {});

/// Mean validation accuracy over folds.
double cv_score_svc(std::span<const FeatureVector> features, std::span<const std::string> labels,
                    std::span<const std::size_t> folds, const SvcHyper& hyper, const SolverOptions& solver = {});

/// Exhaustive search; ties go to the smaller c, then gamma, then epsilon.
SearchResult<SvrHyper> grid_search_svr(std::span<const FeatureVector> features, std::span<const double> targets,
                                       std::span<const std::string> content_ids, const SvrGrid& grid,
                                       const SearchOptions& options = {});

SearchResult<SvcHyper> grid_search_svc(std::span<const FeatureVector> features, std::span<const std::string> labels,
                                       std::span<const std::string> content_ids, const SvcGrid& grid,
                                       const SearchOptions& options = {});

}  // namespace mdm
