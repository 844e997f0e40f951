#include "mdm/model_selection.hpp"

#include <algorithm>
#include <random>

#include "mdm/error.hpp"
#include "mdm/parallel.hpp"
#include "mdm/stats.hpp"

namespace mdm {

namespace {

std::vector<double> sorted_unique(std::vector<double> v, const char* name) {
  if (v.empty()) throw Error(Errc::InvalidArgument, std::string("empty grid for ") + name);
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw Error(Errc::InvalidArgument, std::string("bad grid value for ") + name);
  }
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::size_t fold_count(std::span<const std::size_t> folds) {
  return folds.empty() ? 0 : *std::max_element(folds.begin(), folds.end()) + 1;
}

template <class T>
std::vector<T> pick(std::span<const T> v, std::span<const std::size_t> folds, std::size_t f, bool in_fold) {
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if ((folds[i] == f) == in_fold) out.push_back(v[i]);
  }
  return out;
}

void check_lengths(std::size_t a, std::size_t b, std::size_t c) {
  if (a != b || a != c) throw Error(Errc::InvalidArgument, "inputs differ in length");
}

// Strictly better score wins; equal scores keep the earlier (smaller) grid point.
template <class Hyper>
SearchResult<Hyper> pick_best(std::vector<ScoredHyper<Hyper>> table) {
  SearchResult<Hyper> r;
  std::size_t best = 0;
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (table[i].score > table[best].score) best = i;
  }
  r.best = table[best].hyper;
  r.best_score = table[best].score;
  r.table = std::move(table);
  return r;
}

}  // namespace

std::vector<std::size_t> content_folds(std::span<const std::string> content_ids, int k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::InvalidArgument, "need at least 2 folds");
  std::vector<std::string> ids(content_ids.begin(), content_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.size() < 2) throw Error(Errc::TooFewContents, "cross-validation needs at least 2 distinct contents");
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), ids.size());
  std::vector<std::size_t> folds(content_ids.size());
  for (std::size_t i = 0; i < content_ids.size(); ++i) {
    const auto pos = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), content_ids[i]) - ids.begin());
    folds[i] = pos % kk;
  }
  return folds;
}

double cv_score_svr(std::span<const FeatureVector> features, std::span<const double> targets,
                    std::span<const std::size_t> folds, const SvrHyper& hyper, const SolverOptions& solver) {
  check_lengths(features.size(), targets.size(), folds.size());
  const std::size_t k = fold_count(folds);
  double total = 0.0;
  for (std::size_t f = 0; f < k; ++f) {
    const auto train_x = pick(features, folds, f, false);
    const auto train_y = pick(targets, folds, f, false);
    const auto test_x = pick(features, folds, f, true);
    const auto test_y = pick(targets, folds, f, true);
    if (test_x.size() < 3) continue;
    const SvModel m = train_svr(train_x, train_y, hyper, solver);
    std::vector<double> pred;
    for (const auto& x : test_x) pred.push_back(predict(m, x));
    try {
      total += spearman(pred, test_y);
    } catch (const Error& e) {
      if (e.code() != Errc::ZeroVariance) throw;
    }
  }
  return k == 0 ? 0.0 : total / static_cast<double>(k);
}

double cv_score_svc(std::span<const FeatureVector> features, std::span<const std::string> labels,
                    std::span<const std::size_t> folds, const SvcHyper& hyper, const SolverOptions& solver) {
  check_lengths(features.size(), labels.size(), folds.size());
  const std::size_t k = fold_count(folds);
  double total = 0.0;
  for (std::size_t f = 0; f < k; ++f) {
    const auto train_x = pick(features, folds, f, false);
    const auto train_y = pick(labels, folds, f, false);
    const auto test_x = pick(features, folds, f, true);
    const auto test_y = pick(labels, folds, f, true);
    if (test_x.empty()) continue;
    std::size_t hits = 0;
    const auto distinct = std::any_of(train_y.begin(), train_y.end(), [&](const auto& l) { return l != train_y[0]; });
    if (distinct) {
      const SvModel m = train_svc(train_x, train_y, hyper, solver);
      for (std::size_t i = 0; i < test_x.size(); ++i) hits += classify(m, test_x[i]) == test_y[i];
    } else {
      // A single-class training fold predicts its only label.
      for (const auto& l : test_y) hits += l == train_y[0];
    }
    total += static_cast<double>(hits) / static_cast<double>(test_x.size());
  }
  return k == 0 ? 0.0 : total / static_cast<double>(k);
}

SearchResult<SvrHyper> grid_search_svr(std::span<const FeatureVector> features, std::span<const double> targets,
                                       std::span<const std::string> content_ids, const SvrGrid& grid,
                                       const SearchOptions& options) {
  check_lengths(features.size(), targets.size(), content_ids.size());
  const auto cs = sorted_unique(grid.c, "c");
  const auto gs = sorted_unique(grid.gamma, "gamma");
  const auto es = sorted_unique(grid.epsilon, "epsilon");
  const auto folds = content_folds(content_ids, options.folds, options.seed);

  std::vector<ScoredHyper<SvrHyper>> table;
  for (double c : cs)
    for (double g : gs)
      for (double e : es) table.push_back({SvrHyper{c, g, e}, 0.0});
  parallel_for(table.size(), options.jobs, [&](std::size_t i) {
    table[i].score = cv_score_svr(features, targets, folds, table[i].hyper, options.solver);
  });
  return pick_best(std::move(table));
}

SearchResult<SvcHyper> grid_search_svc(std::span<const FeatureVector> features, std::span<const std::string> labels,
                                       std::span<const std::string> content_ids, const SvcGrid& grid,
                                       const SearchOptions& options) {
  check_lengths(features.size(), labels.size(), content_ids.size());
  const auto cs = sorted_unique(grid.c, "c");
  const auto gs = sorted_unique(grid.gamma, "gamma");
  const auto folds = content_folds(content_ids, options.folds, options.seed);

  std::vector<ScoredHyper<SvcHyper>> table;
  for (double c : cs)
    for (double g : gs) table.push_back({SvcHyper{c, g}, 0.0});
  parallel_for(table.size(), options.jobs, [&](std::size_t i) {
    table[i].score = cv_score_svc(features, labels, folds, table[i].hyper, options.solver);
  });
  return pick_best(std::move(table));
}

}  // namespace mdm
