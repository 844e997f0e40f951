#include "mdm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "mdm/error.hpp"
#include "mdm/parallel.hpp"
#include "mdm/stats.hpp"
#include "mdm/text.hpp"

namespace mdm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mse(const std::array<double, 5>& b, std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - logistic5(b, x[i]);
    s += r * r;
  }
  return s / static_cast<double>(x.size());
}

std::mt19937_64 rep_rng(std::uint64_t seed, std::size_t rep) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(rep), static_cast<std::uint32_t>(static_cast<std::uint64_t>(rep) >> 32)};
  return std::mt19937_64(seq);
}

std::vector<std::string> distinct_ids(const DatasetManifest& m) {
  std::vector<std::string> ids;
  for (const auto& r : m.records) ids.push_back(r.content_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

// Record order that does not depend on manifest row order.
std::vector<std::size_t> canonical_records(const DatasetManifest& m) {
  std::vector<std::size_t> order(m.records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = m.records[a];
    const auto& rb = m.records[b];
    const auto la = ra.distortion.label(), lb = rb.distortion.label();
    return std::tie(ra.content_id, ra.image_path, ra.mos, la) < std::tie(rb.content_id, rb.image_path, rb.mos, lb);
  });
  return order;
}

bool all_equal(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

struct Side {
  std::vector<FeatureVector> x;
  std::vector<double> mos;
  std::vector<std::string> labels;
  std::vector<std::string> ids;
};

struct Sides {
  Side train;
  Side test;
};

Sides gather(const DatasetManifest& m, std::span<const FeatureVector> features, std::span<const std::size_t> order,
             const ContentSplit& split) {
  const std::set<std::string> train(split.train.begin(), split.train.end());
  Sides s;
  for (std::size_t i : order) {
    const auto& r = m.records[i];
    Side& side = train.count(r.content_id) ? s.train : s.test;
    side.x.push_back(features[i]);
    side.mos.push_back(r.mos);
    side.labels.push_back(r.distortion.label());
    side.ids.push_back(r.content_id);
  }
  return s;
}

void check_inputs(const DatasetManifest& m, std::span<const FeatureVector> features, const SplitSpec& split) {
  split.validate();
  if (features.size() != m.records.size()) throw Error(Errc::InvalidArgument, "one feature vector per record needed");
  if (m.distinct_contents() < 2) throw Error(Errc::TooFewContents, "the protocol needs at least 2 contents");
}

ProtocolReport summarize(std::vector<Repetition> reps, std::size_t n_contents, const SplitSpec& split,
                         bool classification) {
  ProtocolReport r;
  r.repetitions = reps.size();
  r.train_contents = train_content_count(split, n_contents);
  r.test_contents = n_contents - r.train_contents;
  std::vector<double> src, pcc, acc;
  for (const auto& rep : reps) {
    if (rep.dropped) {
      ++r.dropped;
      continue;
    }
    src.push_back(rep.src);
    pcc.push_back(rep.pcc);
    acc.push_back(rep.accuracy);
  }
  if (src.empty()) throw Error(Errc::DegenerateInput, "every repetition had a degenerate test split");
  if (classification) {
    r.accuracy = median(acc);
    r.src = r.pcc = kNaN;
  } else {
    r.src = median(src);
    r.pcc = median(pcc);
    r.accuracy = kNaN;
  }
  r.reps = std::move(reps);
  return r;
}

template <class Grid>
bool single_point(const Grid& g) {
  auto one = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return std::unique(v.begin(), v.end()) - v.begin() == 1;
  };
  if constexpr (requires { g.epsilon; }) {
    return one(g.c) && one(g.gamma) && one(g.epsilon);
  } else {
    return one(g.c) && one(g.gamma);
  }
}

double smallest(const std::vector<double>& v) {
  if (v.empty()) throw Error(Errc::InvalidArgument, "empty hyperparameter grid");
  return *std::min_element(v.begin(), v.end());
}

}  // namespace

double logistic5(const std::array<double, 5>& b, double x) {
  return b[0] * (0.5 - 1.0 / (1.0 + std::exp(b[1] * (x - b[2])))) + b[3] * x + b[4];
}

LogisticFit fit_logistic(std::span<const double> x, std::span<const double> y, const NelderMeadOptions& options) {
  if (x.size() != y.size()) throw Error(Errc::InvalidArgument, "scores and mos differ in length");
  if (x.size() < 5) throw Error(Errc::TooFewSamples, "logistic fit needs at least 5 samples");
  const auto [xlo, xhi] = std::minmax_element(x.begin(), x.end());
  if (*xlo == *xhi) throw Error(Errc::DegenerateInput, "logistic fit on constant scores");
  const auto [ylo, yhi] = std::minmax_element(y.begin(), y.end());

  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxy / sxx;
  const double steep = (slope < 0.0 ? -10.0 : 10.0) / (*xhi - *xlo);

  const std::array<std::array<double, 5>, 2> starts{{
      {*yhi - *ylo, steep, mx, 0.0, my},
      {0.0, steep, mx, slope, my - slope * mx},
  }};

  LogisticFit best;
  double best_mse = std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    const auto res = nelder_mead(
        [&](const std::vector<double>& b) { return mse({b[0], b[1], b[2], b[3], b[4]}, x, y); },
        std::vector<double>(s.begin(), s.end()), options);
    if (res.value < best_mse) {
      best_mse = res.value;
      std::copy(res.x.begin(), res.x.end(), best.beta.begin());
      best.converged = res.converged;
    }
  }
  best.rmse = std::sqrt(best_mse);
  return best;
}

EvalReport evaluate(std::span<const double> scores, std::span<const double> mos) {
  EvalReport r;
  r.n = scores.size();
  r.src = spearman(scores, mos);
  r.fit = fit_logistic(scores, mos);
  std::vector<double> mapped(scores.size());
  r.residuals.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    mapped[i] = r.fit(scores[i]);
    r.residuals[i] = mos[i] - mapped[i];
  }
  r.pcc = pearson(mapped, mos);
  return r;
}

void SplitSpec::validate() const {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw Error(Errc::InvalidArgument, "train fraction must be in (0,1)");
  if (repetitions < 1) throw Error(Errc::InvalidArgument, "need at least one repetition");
}

std::size_t train_content_count(const SplitSpec& split, std::size_t n) {
  if (n < 2) throw Error(Errc::TooFewContents, "a split needs at least 2 contents");
  const auto k = static_cast<std::size_t>(std::llround(split.train_frac * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

ContentSplit split_contents(std::span<const std::string> content_ids, const SplitSpec& split, std::size_t rep) {
  split.validate();
  std::vector<std::string> ids(content_ids.begin(), content_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const std::size_t k = train_content_count(split, ids.size());
  auto rng = rep_rng(split.seed, rep);
  std::shuffle(ids.begin(), ids.end(), rng);
  ContentSplit s;
  s.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k));
  s.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

std::vector<FeatureVector> extract_features(const DatasetManifest& manifest, const MdmParams& params,
                                            bool use_downsample, int jobs) {
  params.validate();
  std::vector<FeatureVector> out(manifest.records.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    out[i] = extract(load_gray(manifest.resolve(manifest.records[i])), params, use_downsample);
  });
  return out;
}

ProtocolReport run_protocol(const DatasetManifest& manifest, const MdmParams& params, const SplitSpec& split,
                            const ProtocolOptions& options) {
  const auto features = extract_features(manifest, params, options.use_downsample, options.jobs);
  return run_protocol(manifest, features, split, options);
}

ProtocolReport run_protocol(const DatasetManifest& manifest, std::span<const FeatureVector> features,
                            const SplitSpec& split, const ProtocolOptions& options) {
  check_inputs(manifest, features, split);
  const auto ids = distinct_ids(manifest);
  const auto order = canonical_records(manifest);
  const bool fixed = single_point(options.svr_grid);

  std::vector<Repetition> reps(split.repetitions);
  parallel_for(reps.size(), options.jobs, [&](std::size_t k) {
    Repetition& rep = reps[k];
    rep.index = k;
    const auto cs = split_contents(ids, split, k);
    const Sides s = gather(manifest, features, order, cs);
    rep.n_train = s.train.x.size();
    rep.n_test = s.test.x.size();

    SvrHyper hyper{smallest(options.svr_grid.c), smallest(options.svr_grid.gamma), smallest(options.svr_grid.epsilon)};
    if (!fixed && cs.train.size() >= 2) {
      SearchOptions so;
      so.folds = options.folds;
      so.seed = rep_rng(split.seed, k)();
      so.solver = options.solver;
      hyper = grid_search_svr(s.train.x, s.train.mos, s.train.ids, options.svr_grid, so).best;
    }
    rep.c = hyper.c;
    rep.gamma = hyper.gamma;
    rep.epsilon = hyper.epsilon;

    auto drop = [&] {
      rep.dropped = true;
      rep.src = rep.pcc = kNaN;
    };
    if (s.train.x.size() < 2 || s.test.x.size() < 5 || all_equal(s.test.mos)) return drop();
    const SvModel model = train_svr(s.train.x, s.train.mos, hyper, options.solver);
    std::vector<double> pred;
    for (const auto& f : s.test.x) pred.push_back(predict(model, f));
    if (all_equal(pred)) return drop();
    try {
      const auto er = evaluate(pred, s.test.mos);
      rep.src = er.src;
      rep.pcc = er.pcc;
    } catch (const Error& e) {
      if (e.code() != Errc::ZeroVariance) throw;
      drop();
    }
  });
  return summarize(std::move(reps), ids.size(), split, false);
}

ProtocolReport run_classification_protocol(const DatasetManifest& manifest, std::span<const FeatureVector> features,
                                           const SplitSpec& split, const ProtocolOptions& options) {
  check_inputs(manifest, features, split);
  const auto ids = distinct_ids(manifest);
  const auto order = canonical_records(manifest);
  const bool fixed = single_point(options.svc_grid);

  std::vector<Repetition> reps(split.repetitions);
  parallel_for(reps.size(), options.jobs, [&](std::size_t k) {
    Repetition& rep = reps[k];
    rep.index = k;
    rep.src = rep.pcc = kNaN;
    const auto cs = split_contents(ids, split, k);
    const Sides s = gather(manifest, features, order, cs);
    rep.n_train = s.train.x.size();
    rep.n_test = s.test.x.size();

    const bool two_classes = std::any_of(s.train.labels.begin(), s.train.labels.end(),
                                         [&](const std::string& l) { return l != s.train.labels.front(); });
    if (!two_classes || s.test.x.empty()) {
      rep.dropped = true;
      rep.accuracy = kNaN;
      return;
    }
    SvcHyper hyper{smallest(options.svc_grid.c), smallest(options.svc_grid.gamma)};
    if (!fixed && cs.train.size() >= 2) {
      SearchOptions so;
      so.folds = options.folds;
      so.seed = rep_rng(split.seed, k)();
      so.solver = options.solver;
      hyper = grid_search_svc(s.train.x, s.train.labels, s.train.ids, options.svc_grid, so).best;
    }
    rep.c = hyper.c;
    rep.gamma = hyper.gamma;
    const SvModel model = train_svc(s.train.x, s.train.labels, hyper, options.solver);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < s.test.x.size(); ++i) hits += classify(model, s.test.x[i]) == s.test.labels[i];
    rep.accuracy = static_cast<double>(hits) / static_cast<double>(s.test.x.size());
  });
  return summarize(std::move(reps), ids.size(), split, true);
}

std::vector<SweepRow> sweep(const DatasetManifest& manifest, std::span<const int> rho_grid, std::span<const int> q_grid,
                            const SplitSpec& split, const ProtocolOptions& options) {
  if (rho_grid.empty() || q_grid.empty()) throw Error(Errc::InvalidArgument, "sweep grids must be nonempty");
  std::vector<SweepRow> rows;
  for (int rho : rho_grid) {
    for (int q : q_grid) {
      const auto r = run_protocol(manifest, MdmParams{rho, q}, split, options);
      rows.push_back({rho, q, r.src, r.pcc});
    }
  }
  return rows;
}

void write_report_csv(std::ostream& out, const ProtocolReport& r, bool classification) {
  out << "metric,value\n";
  if (classification) {
    out << "accuracy," << format_real(r.accuracy) << "\n";
  } else {
    out << "src," << format_real(r.src) << "\n";
    out << "pcc," << format_real(r.pcc) << "\n";
  }
  out << "repetitions," << r.repetitions << "\n";
  out << "dropped," << r.dropped << "\n";
  out << "train_contents," << r.train_contents << "\n";
  out << "test_contents," << r.test_contents << "\n";
}

void write_reps_csv(std::ostream& out, const ProtocolReport& r, bool classification) {
  out << (classification ? "rep,dropped,accuracy,n_train,n_test,c,gamma\n"
                         : "rep,dropped,src,pcc,n_train,n_test,c,gamma,epsilon\n");
  for (const auto& rep : r.reps) {
    out << rep.index << ',' << (rep.dropped ? 1 : 0) << ',';
    if (classification) {
      out << format_real(rep.accuracy) << ',';
    } else {
      out << format_real(rep.src) << ',' << format_real(rep.pcc) << ',';
    }
    out << rep.n_train << ',' << rep.n_test << ',' << format_real(rep.c) << ',' << format_real(rep.gamma);
    if (!classification) out << ',' << format_real(rep.epsilon);
    out << '\n';
  }
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "rho,q,src,pcc\n";
  for (const auto& r : rows) out << r.rho << ',' << r.q << ',' << format_real(r.src) << ',' << format_real(r.pcc) << '\n';
}

}  // namespace mdm
