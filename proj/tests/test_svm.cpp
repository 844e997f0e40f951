#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "mdm/error.hpp"
#include "mdm/model_selection.hpp"
#include "mdm/smo.hpp"
#include "mdm/svm.hpp"
#include "support.hpp"

using namespace mdm;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::InvalidArgument;
}

FeatureVector fv(double a, double b, double c) { return {a, b, c}; }

std::vector<FeatureVector> random_features(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0), e(4.0, 8.0);
  std::vector<FeatureVector> out(n);
  for (auto& f : out) f = fv(u(rng), u(rng), e(rng));
  return out;
}

// Independent evaluation of the kernel expansion in long double.
long double expansion(const SvModel& m, const KernelMachine& km, const FeatureVector& f) {
  const auto a = f.as_array();
  long double x[3];
  for (int k = 0; k < 3; ++k) {
    const long double range = static_cast<long double>(m.scaler.max[k]) - m.scaler.min[k];
    x[k] = range > 0 ? (a[k] - static_cast<long double>(m.scaler.min[k])) / range : 0.0L;
  }
  long double s = km.bias;
  for (std::size_t i = 0; i < km.support_vectors.size(); ++i) {
    long double d2 = 0;
    for (int k = 0; k < 3; ++k) d2 += (km.support_vectors[i][k] - x[k]) * (km.support_vectors[i][k] - x[k]);
    s += km.coefs[i] * std::exp(-static_cast<long double>(m.gamma) * d2);
  }
  return s;
}

// Brute-force KKT scan: recompute the gradient from scratch and check the
// optimality gap over the index sets.
double scan_violation(const DualProblem& pr, const std::vector<double>& alpha) {
  double up = -INFINITY, low = INFINITY;
  for (std::size_t t = 0; t < pr.size(); ++t) {
    long double g = pr.p[t];
    for (std::size_t s = 0; s < pr.size(); ++s) g += static_cast<long double>(pr.q(t, s)) * alpha[s];
    const double v = static_cast<double>(-pr.y[t] * g);
    const bool in_up = pr.y[t] > 0 ? alpha[t] < pr.c : alpha[t] > 0;
    const bool in_low = pr.y[t] > 0 ? alpha[t] > 0 : alpha[t] < pr.c;
    if (in_up) up = std::max(up, v);
    if (in_low) low = std::min(low, v);
  }
  return up - low;
}

}  // namespace

TEST_CASE("SMO reaches the KKT tolerance by direct scan") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 40;
    std::vector<std::array<double, 2>> pts(n);
    DualProblem pr;
    pr.n_rows = n;
    pr.c = trial % 2 ? 10.0 : 0.5;
    for (std::size_t i = 0; i < n; ++i) {
      pts[i] = {u(rng), u(rng)};
      pr.row.push_back(i);
      pr.y.push_back(pts[i][0] * pts[i][1] + 0.2 * u(rng) > 0 ? 1 : -1);
      pr.p.push_back(-1.0);
    }
    pr.kernel.resize(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double dx = pts[i][0] - pts[j][0], dy = pts[i][1] - pts[j][1];
        pr.kernel[i * n + j] = std::exp(-2.0 * (dx * dx + dy * dy));
      }
    const auto sol = solve_dual(pr);
    REQUIRE(sol.converged);
    CHECK(scan_violation(pr, sol.alpha) < 1e-3 + 1e-9);
    double ya = 0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(sol.alpha[i] >= 0.0);
      CHECK(sol.alpha[i] <= pr.c);
      ya += pr.y[i] * sol.alpha[i];
    }
    CHECK(std::abs(ya) < 1e-9);
  }
}

TEST_CASE("SVR on constant targets is a flagged constant") {
  std::mt19937_64 rng(1);
  const auto x = random_features(rng, 8);
  const std::vector<double> t(8, 5.0);
  const auto m = train_svr(x, t, {10, 1, 0.1});
  CHECK(m.degenerate);
  for (const auto& f : random_features(rng, 20)) CHECK(predict(m, f) == 5.0);
}

TEST_CASE("SVR fits an exact linear function") {
  std::mt19937_64 rng(2);
  const auto x = random_features(rng, 40);
  std::vector<double> t;
  for (const auto& f : x) t.push_back(2.0 * f.mdm_d + 1.0);
  const auto m = train_svr(x, t, {1000, 0.5, 0.01});
  const double range = m.target_max - m.target_min;
  double se = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = (predict(m, x[i]) - t[i]) / range;
    se += r * r;
  }
  CHECK(std::sqrt(se / x.size()) <= 0.02);
  for (const auto& km : m.machines)
    for (double c : km.coefs) CHECK(std::abs(c) <= m.c);
}

TEST_CASE("SVR on a smooth radial function stays near the tube") {
  std::mt19937_64 rng(4);
  const auto x = random_features(rng, 10);
  std::vector<double> t;
  for (const auto& f : x) {
    const double dx = f.mdm_d - 0.5, dy = f.mdm_dc - 0.5;
    t.push_back(std::exp(-4.0 * (dx * dx + dy * dy)));
  }
  const double eps = 0.05;
  const auto m = train_svr(x, t, {100, 1, eps});
  const double range = m.target_max - m.target_min;
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(std::abs(predict(m, x[i]) - t[i]) / range <= eps + 0.05);
  }
}

TEST_CASE("prediction equals an independent kernel expansion") {
  std::mt19937_64 rng(6);
  const auto x = random_features(rng, 30);
  std::vector<double> t;
  for (const auto& f : x) t.push_back(std::sin(3 * f.mdm_d) + f.entropy_bits);
  const auto m = train_svr(x, t, {10, 2, 0.01});
  for (const auto& f : random_features(rng, 50)) {
    const long double z = expansion(m, m.machines[0], f);
    const long double want = m.target_min + z * (static_cast<long double>(m.target_max) - m.target_min);
    CHECK(std::abs(predict(m, f) - static_cast<double>(want)) < 1e-10);
  }
}

TEST_CASE("training is invariant to sample order") {
  std::mt19937_64 rng(8);
  auto x = random_features(rng, 25);
  std::vector<double> t;
  for (const auto& f : x) t.push_back(f.mdm_d * f.mdm_dc + 0.1 * f.entropy_bits);
  const auto a = train_svr(x, t, {10, 1, 0.01});

  std::vector<std::size_t> perm(x.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<FeatureVector> xs;
  std::vector<double> ts;
  for (auto i : perm) {
    xs.push_back(x[i]);
    ts.push_back(t[i]);
  }
  const auto b = train_svr(xs, ts, {10, 1, 0.01});
  CHECK(a == b);
}

TEST_CASE("the scaler fit at training time is applied at prediction") {
  std::mt19937_64 rng(9);
  const auto x = random_features(rng, 20);
  std::vector<double> t;
  for (const auto& f : x) t.push_back(f.entropy_bits);
  const auto m = train_svr(x, t, {100, 1, 0.01});
  CHECK(m.scaler == Scaler::fit(x));
  for (const auto& f : x) {
    const auto s = m.scaler.transform(f);
    for (double v : s) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    const double z = m.machines[0].decision(s, m.gamma);
    CHECK(predict(m, f) == m.target_min + z * (m.target_max - m.target_min));
  }
}

TEST_CASE("SVC separates simple sets") {
  SUBCASE("linearly separable") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(0.0, 0.4);
    std::vector<FeatureVector> x;
    std::vector<std::string> y;
    for (int i = 0; i < 15; ++i) {
      x.push_back(fv(u(rng), u(rng), 5));
      y.push_back("a");
      x.push_back(fv(0.6 + u(rng), 0.6 + u(rng), 5));
      y.push_back("b");
    }
    const auto m = train_svc(x, y, {1000, 1});
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(classify(m, x[i]) == y[i]);
  }
  SUBCASE("XOR") {
    const std::vector<FeatureVector> x{fv(0, 0, 1), fv(1, 1, 1), fv(0, 1, 1), fv(1, 0, 1)};
    const std::vector<std::string> y{"even", "even", "odd", "odd"};
    const auto m = train_svc(x, y, {100, 2});
    REQUIRE(m.machines.size() == 1);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(classify(m, x[i]) == y[i]);
      const long double d = expansion(m, m.machines[0], x[i]);
      CHECK((d > 0) == (y[i] == m.labels[m.machines[0].positive]));
    }
  }
  SUBCASE("three clouds one-vs-one") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n(0.0, 0.05);
    std::vector<FeatureVector> x;
    std::vector<std::string> y;
    const double centers[3][2] = {{0.2, 0.2}, {0.8, 0.2}, {0.5, 0.8}};
    for (int i = 0; i < 10; ++i)
      for (int k = 0; k < 3; ++k) {
        x.push_back(fv(centers[k][0] + n(rng), centers[k][1] + n(rng), 6));
        y.push_back(std::string(1, static_cast<char>('p' + k)));
      }
    const auto m = train_svc(x, y, {10, 1});
    CHECK(m.machines.size() == 3);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(classify(m, x[i]) == y[i]);
  }
}

TEST_CASE("ml errors") {
  std::mt19937_64 rng(13);
  const auto x = random_features(rng, 6);
  const std::vector<double> t{1, 2, 3, 4, 5, 6};
  const std::vector<std::string> one(6, "gamma");
  CHECK(code_of([&] { train_svc(x, one, {1, 1}); }) == Errc::SingleClass);
  CHECK(code_of([&] { train_svr(std::span(x).first(1), std::span(t).first(1), {1, 1, 0.1}); }) ==
        Errc::TooFewSamples);
  const auto reg = train_svr(x, t, {1, 1, 0.1});
  CHECK(code_of([&] { classify(reg, x[0]); }) == Errc::TaskMismatch);
  const std::vector<std::string> two{"a", "b", "a", "b", "a", "b"};
  const auto cls = train_svc(x, two, {1, 1});
  CHECK(code_of([&] { predict(cls, x[0]); }) == Errc::TaskMismatch);
  CHECK(code_of([&] { train_svr(x, t, {0, 1, 0.1}); }) == Errc::InvalidArgument);
}

TEST_CASE("model files round-trip") {
  std::mt19937_64 rng(14);
  const auto dir = test::scratch_dir("svm_roundtrip");
  const auto x = random_features(rng, 30);
  std::vector<double> t;
  std::vector<std::string> y;
  for (const auto& f : x) {
    t.push_back(f.mdm_d - f.mdm_dc);
    y.push_back(f.mdm_d > 0.66 ? "hi" : (f.mdm_d > 0.33 ? "mid" : "lo"));
  }
  for (const SvModel& m : {train_svr(x, t, {10, 2, 0.01}), train_svc(x, y, {10, 2}),
                           train_svr(x, std::vector<double>(30, 2.5), {1, 1, 0.1})}) {
    const auto path = dir / "m.json";
    save_model(m, path);
    const auto back = load_model(path);
    CHECK(back == m);
    for (const auto& f : random_features(rng, 100)) {
      if (m.task == Task::Regression) {
        CHECK(predict(back, f) == predict(m, f));
      } else {
        CHECK(classify(back, f) == classify(m, f));
      }
    }
  }

  const auto text = model_to_json(train_svr(x, t, {10, 2, 0.01}));
  CHECK(text.find("\"svs\"") != std::string::npos);
  CHECK(text.find("\"kernel\"") != std::string::npos);

  std::string wrong = text;
  wrong.replace(wrong.find("\"version\": 1"), 12, "\"version\": 2");
  CHECK(code_of([&] { model_from_json(wrong); }) == Errc::SchemaVersionMismatch);
  CHECK(code_of([&] { model_from_json(text.substr(0, text.size() / 2)); }) == Errc::CorruptModel);
  CHECK(code_of([&] { model_from_json("{}"); }) == Errc::CorruptModel);
  CHECK(code_of([&] { load_model(dir / "missing.json"); }) == Errc::IoError);
}

TEST_CASE("content folds keep contents together") {
  std::vector<std::string> ids;
  for (int c = 0; c < 12; ++c)
    for (int k = 0; k < 4; ++k) ids.push_back("c" + std::to_string(c));
  const auto folds = content_folds(ids, 5, 7);
  std::map<std::string, std::set<std::size_t>> seen;
  for (std::size_t i = 0; i < ids.size(); ++i) seen[ids[i]].insert(folds[i]);
  std::set<std::size_t> used;
  for (const auto& [id, f] : seen) {
    CHECK(f.size() == 1);
    used.insert(*f.begin());
  }
  CHECK(used.size() == 5);
  CHECK(content_folds(ids, 5, 7) == folds);
  CHECK(code_of([&] { content_folds(std::vector<std::string>(5, "x"), 2, 0); }) == Errc::TooFewContents);
}

TEST_CASE("grid search") {
  std::mt19937_64 rng(15);
  const auto x = random_features(rng, 60);
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < x.size(); ++i) ids.push_back("c" + std::to_string(i / 4));

  // Targets planted by an RBF machine at gamma = 2.
  const std::vector<FeatureVector> centers = random_features(rng, 5);
  std::vector<double> t;
  for (const auto& f : x) {
    double s = 0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const double dx = f.mdm_d - centers[k].mdm_d, dy = f.mdm_dc - centers[k].mdm_dc;
      s += (k % 2 ? -1.0 : 1.0) * std::exp(-2.0 * (dx * dx + dy * dy));
    }
    t.push_back(s);
  }

  SUBCASE("one point") {
    const auto r = grid_search_svr(x, t, ids, SvrGrid{{10}, {0.5}, {0.1}});
    CHECK(r.best == SvrHyper{10, 0.5, 0.1});
    CHECK(r.table.size() == 1);
  }
  SUBCASE("duplicates change nothing") {
    const auto a = grid_search_svr(x, t, ids, SvrGrid{{1, 10}, {0.5, 2}, {0.01}});
    const auto b = grid_search_svr(x, t, ids, SvrGrid{{10, 1, 10}, {2, 0.5, 2, 0.5}, {0.01, 0.01}});
    CHECK(a.best == b.best);
    CHECK(a.best_score == b.best_score);
  }
  SUBCASE("planted optimum against exhaustive evaluation") {
    SearchOptions opt;
    opt.jobs = 3;
    const SvrGrid grid{{1, 10, 100}, {0.5, 2, 8}, {0.01}};
    const auto r = grid_search_svr(x, t, ids, grid, opt);
    const auto folds = content_folds(ids, opt.folds, opt.seed);
    double best = -2;
    SvrHyper arg;
    for (double c : grid.c)
      for (double g : grid.gamma) {
        const double s = cv_score_svr(x, t, folds, {c, g, 0.01});
        if (s > best) {
          best = s;
          arg = {c, g, 0.01};
        }
      }
    CHECK(r.best == arg);
    CHECK(r.best_score == best);
    CHECK(r.best_score >= cv_score_svr(x, t, folds, {10, 2, 0.01}));
  }
  SUBCASE("classification grid") {
    std::vector<std::string> y;
    for (double v : t) y.push_back(v > 0 ? "pos" : "neg");
    const auto r = grid_search_svc(x, y, ids, SvcGrid{{1, 100}, {1, 4}});
    CHECK(r.table.size() == 4);
    CHECK(r.best_score > 0.7);
  }
}
