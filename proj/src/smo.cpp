#include "mdm/smo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mdm/error.hpp"

namespace mdm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTau = 1e-12;

// Above this many variables Q rows are gathered per step instead of stored.
constexpr std::size_t kDenseLimit = 4096;

// Rows of Q, either all precomputed or assembled on demand.
class QRows {
 public:
  explicit QRows(const DualProblem& pr) : pr_(pr), n_(pr.size()) {
    if (n_ <= kDenseLimit) {
      dense_.resize(n_ * n_);
      for (std::size_t i = 0; i < n_; ++i) fill(i, dense_.data() + i * n_);
    } else {
      scratch_.resize(2 * n_);
    }
  }

  // slot 0 or 1 picks which scratch buffer to use when not dense.
  const double* row(std::size_t i, int slot) {
    if (!dense_.empty()) return dense_.data() + i * n_;
    double* out = scratch_.data() + static_cast<std::size_t>(slot) * n_;
    fill(i, out);
    return out;
  }

 private:
  void fill(std::size_t i, double* out) const {
    const double* k = pr_.kernel.data() + pr_.row[i] * pr_.n_rows;
    const double yi = pr_.y[i];
    for (std::size_t t = 0; t < n_; ++t) out[t] = yi * pr_.y[t] * k[pr_.row[t]];
  }

  const DualProblem& pr_;
  std::size_t n_;
  std::vector<double> dense_;
  std::vector<double> scratch_;
};

struct Pair {
  std::size_t i = 0;
  std::size_t j = 0;
  double violation = -kInf;
  bool found = false;
};

// Per-variable constants for the selection scan: with u = off + sg * alpha,
// a variable may move up when u < c and down when u > 0, and its violation
// key is -sg * grad.
struct ScanTerms {
  std::vector<double> sg;
  std::vector<double> off;

  explicit ScanTerms(const DualProblem& pr) : sg(pr.size()), off(pr.size()) {
    for (std::size_t t = 0; t < pr.size(); ++t) {
      sg[t] = pr.y[t] > 0 ? 1.0 : -1.0;
      off[t] = pr.y[t] > 0 ? 0.0 : pr.c;
    }
  }
};

class PairTracker {
 public:
  explicit PairTracker(double c) : c_(c) {}

  // Strict comparisons on an ascending scan keep the lowest index on ties.
  void visit(std::size_t t, double sg, double off, double a, double g) {
    const double v = -sg * g;
    const double u = off + sg * a;
    const double vu = u < c_ ? v : -kInf;
    const double vl = u > 0.0 ? v : kInf;
    if (vu > up_max_) {
      up_max_ = vu;
      pair_.i = t;
    }
    if (vl < low_min_) {
      low_min_ = vl;
      pair_.j = t;
    }
  }

  double up_max() const { return up_max_; }
  double low_min() const { return low_min_; }

  Pair result() const {
    Pair p = pair_;
    p.found = up_max_ > -kInf && low_min_ < kInf;
    p.violation = p.found ? up_max_ - low_min_ : 0.0;
    return p;
  }

 private:
  double c_;
  double up_max_ = -kInf;
  double low_min_ = kInf;
  Pair pair_;
};

Pair maximal_violating_pair(const DualProblem& pr, const ScanTerms& terms, const std::vector<double>& alpha,
                            const std::vector<double>& grad) {
  PairTracker tr(pr.c);
  for (std::size_t t = 0; t < pr.size(); ++t) tr.visit(t, terms.sg[t], terms.off[t], alpha[t], grad[t]);
  return tr.result();
}

// Analytic two-variable step along the feasible line, clipped to the box.
void update_pair(const DualProblem& pr, std::size_t i, std::size_t j,
                 const std::vector<double>& grad, std::vector<double>& alpha) {
  const double c = pr.c;
  const double qii = pr.q(i, i);
  const double qjj = pr.q(j, j);
  const double qij = pr.q(i, j);

  if (pr.y[i] != pr.y[j]) {
    double quad = qii + qjj + 2.0 * qij;
    if (quad <= 0.0) quad = kTau;
    const double delta = (-grad[i] - grad[j]) / quad;
    const double diff = alpha[i] - alpha[j];
    alpha[i] += delta;
    alpha[j] += delta;
    if (diff > 0.0) {
      if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = diff;
      }
    } else if (alpha[i] < 0.0) {
      alpha[i] = 0.0;
      alpha[j] = -diff;
    }
    if (diff > 0.0) {
      if (alpha[i] > c) {
        alpha[i] = c;
        alpha[j] = c - diff;
      }
    } else if (alpha[j] > c) {
      alpha[j] = c;
      alpha[i] = c + diff;
    }
  } else {
    double quad = qii + qjj - 2.0 * qij;
    if (quad <= 0.0) quad = kTau;
    const double delta = (grad[i] - grad[j]) / quad;
    const double sum = alpha[i] + alpha[j];
    alpha[i] -= delta;
    alpha[j] += delta;
    if (sum > c) {
      if (alpha[i] > c) {
        alpha[i] = c;
        alpha[j] = sum - c;
      }
    } else if (alpha[j] < 0.0) {
      alpha[j] = 0.0;
      alpha[i] = sum;
    }
    if (sum > c) {
      if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = sum - c;
      }
    } else if (alpha[i] < 0.0) {
      alpha[i] = 0.0;
      alpha[j] = sum;
    }
  }
}

}  // namespace

double kkt_violation(const DualProblem& problem, const std::vector<double>& alpha,
                     const std::vector<double>& gradient) {
  return maximal_violating_pair(problem, ScanTerms(problem), alpha, gradient).violation;
}

DualSolution solve_dual(const DualProblem& pr, const SolverOptions& options) {
  const std::size_t n = pr.size();
  if (pr.p.size() != n || pr.row.size() != n || pr.kernel.size() != pr.n_rows * pr.n_rows) {
    throw Error(Errc::InvalidArgument, "inconsistent dual problem");
  }
  if (!(pr.c > 0.0)) throw Error(Errc::InvalidArgument, "box constraint must be > 0");

  DualSolution sol;
  sol.alpha.assign(n, 0.0);
  sol.gradient = pr.p;
  auto& alpha = sol.alpha;
  auto& grad = sol.gradient;
  const double c = pr.c;
  QRows rows(pr);
  const ScanTerms terms(pr);
  const double* sg = terms.sg.data();
  const double* off = terms.off.data();

  // Variables stuck at a bound are dropped from the scan for a while
  // (shrinking); their gradients go stale and are rebuilt before any
  // decision that involves them. The active list stays sorted so ties still
  // resolve to the lowest index.
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), 0);
  bool unshrunk = false;
  const std::size_t shrink_period = std::min<std::size_t>(n, 1000);
  std::size_t countdown = shrink_period;

  auto scan = [&] {
    PairTracker tr(c);
    for (std::size_t t : active) tr.visit(t, sg[t], off[t], alpha[t], grad[t]);
    return tr;
  };
  auto rebuild_inactive = [&] {
    if (active.size() == n) return;
    std::vector<char> is_active(n, 0);
    for (std::size_t t : active) is_active[t] = 1;
    std::vector<std::size_t> support;
    for (std::size_t s = 0; s < n; ++s) {
      if (alpha[s] != 0.0) support.push_back(s);
    }
    for (std::size_t t = 0; t < n; ++t) {
      if (is_active[t]) continue;
      const double* qt = rows.row(t, 0);
      double g = pr.p[t];
      for (std::size_t s : support) g += qt[s] * alpha[s];
      grad[t] = g;
    }
    active.resize(n);
    std::iota(active.begin(), active.end(), 0);
  };
  auto shrink = [&] {
    PairTracker tr = scan();
    if (!unshrunk && tr.up_max() - tr.low_min() <= 10.0 * options.tolerance) {
      unshrunk = true;
      rebuild_inactive();
      tr = scan();
    }
    const double m = tr.up_max();
    const double big_m = tr.low_min();
    std::erase_if(active, [&](std::size_t t) {
      const double u = off[t] + sg[t] * alpha[t];
      const bool up = u < c;
      const bool low = u > 0.0;
      if (up && low) return false;
      const double v = -sg[t] * grad[t];
      // Only-low variables are picked as the minimum; only-up ones as the maximum.
      return up ? v < big_m : v > m;
    });
  };

  for (;;) {
    if (--countdown == 0) {
      countdown = shrink_period;
      shrink();
    }
    Pair wp = scan().result();
    if (!wp.found || wp.violation < options.tolerance) {
      if (active.size() == n) {
        sol.max_violation = wp.violation;
        sol.converged = true;
        break;
      }
      // Converged on the active set only: check again on everything.
      rebuild_inactive();
      countdown = 1;
      wp = scan().result();
      if (!wp.found || wp.violation < options.tolerance) {
        sol.max_violation = wp.violation;
        sol.converged = true;
        break;
      }
    }
    sol.max_violation = wp.violation;
    if (sol.iterations >= options.max_iterations) break;
    ++sol.iterations;

    const std::size_t i = wp.i;
    const std::size_t j = wp.j;
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    update_pair(pr, i, j, grad, alpha);
    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    const double* qi = rows.row(i, 0);
    const double* qj = rows.row(j, 1);
    for (std::size_t t : active) grad[t] += qi[t] * di + qj[t] * dj;
  }
  rebuild_inactive();

  // Offset from free variables, else the midpoint of the feasible interval.
  double ub = kInf, lb = -kInf, free_sum = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = pr.y[t] * grad[t];
    if (alpha[t] >= c) {
      if (pr.y[t] < 0) {
        ub = std::min(ub, yg);
      } else {
        lb = std::max(lb, yg);
      }
    } else if (alpha[t] <= 0.0) {
      if (pr.y[t] > 0) {
        ub = std::min(ub, yg);
      } else {
        lb = std::max(lb, yg);
      }
    } else {
      ++n_free;
      free_sum += yg;
    }
  }
  if (n_free > 0) {
    sol.rho = free_sum / static_cast<double>(n_free);
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    sol.rho = 0.5 * (ub + lb);
  } else {
    sol.rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
  }
  return sol;
}

}  // namespace mdm
