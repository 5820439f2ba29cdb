#include "wcd/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

namespace wcd {

std::string SolverConfig::validate() const {
  if (!(rtol > 0.0) || !(atol > 0.0)) return "solver tolerances must be > 0";
  if (max_order < 1 || max_order > 5) return "max_order must be in 1..5";
  if (!(max_step > 0.0)) return "max_step must be > 0";
  if (initial_step < 0.0) return "initial_step must be >= 0";
  return {};
}

namespace {

// Fixed-step BDF coefficients: (1/h) sum_j alpha[j] y_{n+1-j} = f(y_{n+1}).
constexpr double kBdfAlpha[5][6] = {
    {1.0, -1.0, 0.0, 0.0, 0.0, 0.0},
    {1.5, -2.0, 0.5, 0.0, 0.0, 0.0},
    {11.0 / 6.0, -3.0, 1.5, -1.0 / 3.0, 0.0, 0.0},
    {25.0 / 12.0, -4.0, 3.0, -4.0 / 3.0, 0.25, 0.0},
    {137.0 / 60.0, -5.0, 5.0, -10.0 / 3.0, 1.25, -0.2},
};

// The integrator keeps its history on a uniform grid (newest first, at t,
// t-h, t-2h, ...). Fixed-step BDF formulas stay zero-stable at every order
// this way, unlike fully variable-coefficient BDF at orders 4-5. Step-size
// changes never extrapolate: shrinking re-grids by interpolation inside the
// history support, growing doubles the step by subsampling every other
// history point.
class BdfIntegrator {
 public:
  BdfIntegrator(const OdeProblem& prob, const SolverConfig& cfg)
      : prob_(prob), cfg_(cfg), n_(prob.size()) {}

  IntegrationResult run(Eigen::VectorXd& y, double t0, double t_end,
                        std::span<const double> snaps, const SnapshotFn& on_snap);

 private:
  double wrms(const Eigen::VectorXd& v, const Eigen::VectorXd& ref) const {
    double acc = 0.0;
    for (int i = 0; i < n_; ++i) {
      double w = cfg_.rtol * std::abs(ref[i]) + cfg_.atol;
      double e = v[i] / w;
      acc += e * e;
    }
    return std::sqrt(acc / n_);
  }

  // Lagrange evaluation of the history polynomial at offset x in units of
  // the current step (newest point at 0, older ones at -1, -2, ...).
  void interpolate(int npts, double x, Eigen::VectorXd& out) const {
    out.setZero(n_);
    for (int j = 0; j < npts; ++j) {
      double w = 1.0;
      for (int m = 0; m < npts; ++m) {
        if (m == j) continue;
        w *= (x + m) / (m - j);
      }
      out += w * ys_[j];
    }
  }

  // Re-grid the history to spacing ratio*h without ever extrapolating:
  // shrinking keeps every point, growing keeps only the points whose new
  // position stays inside the old support.
  void regrid_history(double ratio) {
    int npts = static_cast<int>(ys_.size());
    int fresh_n = npts;
    if (ratio > 1.0)
      fresh_n = std::min(npts, static_cast<int>(std::floor((npts - 1) / ratio)) + 1);
    std::vector<Eigen::VectorXd> fresh(fresh_n);
    Eigen::VectorXd tmp(n_);
    fresh[0] = ys_[0];
    for (int i = 1; i < fresh_n; ++i) {
      interpolate(npts, -ratio * i, tmp);
      fresh[i] = tmp;
    }
    ys_ = std::move(fresh);
  }

  void refresh_jacobian(double t, const Eigen::VectorXd& y) {
    prob_.jacobian(t, y, jac_);
    stats_.jacobians += 1;
    jac_age_ = 0;
  }

  void factorize(double c0) {
    iter_matrix_ = -jac_;
    iter_matrix_.diagonal().array() += c0;
    lu_.compute(iter_matrix_);
    c0_fact_ = c0;
    have_lu_ = true;
    stats_.factorizations += 1;
  }

  const OdeProblem& prob_;
  const SolverConfig& cfg_;
  int n_;
  SolverStats stats_;

  std::vector<Eigen::VectorXd> ys_;  // uniform history, newest first

  Eigen::MatrixXd jac_;
  Eigen::MatrixXd iter_matrix_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  bool have_lu_ = false;
  double c0_fact_ = 0.0;
  long jac_age_ = 0;  // accepted steps since the Jacobian was evaluated
};

IntegrationResult BdfIntegrator::run(Eigen::VectorXd& y, double t0, double t_end,
                                     std::span<const double> snaps,
                                     const SnapshotFn& on_snap) {
  IntegrationResult res;
  if (t_end <= t0) {
    res.message = "t_end must exceed t0";
    res.status = SolveStatus::StepUnderflow;
    return res;
  }

  Eigen::VectorXd f(n_), y_new(n_), y_pred(n_), rhs_vec(n_), delta(n_), psi(n_);
  prob_.rhs(t0, y, f);
  stats_.rhs_evals += 1;

  double h;
  if (cfg_.initial_step > 0.0) {
    h = cfg_.initial_step;
  } else {
    double fn = wrms(f, y);
    h = fn > 0.0 ? 0.01 / fn : 1e-6 * (t_end - t0);
    h = std::min(h, 1e-3 * (t_end - t0));
    h = std::max(h, 1e-30);
  }
  h = std::min(h, cfg_.max_step);

  ys_.assign(1, y);
  double t = t0;
  int k = 1;
  int steps_at_order = 0;
  int consecutive_fails = 0;
  int rejects_since_accept = 0;
  std::size_t snap_idx = 0;
  static const bool trace = std::getenv("WCD_ODE_TRACE") != nullptr;

  auto change_h = [&](double ratio, int order) {
    ratio = std::clamp(ratio, 0.02, 5.0);
    if (ratio > 1.0) {
      // growth must leave at least order+1 in-support points
      int npts = static_cast<int>(ys_.size());
      double r_max = static_cast<double>(npts - 1) / std::max(order + 1, 2);
      ratio = std::min(ratio, r_max);
      if (ratio <= 1.0) return;
      if (h * ratio > cfg_.max_step) ratio = cfg_.max_step / h;
      if (ratio <= 1.0) return;
    }
    if (ratio == 1.0) return;
    regrid_history(ratio);
    h *= ratio;
  };

  while (t < t_end) {
    if (stats_.steps >= cfg_.max_steps) {
      res.status = SolveStatus::MaxSteps;
      res.message = "maximum step count reached";
      break;
    }
    if (h <= 0.0 || (stats_.steps > 0 && h < 1e-14 * std::abs(t))) {
      res.status = SolveStatus::StepUnderflow;
      res.message = "step size underflow at t = " + std::to_string(t);
      break;
    }
    if (t + h > t_end) change_h((t_end - t) / h, k);
    const double t_new = t + h;
    const int kk = std::min<int>(k, static_cast<int>(ys_.size()));
    const double* alpha = kBdfAlpha[kk - 1];
    const double c0 = alpha[0] / h;

    psi.setZero(n_);
    for (int j = 1; j <= kk; ++j) psi += (alpha[j] / h) * ys_[j - 1];

    int npred = std::min<int>(kk + 1, static_cast<int>(ys_.size()));
    interpolate(npred, 1.0, y_pred);

    if (!have_lu_ || jac_age_ > 15) {
      refresh_jacobian(t_new, y_pred);
      factorize(c0);
    } else if (std::abs(c0 - c0_fact_) > 0.2 * std::abs(c0_fact_)) {
      factorize(c0);
    }

    y_new = y_pred;
    bool converged = false;
    double last_norm = 0.0;
    for (int it = 0; it < 4; ++it) {
      prob_.rhs(t_new, y_new, f);
      stats_.rhs_evals += 1;
      rhs_vec = -(c0 * y_new + psi - f);
      delta = lu_.solve(rhs_vec);
      y_new += delta;
      double norm = wrms(delta, y_new);
      if (trace) {
        int iworst = 0;
        double worst = 0.0;
        for (int i = 0; i < n_; ++i) {
          double w = cfg_.rtol * std::abs(y_new[i]) + cfg_.atol;
          if (std::abs(delta[i]) / w > worst) {
            worst = std::abs(delta[i]) / w;
            iworst = i;
          }
        }
        std::fprintf(stderr,
                     "  t=%.4e h=%.3e k=%d it=%d norm=%.3e jac_age=%ld worst[%d]=%.3e y=%.3e "
                     "pred=%.3e\n",
                     t, h, kk, it, norm, jac_age_, iworst, delta[iworst], y_new[iworst],
                     y_pred[iworst]);
      }
      if (!std::isfinite(norm)) break;
      if (norm < 0.03) {
        converged = true;
        break;
      }
      if (it > 0 && norm > 0.9 * last_norm) break;  // diverging or stalled
      last_norm = norm;
    }

    if (!converged) {
      stats_.newton_failures += 1;
      consecutive_fails += 1;
      rejects_since_accept += 1;
      if (rejects_since_accept >= 4) {
        // repeated regrids degrade the history polynomial; restart fresh
        // from the last accepted state at first order
        ys_.assign(1, ys_.front());
        k = 1;
        steps_at_order = 0;
        h *= 0.1;
        rejects_since_accept = 0;
      } else if (jac_age_ > 0) {
        refresh_jacobian(t_new, y_pred);
        factorize(c0);
      } else {
        change_h(0.25, k);
      }
      if (consecutive_fails > 30) {
        res.status = SolveStatus::NewtonStall;
        res.message = "repeated Newton failures at t = " + std::to_string(t);
        break;
      }
      continue;
    }

    delta = y_new - y_pred;
    double err = wrms(delta, y_new) / (kk + 1);
    if (!std::isfinite(err)) err = 2.0;

    if (err > 1.0) {
      if (trace) {
        int iw = 0;
        double worst = 0.0;
        for (int i = 0; i < n_; ++i) {
          double w = cfg_.rtol * std::abs(y_new[i]) + cfg_.atol;
          if (std::abs(delta[i]) / w > worst) {
            worst = std::abs(delta[i]) / w;
            iw = i;
          }
        }
        std::fprintf(stderr, "REJ t=%.4e h=%.3e k=%d err=%.3e worst[%d] d=%.3e y=%.3e\n", t,
                     h, kk, err, iw, delta[iw], y_new[iw]);
      }
      stats_.error_failures += 1;
      consecutive_fails += 1;
      rejects_since_accept += 1;
      if (k > 1) {
        k -= 1;  // a shorter stencil is more tolerant of a ragged history
        steps_at_order = 0;
      }
      if (rejects_since_accept >= 4) {
        ys_.assign(1, ys_.front());
        k = 1;
        h *= 0.1;
        rejects_since_accept = 0;
        continue;
      }
      double scale = 0.9 * std::pow(err, -1.0 / (kk + 1));
      change_h(std::clamp(scale, 0.1, 0.5), k);
      continue;
    }

    // nonnegativity policy: reject on excursions beyond -atol, clamp the rest
    double ymin = y_new.minCoeff();
    if (ymin < -cfg_.atol) {
      stats_.error_failures += 1;
      consecutive_fails += 1;
      rejects_since_accept += 1;
      if (rejects_since_accept >= 4) {
        ys_.assign(1, ys_.front());
        k = 1;
        h *= 0.1;
        rejects_since_accept = 0;
        continue;
      }
      change_h(0.5, k);
      continue;
    }
    if (ymin < 0.0) {
      for (int i = 0; i < n_; ++i) {
        if (y_new[i] < 0.0) {
          stats_.clamped_components += 1;
          stats_.clamped_mass += -y_new[i];
          y_new[i] = 0.0;
        }
      }
    }

    // step accepted
    consecutive_fails = 0;
    rejects_since_accept = 0;
    stats_.steps += 1;
    if (trace && stats_.steps % 1000 == 0) {
      int iw = 0;
      double worst = 0.0;
      for (int i = 0; i < n_; ++i) {
        double w = cfg_.rtol * std::abs(y_new[i]) + cfg_.atol;
        if (std::abs(delta[i]) / w > worst) {
          worst = std::abs(delta[i]) / w;
          iw = i;
        }
      }
      std::fprintf(stderr, "ACC step=%ld t=%.4e h=%.3e k=%d err=%.3e worst[%d] y=%.3e d=%.3e\n",
                   stats_.steps, t, h, kk, err, iw, y_new[iw], delta[iw]);
    }
    steps_at_order += 1;
    jac_age_ += 1;

    ys_.insert(ys_.begin(), y_new);
    std::size_t keep = static_cast<std::size_t>(cfg_.max_order) + 4;
    if (ys_.size() > keep) ys_.pop_back();
    t = t_new;

    // snapshots through dense output on the accepted history
    while (snap_idx < snaps.size() && snaps[snap_idx] <= t + 1e-12 * std::abs(t)) {
      double ts = snaps[snap_idx];
      int npts = std::min<int>(kk + 1, static_cast<int>(ys_.size()));
      interpolate(npts, (ts - t) / h, y_pred);
      if (on_snap) on_snap(ts, y_pred);
      ++snap_idx;
    }

    if (t >= t_end) break;

    // order adaptation on a settled history
    double err_used = err;
    int k_next = k;
    if (steps_at_order > kk + 1) {
      if (kk > 1 && static_cast<int>(ys_.size()) > kk) {
        // what a (kk-1)-order predictor from the older points gives here
        Eigen::VectorXd low = Eigen::VectorXd::Zero(n_);
        for (int j = 1; j <= kk; ++j) {
          double w = 1.0;
          for (int m = 1; m <= kk; ++m) {
            if (m == j) continue;
            w *= static_cast<double>(m) / (m - j);
          }
          low += w * ys_[j];
        }
        double err_low = wrms(ys_[0] - low, ys_[0]) / kk;
        if (err_low < 0.5 * err && err_low < 1.0) {
          k_next = kk - 1;
          err_used = err_low;
        }
      }
      if (k_next == k && k == kk && k < cfg_.max_order &&
          static_cast<int>(ys_.size()) >= k + 2 && err < 0.1) {
        k_next = kk + 1;
      }
      if (k_next != k) {
        k = k_next;
        steps_at_order = 0;
      }
    }
    double scale = 0.9 * std::pow(std::max(err_used, 1e-10), -1.0 / (k + 1));
    // hold h inside a small deadband so the uniform grid stays settled
    if (scale < 0.95 || scale > 1.2) change_h(scale, k);
  }

  y = ys_.front();
  res.stats = stats_;
  if (res.status == SolveStatus::Ok && t < t_end) res.status = SolveStatus::StepUnderflow;
  return res;
}

}  // namespace

IntegrationResult integrate(const OdeProblem& problem, Eigen::VectorXd& y, double t0,
                            double t_end, const SolverConfig& config,
                            std::span<const double> snapshot_times,
                            const SnapshotFn& on_snapshot) {
  std::string err = config.validate();
  if (!err.empty()) {
    IntegrationResult res;
    res.status = SolveStatus::StepUnderflow;
    res.message = "invalid solver config: " + err;
    return res;
  }
  BdfIntegrator solver(problem, config);
  return solver.run(y, t0, t_end, snapshot_times, on_snapshot);
}

}  // namespace wcd
