#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <span>
#include <string>

namespace wcd {

struct SolverConfig {
  double rtol = 1e-6;
  double atol = 1e-4;  // absolute tolerance per component (m^-3 for species)
  double max_step = std::numeric_limits<double>::infinity();
  double initial_step = 0.0;  // 0 picks a conservative automatic value
  int max_order = 5;          // BDF order cap (1..5)
  long max_steps = 50000000;

  std::string validate() const;
};

struct SolverStats {
  long steps = 0;
  long rhs_evals = 0;
  long jacobians = 0;
  long factorizations = 0;
  long error_failures = 0;
  long newton_failures = 0;
  long clamped_components = 0;
  double clamped_mass = 0.0;  // total concentration zeroed by the nonnegativity clamp
};

enum class SolveStatus { Ok, StepUnderflow, NewtonStall, MaxSteps };

struct IntegrationResult {
  SolveStatus status = SolveStatus::Ok;
  SolverStats stats;
  std::string message;

  bool ok() const { return status == SolveStatus::Ok; }
};

// Problem interface; systems are autonomous but t is passed for generality.
class OdeProblem {
 public:
  virtual ~OdeProblem() = default;
  virtual int size() const = 0;
  virtual void rhs(double t, const Eigen::VectorXd& y, Eigen::VectorXd& f) const = 0;
  virtual void jacobian(double t, const Eigen::VectorXd& y, Eigen::MatrixXd& jac) const = 0;
};

using SnapshotFn = std::function<void(double t, const Eigen::VectorXd& y)>;

// Variable-order (1..5), variable-step BDF with modified Newton iterations on
// the analytical Jacobian and a dense LU that is reused across steps. Local
// error is controlled in the weighted RMS norm with weights
// rtol |y_i| + atol. Negative excursions beyond -atol reject the step; small
// ones are clamped to zero and logged. `y` holds the final state on return;
// snapshot times must be ascending and inside (t0, t_end].
IntegrationResult integrate(const OdeProblem& problem, Eigen::VectorXd& y, double t0,
                            double t_end, const SolverConfig& config,
                            std::span<const double> snapshot_times = {},
                            const SnapshotFn& on_snapshot = {});

}  // namespace wcd
