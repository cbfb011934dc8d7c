#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gpatt {

struct BfgsOptions {
  std::size_t max_iter = 200;
  double grad_tol = 1e-5;     ///< stop when max |g_i| falls below this
  double armijo_c = 1e-4;
  double max_step = 1.0;      ///< largest allowed max-norm of a trial step
  std::size_t max_backtracks = 30;
  double stall_rel_decrease = 1e-12;  ///< per-step decrease below this * max(1, |f|) counts as stalled
  std::size_t stall_steps = 5;        ///< consecutive stalled steps before stopping
};

enum class BfgsStatus { converged, max_iterations, line_search_failed, stalled };

std::string to_string(BfgsStatus status);

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  std::vector<double> trace;  ///< objective after each accepted step, starting point first
  BfgsStatus status = BfgsStatus::max_iterations;
};

/// Objective returning f(x) and writing its gradient. Returning a non-finite
/// value, or throwing gpatt::Error, marks x as infeasible for the line search.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Minimizes `f` by BFGS on the inverse Hessian with backtracking Armijo steps.
BfgsResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& options = {});

}  // namespace gpatt
