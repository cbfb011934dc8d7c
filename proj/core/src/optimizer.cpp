#include "gpatt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gpatt/errors.hpp"

namespace gpatt {

std::string to_string(BfgsStatus status) {
  switch (status) {
    case BfgsStatus::converged: return "converged";
    case BfgsStatus::max_iterations: return "max_iterations";
    case BfgsStatus::line_search_failed: return "line_search_failed";
    case BfgsStatus::stalled: return "stalled";
  }
  return "?";
}

namespace {

double safe_eval(const Objective& f, const Eigen::VectorXd& x, Eigen::VectorXd& g) {
  try {
    const double v = f(x, g);
    if (!std::isfinite(v) || !g.allFinite()) return std::numeric_limits<double>::infinity();
    return v;
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

BfgsResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const BfgsOptions& options) {
  const Eigen::Index n = x0.size();
  BfgsResult res;
  res.x = std::move(x0);
  res.gradient = Eigen::VectorXd::Zero(n);
  res.value = safe_eval(f, res.x, res.gradient);
  res.evaluations = 1;
  if (!std::isfinite(res.value)) throw TrainingError("objective is not finite at the starting point");
  res.trace.push_back(res.value);

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  bool scaled = false;
  std::size_t stalled = 0;
  Eigen::VectorXd g_new(n);

  while (true) {
    if (res.gradient.cwiseAbs().maxCoeff() <= options.grad_tol) {
      res.status = BfgsStatus::converged;
      break;
    }
    if (res.iterations >= options.max_iter) {
      res.status = BfgsStatus::max_iterations;
      break;
    }
    Eigen::VectorXd d = -H * res.gradient;
    double slope = res.gradient.dot(d);
    if (!(slope < 0.0)) {
      H.setIdentity();
      scaled = false;
      d = -res.gradient;
      slope = res.gradient.dot(d);
    }
    const double longest = d.cwiseAbs().maxCoeff();
    if (longest > options.max_step) {
      d *= options.max_step / longest;
      slope = res.gradient.dot(d);
    }

    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = 0.0;
    for (std::size_t k = 0; k <= options.max_backtracks; ++k, t *= 0.5) {
      x_new = res.x + t * d;
      f_new = safe_eval(f, x_new, g_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= res.value + options.armijo_c * t * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.status = BfgsStatus::line_search_failed;
      break;
    }

    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - res.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      if (!scaled) {
        H = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = H * y;
      // H+ = (I - rho s y^T) H (I - rho y s^T) + rho s s^T, expanded.
      H += (rho * rho * y.dot(Hy) + rho) * (s * s.transpose()) - rho * (Hy * s.transpose() + s * Hy.transpose());
    }
    stalled = res.value - f_new <= options.stall_rel_decrease * std::max(1.0, std::abs(res.value)) ? stalled + 1 : 0;
    res.x = std::move(x_new);
    res.value = f_new;
    res.gradient = g_new;
    ++res.iterations;
    res.trace.push_back(res.value);
    if (stalled >= options.stall_steps) {
      res.status = BfgsStatus::stalled;
      break;
    }
  }
  return res;
}

}  // namespace gpatt
