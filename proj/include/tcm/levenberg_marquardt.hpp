#pragma once

// Levenberg-Marquardt for small dense least-squares problems with a
// central-difference Jacobian.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace tcm {

struct LmOptions {
  int max_iterations = 500;
  double relative_step = 1e-6;  // Jacobian step relative to max(|x_i|, scale_i)
  double step_tolerance = 1e-10;
  double cost_tolerance = 1e-12;
  Eigen::VectorXd parameter_scale;  // typical magnitudes; defaults to 1
  // Stop when the cost fell by less than stall_tolerance (relative) over the
  // last stall_window iterations; 0 disables. Meant for piecewise-smooth
  // models where damped steps keep succeeding by tiny amounts.
  int stall_window = 0;
  double stall_tolerance = 1e-6;
};

struct LmResult {
  Eigen::VectorXd params;
  Eigen::VectorXd residuals;
  Eigen::MatrixXd jacobian;
  double cost = 0.0;  // sum of squared residuals
  int iterations = 0;
  bool converged = false;
  bool stalled = false;  // converged through the stall criterion

  /// Asymptotic covariance s^2 (J^T J)^+ with s^2 = cost / (m - p).
  Eigen::MatrixXd covariance() const {
    const auto m = residuals.size(), p = params.size();
    const double dof = static_cast<double>(std::max<Eigen::Index>(m - p, 1));
    const Eigen::MatrixXd jtj = jacobian.transpose() * jacobian;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jtj);
    return (cost / dof) * cod.pseudoInverse();
  }

  Eigen::VectorXd standard_errors() const { return covariance().diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

template <typename ResidualFn>
Eigen::MatrixXd numeric_jacobian(ResidualFn& fn, const Eigen::VectorXd& x, const LmOptions& opt,
                                 Eigen::Index m) {
  Eigen::MatrixXd jac(m, x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double scale = opt.parameter_scale.size() == x.size() ? opt.parameter_scale(i) : 1.0;
    const double h = opt.relative_step * std::max(std::abs(x(i)), scale);
    probe(i) = x(i) + h;
    const Eigen::VectorXd up = fn(probe);
    probe(i) = x(i) - h;
    const Eigen::VectorXd down = fn(probe);
    probe(i) = x(i);
    jac.col(i) = (up - down) / (2.0 * h);
  }
  return jac;
}

template <typename ResidualFn>
LmResult levenberg_marquardt(ResidualFn fn, Eigen::VectorXd x0, const LmOptions& opt = {}) {
  LmResult out;
  out.params = std::move(x0);
  out.residuals = fn(out.params);
  out.cost = out.residuals.squaredNorm();
  const Eigen::Index m = out.residuals.size(), p = out.params.size();
  if (!std::isfinite(out.cost)) return out;

  double lambda = 1e-3;
  std::vector<double> history;
  for (out.iterations = 0; out.iterations < opt.max_iterations; ++out.iterations) {
    if (out.cost == 0.0) {
      out.converged = true;
      break;
    }
    out.jacobian = numeric_jacobian(fn, out.params, opt, m);
    const Eigen::MatrixXd jtj = out.jacobian.transpose() * out.jacobian;
    const Eigen::VectorXd gradient = out.jacobian.transpose() * out.residuals;
    // Floor flat directions relative to the stiffest one so damping always
    // regularizes the system.
    const double stiffest = jtj.diagonal().maxCoeff();
    Eigen::VectorXd diag = jtj.diagonal().cwiseMax(std::max(1e-12 * stiffest, std::numeric_limits<double>::min()));

    bool accepted = false;
    Eigen::VectorXd step;
    for (int tries = 0; tries < 40 && !accepted; ++tries) {
      Eigen::MatrixXd lhs = jtj;
      lhs.diagonal() += lambda * diag;
      step = lhs.ldlt().solve(-gradient);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd trial = out.params + step;
      const Eigen::VectorXd r = fn(trial);
      const double cost = r.squaredNorm();
      if (std::isfinite(cost) && cost < out.cost) {
        const double drop = out.cost - cost;
        out.params = trial;
        out.residuals = r;
        out.cost = cost;
        // A short step only signals convergence when it is close to the
        // undamped Gauss-Newton step; heavy damping shortens steps anywhere.
        bool small_step = lambda <= 1e-2;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        for (Eigen::Index i = 0; i < p; ++i) {
          const double scale = opt.parameter_scale.size() == p ? opt.parameter_scale(i) : 1.0;
          if (std::abs(step(i)) > opt.step_tolerance * (std::abs(out.params(i)) + scale)) small_step = false;
        }
        if (small_step || drop <= opt.cost_tolerance * cost) out.converged = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) {
      // No downhill step at any damping: a (local) minimum to working precision.
      out.converged = true;
    }
    history.push_back(out.cost);
    if (!out.converged && opt.stall_window > 0 && history.size() > static_cast<std::size_t>(opt.stall_window)) {
      const double before = history[history.size() - 1 - static_cast<std::size_t>(opt.stall_window)];
      if (before - out.cost <= opt.stall_tolerance * before) {
        out.converged = true;
        out.stalled = true;
      }
    }
    if (out.converged) break;
  }
  out.jacobian = numeric_jacobian(fn, out.params, opt, m);
  return out;
}

}  // namespace tcm
