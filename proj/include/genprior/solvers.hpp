#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "genprior/common.hpp"
#include "genprior/genmodel.hpp"
#include "genprior/measurement.hpp"
#include "genprior/projection.hpp"
#include "genprior/sensing.hpp"

namespace genprior {

enum class InitialPoint { zero, gaussian, random_range_point, given };

inline const char* to_string(InitialPoint k) {
  switch (k) {
    case InitialPoint::zero: return "zero";
    case InitialPoint::gaussian: return "gaussian";
    case InitialPoint::random_range_point: return "random_range_point";
    case InitialPoint::given: return "given";
  }
  return "?";
}

struct SolverConfig {
  double step_size = 1.0;  // nu for PGD-GLasso, zeta for PGD-NLasso
  int iterations = 30;
  ProjectionConfig projection;
  InitialPoint x0_mode = InitialPoint::zero;
  std::optional<Vector> x0;  // used when x0_mode == given
  bool record_trajectory = false;
  bool warm_start_projection = true;
  std::uint64_t seed = 0;

  void validate() const {
    require(step_size > 0.0, "solver: step_size must be positive");
    require(iterations >= 1, "solver: iterations must be >= 1");
    require(x0_mode != InitialPoint::given || x0.has_value(), "solver: x0_mode given without x0");
    projection.validate();
  }

  /// nu = 1, T = 30.
  static SolverConfig glasso_defaults() { return {}; }

  /// zeta = 0.2, T = 30; the replication setting, which does not satisfy the
  /// contraction condition for l = 1.5, u = 2.5.
  static SolverConfig nlasso_replication_defaults() {
    SolverConfig c;
    c.step_size = 0.2;
    return c;
  }

  /// zeta = 0.23, inside (1/(2 l^2), 3/(2 u^2)) for l = 1.5, u = 2.5.
  static SolverConfig nlasso_theory_defaults() {
    SolverConfig c;
    c.step_size = 0.23;
    return c;
  }
};

/// Entry t of loss_values/error_to_target belongs to x^(t), t = 0..T;
/// contraction_ratios[t] = error[t+1] / error[t].
struct Trajectory {
  std::vector<Vector> iterates;
  std::vector<double> loss_values;
  std::vector<double> error_to_target;
  std::vector<double> contraction_ratios;
};

struct SolveResult {
  Vector x;
  Vector z;
  Trajectory trajectory;
};

inline double loss_glasso(const SensingOperator& op, const Vector& y_tilde, const Vector& x) {
  require_size(y_tilde.size(), op.rows(), "loss_glasso measurements");
  return (y_tilde - op.apply(x)).squaredNorm() / (2.0 * op.rows());
}

inline Vector grad_glasso(const SensingOperator& op, const Vector& y_tilde, const Vector& x) {
  require_size(y_tilde.size(), op.rows(), "grad_glasso measurements");
  return op.adjoint_apply(op.apply(x) - y_tilde) / double(op.rows());
}

inline double loss_nlasso(const SensingOperator& op, const Vector& y_tilde, const LinkModel& link, const Vector& x) {
  if (!link.differentiable()) throw unsupported_operation("loss_nlasso: link is not differentiable");
  require_size(y_tilde.size(), op.rows(), "loss_nlasso measurements");
  return (y_tilde - link.eval(op.apply(x))).squaredNorm() / (2.0 * op.rows());
}

inline Vector grad_nlasso(const SensingOperator& op, const Vector& y_tilde, const LinkModel& link, const Vector& x) {
  if (!link.differentiable()) throw unsupported_operation("grad_nlasso: link is not differentiable");
  require_size(y_tilde.size(), op.rows(), "grad_nlasso measurements");
  const Vector t = op.apply(x);
  return op.adjoint_apply((link.eval(t) - y_tilde).cwiseProduct(link.deriv(t))) / double(op.rows());
}

/// mu1 = max{1 - nu (1 - eps), nu (1 + eps) - 1}. eps = 0 gives the eps -> 0
/// limit.
inline double mu1_of(double nu, double eps) {
  require(eps >= 0.0 && eps < 1.0, "mu1_of: eps must be in [0, 1)");
  return std::max(1.0 - nu * (1.0 - eps), nu * (1.0 + eps) - 1.0);
}

/// mu2 = max{1 - zeta l^2 (1 - eps), zeta u^2 (1 + eps) - 1}.
inline double mu2_of(double zeta, double l, double u, double eps) {
  require(eps >= 0.0 && eps < 1.0, "mu2_of: eps must be in [0, 1)");
  return std::max(1.0 - zeta * l * l * (1.0 - eps), zeta * u * u * (1.0 + eps) - 1.0);
}

namespace detail {

inline Vector initial_point(const GenerativeDecoder& decoder, const SolverConfig& cfg) {
  const int p = decoder.ambient_dim();
  switch (cfg.x0_mode) {
    case InitialPoint::zero: return Vector::Zero(p);
    case InitialPoint::gaussian: {
      Rng rng(derive_seed(cfg.seed, "solver.x0.gaussian"));
      return gaussian_vector(rng, p);
    }
    case InitialPoint::random_range_point:
      return decoder.forward(decoder.sample_latent(derive_seed(cfg.seed, "solver.x0.range")));
    case InitialPoint::given:
      require_size(cfg.x0->size(), p, "solver x0");
      return *cfg.x0;
  }
  return Vector::Zero(p);
}

inline void finish_ratios(Trajectory& traj) {
  const auto& e = traj.error_to_target;
  traj.contraction_ratios.clear();
  for (std::size_t t = 0; t + 1 < e.size(); ++t) traj.contraction_ratios.push_back(e[t] > 0.0 ? e[t + 1] / e[t] : 0.0);
}

// x^(t+1) = P_K(x^(t) - (step / n) A^T residual(x^(t)))
template <class Residual, class Loss>
SolveResult projected_gradient(const SensingOperator& op, const Vector& y_tilde, const GenerativeDecoder& decoder,
                               const SolverConfig& cfg, const std::optional<Vector>& target, Residual residual,
                               Loss loss) {
  cfg.validate();
  require_size(y_tilde.size(), op.rows(), "solver measurements");
  require(op.cols() == decoder.ambient_dim(), "solver: operator and decoder ambient dimensions differ");
  if (target) require_size(target->size(), op.cols(), "solver target");

  SolveResult out;
  Vector x = initial_point(decoder, cfg);
  std::optional<Vector> z;
  auto record = [&](const Vector& xt) {
    out.trajectory.loss_values.push_back(loss(xt));
    if (target) out.trajectory.error_to_target.push_back((xt - *target).norm());
    if (cfg.record_trajectory) out.trajectory.iterates.push_back(xt);
  };
  record(x);
  const double scale = cfg.step_size / double(op.rows());
  for (int t = 0; t < cfg.iterations; ++t) {
    const Vector step = x - scale * op.adjoint_apply(residual(x));
    ProjectionResult proj = project(decoder, step, cfg.projection, derive_seed(cfg.seed, "solver.projection", t),
                                    cfg.warm_start_projection ? z : std::nullopt);
    x = std::move(proj.x_hat);
    z = std::move(proj.z_hat);
    record(x);
  }
  finish_ratios(out.trajectory);
  out.x = std::move(x);
  out.z = z ? std::move(*z) : Vector();
  return out;
}

}  // namespace detail

/// Projected gradient descent on the generalized Lasso loss; target is
/// normally mu x*.
inline SolveResult pgd_glasso(const SensingOperator& op, const Vector& y_tilde, const GenerativeDecoder& decoder,
                              const SolverConfig& cfg, const std::optional<Vector>& target = std::nullopt) {
  return detail::projected_gradient(
      op, y_tilde, decoder, cfg, target, [&](const Vector& x) -> Vector { return op.apply(x) - y_tilde; },
      [&](const Vector& x) { return loss_glasso(op, y_tilde, x); });
}

/// Projected gradient descent on the nonlinear least-squares loss with a
/// known differentiable link; target is normally x*.
inline SolveResult pgd_nlasso(const SensingOperator& op, const Vector& y_tilde, const LinkModel& link,
                              const GenerativeDecoder& decoder, const SolverConfig& cfg,
                              const std::optional<Vector>& target = std::nullopt) {
  if (!link.differentiable()) throw unsupported_operation("pgd_nlasso: link is not differentiable");
  return detail::projected_gradient(
      op, y_tilde, decoder, cfg, target,
      [&](const Vector& x) -> Vector {
        const Vector t = op.apply(x);
        return (link.eval(t) - y_tilde).cwiseProduct(link.deriv(t));
      },
      [&](const Vector& x) { return loss_nlasso(op, y_tilde, link, x); });
}

/// Latent-space baseline: descent over z on loss_glasso(G(z)) with the
/// optimizer, step count, learning rate and restarts of cfg.projection.
/// The trajectory records one entry per descent step of the winning restart.
inline SolveResult csgm_baseline(const SensingOperator& op, const Vector& y_tilde, const GenerativeDecoder& decoder,
                                 const SolverConfig& cfg, const std::optional<Vector>& target = std::nullopt,
                                 const std::optional<Vector>& warm_start = std::nullopt) {
  cfg.validate();
  require_size(y_tilde.size(), op.rows(), "csgm measurements");
  require(op.cols() == decoder.ambient_dim(), "csgm: operator and decoder ambient dimensions differ");
  const auto& pc = cfg.projection;
  const auto& opt = pc.optimizer;
  const double r = decoder.latent_radius();
  const bool each_step = pc.ball_handling == BallHandling::project_each_step;

  SolveResult best;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < pc.restarts; ++restart) {
    Vector z = restart_init(decoder, pc, derive_seed(cfg.seed, "csgm"), restart, warm_start);
    Vector velocity = Vector::Zero(z.size()), m = Vector::Zero(z.size()), v = Vector::Zero(z.size());
    double b1 = 1.0, b2 = 1.0;
    SolveResult run;
    double run_best = std::numeric_limits<double>::infinity();
    for (int step = 0; step <= pc.steps; ++step) {
      Vector zf = each_step ? z : clipped_to_ball(z, r);
      const Vector x = decoder.forward(zf);
      const Vector res = op.apply(x) - y_tilde;
      const double loss = res.squaredNorm() / (2.0 * op.rows());
      run.trajectory.loss_values.push_back(loss);
      if (target) run.trajectory.error_to_target.push_back((x - *target).norm());
      if (cfg.record_trajectory) run.trajectory.iterates.push_back(x);
      if (loss < run_best) {
        run_best = loss;
        run.x = x;
        run.z = zf;
      }
      if (step == pc.steps) break;
      const Vector grad = decoder.vjp(z, op.adjoint_apply(res) / double(op.rows()));
      switch (opt.kind) {
        case OptimizerKind::gradient_descent: z -= pc.learning_rate * grad; break;
        case OptimizerKind::momentum:
          velocity = opt.momentum * velocity + grad;
          z -= pc.learning_rate * velocity;
          break;
        case OptimizerKind::adam:
          b1 *= opt.beta1;
          b2 *= opt.beta2;
          m = opt.beta1 * m + (1.0 - opt.beta1) * grad;
          v = opt.beta2 * v + (1.0 - opt.beta2) * grad.cwiseAbs2();
          z.array() -= pc.learning_rate * (m / (1.0 - b1)).array() / ((v / (1.0 - b2)).array().sqrt() + opt.epsilon);
          break;
      }
      if (each_step) clip_to_ball(z, r);
    }
    if (run_best < best_loss) {
      best_loss = run_best;
      best = std::move(run);
    }
  }
  detail::finish_ratios(best.trajectory);
  return best;
}

}  // namespace genprior
