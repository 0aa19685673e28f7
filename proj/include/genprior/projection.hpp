#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>

#include "genprior/common.hpp"
#include "genprior/genmodel.hpp"

namespace genprior {

enum class OptimizerKind { gradient_descent, momentum, adam };
enum class LatentInit { zero, gaussian, warm_start };
enum class BallHandling { project_each_step, project_at_end };
/// latent_descent approximates P_K by first-order descent over z;
/// exact_linear is the closed form for linear decoders with orthonormal
/// columns.
enum class ProjectionMethod { latent_descent, exact_linear };

inline const char* to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::gradient_descent: return "gradient_descent";
    case OptimizerKind::momentum: return "momentum";
    case OptimizerKind::adam: return "adam";
  }
  return "?";
}
inline const char* to_string(LatentInit k) {
  switch (k) {
    case LatentInit::zero: return "zero";
    case LatentInit::gaussian: return "gaussian";
    case LatentInit::warm_start: return "warm_start";
  }
  return "?";
}
inline const char* to_string(BallHandling k) {
  return k == BallHandling::project_each_step ? "project_each_step" : "project_at_end";
}
inline const char* to_string(ProjectionMethod k) {
  return k == ProjectionMethod::latent_descent ? "latent_descent" : "exact_linear";
}

struct OptimizerSettings {
  OptimizerKind kind = OptimizerKind::adam;
  double momentum = 0.9;  // heavy-ball beta
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const OptimizerSettings&) const = default;
};

struct ProjectionConfig {
  int steps = 200;
  double learning_rate = 0.03;
  int restarts = 1;
  OptimizerSettings optimizer;
  LatentInit init = LatentInit::zero;
  BallHandling ball_handling = BallHandling::project_each_step;
  ProjectionMethod method = ProjectionMethod::latent_descent;

  void validate() const {
    require(steps >= 1, "projection: steps must be >= 1");
    require(learning_rate > 0.0, "projection: learning_rate must be positive");
    require(restarts >= 1, "projection: restarts must be >= 1");
    require(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0, "projection: beta1 must be in [0, 1)");
    require(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0, "projection: beta2 must be in [0, 1)");
    require(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0, "projection: momentum must be in [0, 1)");
    require(optimizer.epsilon > 0.0, "projection: epsilon must be positive");
  }

  /// 200 Adam steps at rate 0.03 (small-decoder setting).
  static ProjectionConfig small_decoder_preset() { return {}; }

  /// 100 Adam steps at rate 0.1, 2 restarts (large-decoder setting).
  static ProjectionConfig large_decoder_preset() {
    ProjectionConfig c;
    c.steps = 100;
    c.learning_rate = 0.1;
    c.restarts = 2;
    return c;
  }

  bool operator==(const ProjectionConfig&) const = default;
};

struct ProjectionResult {
  Vector z_hat;
  Vector x_hat;
  double residual = 0.0;
  int restart_index = 0;
  int out_of_ball_steps = 0;
};

/// Starting latent of a given restart. Restart 0 uses the warm start when
/// one is given, otherwise cfg.init; later restarts draw z ~ N(0, I) clipped
/// into the ball from derive_seed(seed, "projection.restart", index).
inline Vector restart_init(const GenerativeDecoder& decoder, const ProjectionConfig& cfg, std::uint64_t seed,
                           int index, const std::optional<Vector>& warm_start = std::nullopt) {
  const int k = decoder.latent_dim();
  if (index == 0) {
    if (warm_start) {
      require_size(warm_start->size(), k, "projection warm start");
      return clipped_to_ball(*warm_start, decoder.latent_radius());
    }
    if (cfg.init == LatentInit::zero) return Vector::Zero(k);
    require(cfg.init != LatentInit::warm_start, "projection: warm_start init without a previous latent");
  }
  Rng rng(derive_seed(seed, "projection.restart", std::uint64_t(index)));
  return clipped_to_ball(gaussian_vector(rng, k), decoder.latent_radius());
}

/// One descent on 0.5 ||G(z) - x||^2 from z_init. Returns the best feasible
/// point visited, so the result never beats its own start from above.
inline ProjectionResult descend(const GenerativeDecoder& decoder, const Vector& x, const ProjectionConfig& cfg,
                                const Vector& z_init) {
  require_size(x.size(), decoder.ambient_dim(), "projection target");
  require_size(z_init.size(), decoder.latent_dim(), "projection start");
  const double r = decoder.latent_radius();
  const bool each_step = cfg.ball_handling == BallHandling::project_each_step;
  const auto& opt = cfg.optimizer;

  Vector z = z_init;
  if (each_step) clip_to_ball(z, r);
  Vector velocity = Vector::Zero(z.size());
  Vector m = Vector::Zero(z.size());
  Vector v = Vector::Zero(z.size());
  double beta1_power = 1.0, beta2_power = 1.0;

  ProjectionResult best;
  best.residual = std::numeric_limits<double>::infinity();
  int out_of_ball = 0;

  auto consider = [&](const Vector& candidate, const Vector& image) {
    const double res = (image - x).norm();
    if (res < best.residual) {
      best.residual = res;
      best.z_hat = candidate;
      best.x_hat = image;
    }
  };

  for (int step = 0; step <= cfg.steps; ++step) {
    Vector image = decoder.forward(z);
    if (z.norm() <= r) consider(z, image);
    if (step == cfg.steps) break;
    const Vector grad = decoder.vjp(z, image - x);
    switch (opt.kind) {
      case OptimizerKind::gradient_descent:
        z -= cfg.learning_rate * grad;
        break;
      case OptimizerKind::momentum:
        velocity = opt.momentum * velocity + grad;
        z -= cfg.learning_rate * velocity;
        break;
      case OptimizerKind::adam: {
        beta1_power *= opt.beta1;
        beta2_power *= opt.beta2;
        m = opt.beta1 * m + (1.0 - opt.beta1) * grad;
        v = opt.beta2 * v + (1.0 - opt.beta2) * grad.cwiseAbs2();
        const Vector m_hat = m / (1.0 - beta1_power);
        const Vector v_hat = v / (1.0 - beta2_power);
        z.array() -= cfg.learning_rate * m_hat.array() / (v_hat.array().sqrt() + opt.epsilon);
        break;
      }
    }
    if (z.norm() > r) {
      ++out_of_ball;
      if (each_step) clip_to_ball(z, r);
    }
  }
  if (!each_step) {
    Vector end = clipped_to_ball(z, r);
    consider(end, decoder.forward(end));
  }
  if (!std::isfinite(best.residual)) {
    // every iterate left the ball (project_at_end); fall back to the clipped start
    Vector start = clipped_to_ball(z_init, r);
    consider(start, decoder.forward(start));
  }
  best.out_of_ball_steps = out_of_ball;
  return best;
}

/// Closed-form projection onto K = {W z : ||z|| <= r} for W with orthonormal
/// columns: z = clip(W^T x).
inline ProjectionResult project_exact_linear(const GenerativeDecoder& decoder, const Vector& x) {
  if (!decoder.is_linear_orthonormal(1e-9))
    throw unsupported_operation("project_exact_linear: decoder is not a single linear layer with orthonormal columns");
  require_size(x.size(), decoder.ambient_dim(), "projection target");
  const Matrix& w = decoder.layers().front().weight;
  ProjectionResult res;
  res.z_hat = clipped_to_ball(w.transpose() * x, decoder.latent_radius());
  res.x_hat = decoder.forward(res.z_hat);
  res.residual = (res.x_hat - x).norm();
  return res;
}

/// Approximate P_K(x): best of cfg.restarts independent descents (lowest
/// restart index wins ties).
inline ProjectionResult project(const GenerativeDecoder& decoder, const Vector& x, const ProjectionConfig& cfg,
                                std::uint64_t seed, const std::optional<Vector>& warm_start = std::nullopt) {
  cfg.validate();
  require_size(x.size(), decoder.ambient_dim(), "projection target");
  if (cfg.method == ProjectionMethod::exact_linear) return project_exact_linear(decoder, x);
  ProjectionResult best;
  best.residual = std::numeric_limits<double>::infinity();
  for (int i = 0; i < cfg.restarts; ++i) {
    ProjectionResult res = descend(decoder, x, cfg, restart_init(decoder, cfg, seed, i, warm_start));
    if (res.residual < best.residual) {
      res.restart_index = i;
      best = std::move(res);
    }
  }
  return best;
}

}  // namespace genprior
