#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "genprior/common.hpp"
#include "genprior/genmodel.hpp"
#include "genprior/sensing.hpp"

namespace genprior {

enum class LinkKind { linear, shifted_cosine, sign_dithered, custom_monotone };

inline const char* to_string(LinkKind k) {
  switch (k) {
    case LinkKind::linear: return "linear";
    case LinkKind::shifted_cosine: return "shifted_cosine";
    case LinkKind::sign_dithered: return "sign_dithered";
    case LinkKind::custom_monotone: return "custom_monotone";
  }
  return "?";
}

/// Probabilists' Gauss-Hermite rule: sum_i w_i h(x_i) ~ E[h(g)], g ~ N(0,1).
/// Golub-Welsch on the Jacobi matrix with off-diagonal sqrt(i).
struct QuadratureRule {
  Vector nodes;
  Vector weights;
};

inline QuadratureRule gauss_hermite_rule(int order) {
  require(order >= 1, "gauss_hermite_rule: order must be positive");
  Matrix jacobi = Matrix::Zero(order, order);
  for (int i = 1; i < order; ++i) jacobi(i, i - 1) = jacobi(i - 1, i) = std::sqrt(double(i));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(jacobi);
  QuadratureRule rule{eig.eigenvalues(), eig.eigenvectors().row(0).transpose().array().square().matrix()};
  return rule;
}

inline const QuadratureRule& gauss_hermite_200() {
  static const QuadratureRule rule = gauss_hermite_rule(200);
  return rule;
}

struct MuEstimate {
  double value = 0.0;
  double std_error = 0.0;  // zero for quadrature
};

/// A link function f with its derivative window [l, u], additive noise level
/// sigma (known-link model) and adversarial budget tau.
class LinkModel {
 public:
  using Scalar = std::function<double(double)>;

  static LinkModel linear() { return LinkModel(LinkKind::linear, 1.0, 1.0); }

  /// f(x) = 2x + 0.5 cos x, f' = 2 - 0.5 sin x in [1.5, 2.5].
  static LinkModel shifted_cosine() { return LinkModel(LinkKind::shifted_cosine, 1.5, 2.5); }

  /// f(x) = sign(x + e), e ~ N(0, sigma_d^2) drawn per sample.
  static LinkModel sign_dithered(double sigma_d) {
    require(sigma_d >= 0.0, "link: sigma_d must be nonnegative");
    LinkModel m(LinkKind::sign_dithered, 0.0, 0.0);
    m.sigma_d_ = sigma_d;
    return m;
  }

  /// User-supplied monotone link; f' is checked against [l, u] on a grid of
  /// 10^4 points in [-10, 10].
  static LinkModel custom_monotone(Scalar f, Scalar fprime, double l, double u) {
    require(l > 0.0 && u >= l, "link: custom_monotone needs u >= l > 0");
    require(bool(f) && bool(fprime), "link: custom_monotone needs f and f'");
    for (int i = 0; i < 10000; ++i) {
      const double t = -10.0 + 20.0 * i / 9999.0;
      const double d = fprime(t);
      require(d >= l && d <= u, "link: custom_monotone derivative leaves [l, u] at t = " + std::to_string(t));
    }
    LinkModel m(LinkKind::custom_monotone, l, u);
    m.f_ = std::move(f);
    m.fprime_ = std::move(fprime);
    return m;
  }

  LinkModel with_noise(double sigma) const {
    require(sigma >= 0.0, "link: noise sigma must be nonnegative");
    LinkModel m = *this;
    m.sigma_ = sigma;
    return m;
  }

  LinkModel with_tau(double tau) const {
    require(tau >= 0.0, "link: tau must be nonnegative");
    LinkModel m = *this;
    m.tau_ = tau;
    return m;
  }

  LinkKind kind() const { return kind_; }
  bool differentiable() const { return kind_ != LinkKind::sign_dithered; }
  double deriv_lo() const { return l_; }
  double deriv_hi() const { return u_; }
  double sigma_d() const { return sigma_d_; }
  double noise_sigma() const { return sigma_; }
  double tau() const { return tau_; }

  /// f(t). Randomized links draw their dither from rng, which must be given.
  double eval(double t, Rng* rng = nullptr) const {
    switch (kind_) {
      case LinkKind::linear: return t;
      case LinkKind::shifted_cosine: return 2.0 * t + 0.5 * std::cos(t);
      case LinkKind::custom_monotone: return f_(t);
      case LinkKind::sign_dithered: {
        require(rng != nullptr, "link: sign_dithered evaluation needs a random stream");
        std::normal_distribution<double> dither(0.0, sigma_d_);
        const double e = sigma_d_ > 0.0 ? dither(*rng) : 0.0;
        return (t + e) >= 0.0 ? 1.0 : -1.0;
      }
    }
    return t;
  }

  double deriv(double t) const {
    switch (kind_) {
      case LinkKind::linear: return 1.0;
      case LinkKind::shifted_cosine: return 2.0 - 0.5 * std::sin(t);
      case LinkKind::custom_monotone: return fprime_(t);
      case LinkKind::sign_dithered: break;
    }
    throw unsupported_operation("link: sign_dithered has no derivative; PGD-NLasso is inapplicable");
  }

  /// Elementwise f for deterministic links.
  Vector eval(const Vector& t) const {
    if (kind_ == LinkKind::linear) return t;
    Vector out(t.size());
    for (Index i = 0; i < t.size(); ++i) out[i] = eval(t[i]);
    return out;
  }

  Vector deriv(const Vector& t) const {
    if (kind_ == LinkKind::linear) return Vector::Ones(t.size());
    Vector out(t.size());
    for (Index i = 0; i < t.size(); ++i) out[i] = deriv(t[i]);
    return out;
  }

  /// mu = E[f(g) g]; cached after first evaluation.
  MuEstimate mu() const {
    std::call_once(cache_->once, [this] { cache_->mu = compute_mu(); });
    return cache_->mu;
  }

 private:
  LinkModel(LinkKind kind, double l, double u) : kind_(kind), l_(l), u_(u) {}

  MuEstimate compute_mu() const {
    if (kind_ == LinkKind::sign_dithered) {
      constexpr int kSamples = 1000000;
      Rng rng(derive_seed(0x6d75ULL, "link.mu.sign"));
      std::normal_distribution<double> normal(0.0, 1.0);
      double sum = 0.0, sum_sq = 0.0;
      for (int i = 0; i < kSamples; ++i) {
        const double g = normal(rng);
        const double v = eval(g, &rng) * g;
        sum += v;
        sum_sq += v * v;
      }
      const double mean = sum / kSamples;
      const double var = (sum_sq / kSamples - mean * mean) * kSamples / (kSamples - 1.0);
      return {mean, std::sqrt(var / kSamples)};
    }
    const auto& rule = gauss_hermite_200();
    double acc = 0.0;
    for (Index i = 0; i < rule.nodes.size(); ++i) {
      const double g = rule.nodes[i];
      if (rule.weights[i] == 0.0) continue;
      acc += rule.weights[i] * eval(g) * g;
    }
    return {acc, 0.0};
  }

  struct Cache {
    std::once_flag once;
    MuEstimate mu;
  };

  LinkKind kind_;
  double l_ = 0.0;
  double u_ = 0.0;
  double sigma_d_ = 0.0;
  double sigma_ = 0.0;
  double tau_ = 0.0;
  Scalar f_;
  Scalar fprime_;
  // shared so copies made by with_noise/with_tau reuse one evaluation
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

inline double link_eval(const LinkModel& link, double t, std::optional<std::uint64_t> seed = std::nullopt) {
  if (link.kind() == LinkKind::sign_dithered) {
    require(seed.has_value(), "link_eval: sign_dithered requires a seed");
    Rng rng(*seed);
    return link.eval(t, &rng);
  }
  return link.eval(t);
}

inline double link_deriv(const LinkModel& link, double t) { return link.deriv(t); }

inline MuEstimate mu_of_link(const LinkModel& link) { return link.mu(); }

/// Empirical sub-Gaussian norm of f(g): max over q = 1..10 of
/// q^{-1/2} (mean |f(g)|^q)^{1/q}. Diagnostic only.
inline double psi_estimate(const LinkModel& link, int samples, std::uint64_t seed) {
  require(samples >= 10000, "psi_estimate: at least 10^4 samples required");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::array<double, 10> moments{};
  for (int i = 0; i < samples; ++i) {
    const double g = normal(rng);
    const double a = std::abs(link.eval(g, &rng));
    double power = 1.0;
    for (int q = 0; q < 10; ++q) {
      power *= a;
      moments[q] += power;
    }
  }
  double best = 0.0;
  for (int q = 1; q <= 10; ++q)
    best = std::max(best, std::pow(moments[q - 1] / samples, 1.0 / q) / std::sqrt(double(q)));
  return best;
}

struct Observation {
  Vector y_tilde;
  Vector y_clean;
  Vector x_star;
  std::optional<Vector> z_star;
  std::uint64_t seed = 0;
  std::uint64_t link_seed = 0;
  std::uint64_t noise_seed = 0;
  std::uint64_t corruption_seed = 0;
  double tau_used = 0.0;
};

/// Adds a perturbation of norm exactly tau * sqrt(n) in a uniformly random
/// direction. tau = 0 returns y unchanged.
inline Vector corrupt(const Vector& y, double tau, std::uint64_t seed) {
  require(tau >= 0.0, "corrupt: tau must be nonnegative");
  if (tau == 0.0 || y.size() == 0) return y;
  Rng rng(seed);
  const Vector direction = random_unit_vector(rng, y.size());
  return y + (tau * std::sqrt(double(y.size()))) * direction;
}

/// Single index model: y_i = f_i(a_i^T x*) with i.i.d. link randomness.
inline Observation observe_sim(const LinkModel& link, const SensingOperator& op, const Vector& x_star,
                               std::uint64_t seed) {
  require_size(x_star.size(), op.cols(), "observe_sim signal");
  require(std::abs(x_star.norm() - 1.0) <= 1e-9, "observe_sim: x_star must have unit norm");
  Observation obs;
  obs.seed = seed;
  obs.link_seed = derive_seed(seed, "observe.link");
  obs.corruption_seed = derive_seed(seed, "observe.corrupt");
  obs.x_star = x_star;
  const Vector t = op.apply(x_star);
  obs.y_clean.resize(t.size());
  Rng rng(obs.link_seed);
  for (Index i = 0; i < t.size(); ++i) obs.y_clean[i] = link.eval(t[i], &rng);
  obs.y_tilde = corrupt(obs.y_clean, link.tau(), obs.corruption_seed);
  obs.tau_used = link.tau();
  return obs;
}

/// Known-link model: y_i = f(a_i^T x*) + eta_i, eta_i ~ N(0, sigma^2).
inline Observation observe_known(const LinkModel& link, const SensingOperator& op, const Vector& x_star,
                                 std::uint64_t seed) {
  if (!link.differentiable())
    throw unsupported_operation("observe_known: sign_dithered link is not a known differentiable link");
  require_size(x_star.size(), op.cols(), "observe_known signal");
  Observation obs;
  obs.seed = seed;
  obs.noise_seed = derive_seed(seed, "observe.noise");
  obs.corruption_seed = derive_seed(seed, "observe.corrupt");
  obs.x_star = x_star;
  obs.y_clean = link.eval(op.apply(x_star));
  if (link.noise_sigma() > 0.0) {
    Rng rng(obs.noise_seed);
    obs.y_clean += gaussian_vector(rng, obs.y_clean.size(), link.noise_sigma());
  }
  obs.y_tilde = corrupt(obs.y_clean, link.tau(), obs.corruption_seed);
  obs.tau_used = link.tau();
  return obs;
}

/// Ground truth for the unknown-link model: ||x*|| = 1 and mu x* = G(z*).
/// z* lies on a random ray, at the radius where ||G(z*)|| = |mu| (bisection).
/// Throws if no ray within the 0.9 r ball reaches that norm.
struct PlantedSignal {
  Vector x_star;
  std::optional<Vector> z_star;
};

inline PlantedSignal plant_sim_signal(const GenerativeDecoder& decoder, double mu, std::uint64_t seed) {
  require(mu != 0.0, "plant_sim_signal: mu must be nonzero");
  const double target = std::abs(mu);
  const double s_max = 0.9 * decoder.latent_radius();
  for (int attempt = 0; attempt < 64; ++attempt) {
    Rng rng(derive_seed(seed, "plant.sim.direction", attempt));
    const Vector u = random_unit_vector(rng, decoder.latent_dim());
    const double base = decoder.forward(Vector::Zero(decoder.latent_dim())).norm();
    if (base > target || decoder.forward(s_max * u).norm() < target) continue;
    double lo = 0.0, hi = s_max;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * s_max; ++it) {
      const double mid = 0.5 * (lo + hi);
      (decoder.forward(mid * u).norm() < target ? lo : hi) = mid;
    }
    Vector z = hi * u;
    Vector g = decoder.forward(z);
    return {g / g.norm() * (mu > 0 ? 1.0 : -1.0), std::move(z)};
  }
  throw std::invalid_argument("plant_sim_signal: decoder range never reaches norm |mu| inside the ball");
}

/// Ground truth for the known-link model: x* = G(z*) plus an optional
/// representation error of the given norm along a random direction.
inline PlantedSignal plant_known_signal(const GenerativeDecoder& decoder, std::uint64_t seed,
                                        double representation_error = 0.0) {
  require(representation_error >= 0.0, "plant_known_signal: representation_error must be nonnegative");
  Vector z = decoder.sample_latent(derive_seed(seed, "plant.known.latent"));
  Vector x = decoder.forward(z);
  if (representation_error == 0.0) return {std::move(x), std::move(z)};
  Rng rng(derive_seed(seed, "plant.known.offset"));
  x += representation_error * random_unit_vector(rng, x.size());
  return {std::move(x), std::nullopt};
}

}  // namespace genprior
