#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "genprior/common.hpp"
#include "genprior/genmodel.hpp"
#include "genprior/measurement.hpp"
#include "genprior/sensing.hpp"
#include "genprior/solvers.hpp"

namespace genprior {

/// Outcome of an empirical verification.
///
/// worst_margin is the largest observed defect of the checked relation from
/// its ideal form, in the check's own units (for TS-REC |q - d|, for the JLE
/// relative squared-norm distortion, for the W_nu bound the excess over mu1,
/// for deterministic identities the relative mismatch). min_slack is the
/// smallest distance to the violation boundary; negative means violated.
struct CheckReport {
  std::string name;
  int trials = 0;
  int violations = 0;
  int allowed_violations = 0;
  double worst_margin = 0.0;
  double min_slack = std::numeric_limits<double>::infinity();
  std::map<std::string, double> params;
  bool passed = false;

  void record(double defect, double slack) {
    ++trials;
    worst_margin = std::max(worst_margin, defect);
    min_slack = std::min(min_slack, slack);
    if (slack < 0.0) ++violations;
  }
  void finish() { passed = violations <= allowed_violations; }
};

inline double cosine_similarity(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "cosine_similarity: length mismatch");
  const double na = a.norm(), nb = b.norm();
  require(na > 0.0 && nb > 0.0, "cosine_similarity: zero vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

/// Smallest n of the form C * k * log(L r / delta) / eps^2 (eps = 1 drops
/// the factor), rounded up.
inline int calibrated_measurements(double c, int k, double lipschitz, double radius, double delta, double eps = 1.0) {
  return int(std::ceil(c * k * std::log(lipschitz * radius / delta) / (eps * eps)));
}

/// n = C log|E| / eps^2 for a JLE on |E| points, rounded up.
inline int calibrated_jle_measurements(double c, int points, double eps) {
  return int(std::ceil(c * std::log(double(points)) / (eps * eps)));
}

/// Constants for the concentration checks, calibrated once on the k = 8,
/// p = 256, hidden [64] tanh decoder and then frozen.
namespace frozen {
inline constexpr double tsrec_constant = 8.0;
inline constexpr double tsrec_eps = 0.5;
inline constexpr double tsrec_delta = 0.01;
inline constexpr int tsrec_pairs = 1000;
inline constexpr double jle_constant = 8.0;
inline constexpr double jle_eps = 0.3;
inline constexpr int jle_points = 1000;
inline constexpr double wnu_constant = 1.0;
inline constexpr double wnu_nu = 1.0;
inline constexpr double wnu_eps = 0.3;
inline constexpr double wnu_delta = 0.01;
inline constexpr double wnu_slack = 0.05;
inline constexpr int wnu_pairs = 500;
}  // namespace frozen

/// Decoder the frozen constants were calibrated on.
inline DecoderSpec check_decoder_spec(std::uint64_t seed = 11) {
  DecoderSpec s;
  s.seed = seed;
  s.latent_dim = 8;
  s.hidden_dims = {64};
  s.ambient_dim = 256;
  s.latent_radius = 3.0;
  return s;
}

/// (1 - eps) d - delta <= ||A (x1 - x2)|| / sqrt(n) <= (1 + eps) d + delta over
/// range points x_i = G(z_i), z_i uniform in the latent ball.
inline CheckReport tsrec_check(const SensingOperator& op, const GenerativeDecoder& decoder, double eps, double delta,
                               int pairs, std::uint64_t seed) {
  require(eps > 0.0 && eps < 1.0, "tsrec_check: eps must be in (0, 1)");
  require(delta > 0.0, "tsrec_check: delta must be positive");
  require(op.cols() == decoder.ambient_dim(), "tsrec_check: dimension mismatch");
  CheckReport rep;
  rep.name = "tsrec";
  rep.params = {{"eps", eps}, {"delta", delta}, {"n", op.rows()}, {"pairs", pairs}};
  const double inv_sqrt_n = 1.0 / std::sqrt(double(op.rows()));
  for (int i = 0; i < pairs; ++i) {
    const Vector x1 = decoder.forward(decoder.sample_latent(derive_seed(seed, "tsrec.z1", i), 1.0));
    const Vector x2 = decoder.forward(decoder.sample_latent(derive_seed(seed, "tsrec.z2", i), 1.0));
    const Vector diff = x1 - x2;
    const double d = diff.norm();
    const double q = op.apply(diff).norm() * inv_sqrt_n;
    const double slack = std::min(q - ((1.0 - eps) * d - delta), (1.0 + eps) * d + delta - q);
    rep.record(std::abs(q - d), slack);
  }
  rep.finish();
  return rep;
}

/// (1 - eps) ||x||^2 <= ||A x||^2 / n <= (1 + eps) ||x||^2 for every point.
inline CheckReport jle_check(const SensingOperator& op, const std::vector<Vector>& points, double eps) {
  require(eps > 0.0 && eps < 1.0, "jle_check: eps must be in (0, 1)");
  CheckReport rep;
  rep.name = "jle";
  rep.params = {{"eps", eps}, {"n", op.rows()}, {"points", double(points.size())}};
  for (const auto& x : points) {
    const double sq = x.squaredNorm();
    const double q = op.apply(x).squaredNorm() / op.rows();
    const double slack = std::min(q - (1.0 - eps) * sq, (1.0 + eps) * sq - q);
    rep.record(sq > 0.0 ? std::abs(q - sq) / sq : std::abs(q), slack);
  }
  rep.finish();
  return rep;
}

/// Points for jle_check: `count` range points G(z), z uniform in the ball.
inline std::vector<Vector> range_points(const GenerativeDecoder& decoder, int count, std::uint64_t seed) {
  std::vector<Vector> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) pts.push_back(decoder.forward(decoder.sample_latent(derive_seed(seed, "range", i), 1.0)));
  return pts;
}

/// |<(I - (nu/n) A^T A) x1, x2>| <= (mu1 + slack) ||x1|| ||x2|| for differences
/// of range points; slack = 0.05 is the finite-sample allowance.
inline CheckReport wnu_check(const SensingOperator& op, const GenerativeDecoder& decoder, double nu, double eps,
                             int pairs, std::uint64_t seed, double slack_allowance = 0.05) {
  require(eps > 0.0 && eps < 1.0, "wnu_check: eps must be in (0, 1)");
  require(op.cols() == decoder.ambient_dim(), "wnu_check: dimension mismatch");
  const double mu1 = mu1_of(nu, eps);
  CheckReport rep;
  rep.name = "wnu";
  rep.params = {{"nu", nu}, {"eps", eps}, {"mu1", mu1}, {"slack", slack_allowance}, {"n", op.rows()}, {"pairs", pairs}};
  auto range_diff = [&](const char* label, int i) {
    const Vector a = decoder.forward(decoder.sample_latent(derive_seed(seed, label, 2 * i), 1.0));
    const Vector b = decoder.forward(decoder.sample_latent(derive_seed(seed, label, 2 * i + 1), 1.0));
    return Vector(a - b);
  };
  for (int i = 0; i < pairs; ++i) {
    const Vector x1 = range_diff("wnu.x1", i);
    const Vector x2 = range_diff("wnu.x2", i);
    const double scale = x1.norm() * x2.norm();
    if (scale == 0.0) {
      rep.record(0.0, 0.0);
      continue;
    }
    const double inner = x1.dot(x2) - nu / op.rows() * op.apply(x1).dot(op.apply(x2));
    const double stat = std::abs(inner) / scale;
    rep.record(stat - mu1, mu1 + slack_allowance - stat);
  }
  rep.finish();
  return rep;
}

/// x^T A^T A y against (||A(x+y)||^2 - ||A(x-y)||^2) / 4 on random Gaussian
/// pairs, relative tolerance tol measured against ||Ax|| ||Ay||.
inline CheckReport polarization_check(const SensingOperator& op, int pairs, std::uint64_t seed, double tol = 1e-9) {
  CheckReport rep;
  rep.name = "polarization";
  rep.params = {{"tol", tol}, {"pairs", pairs}};
  for (int i = 0; i < pairs; ++i) {
    Rng rng(derive_seed(seed, "polarization", i));
    const Vector x = gaussian_vector(rng, op.cols());
    const Vector y = gaussian_vector(rng, op.cols());
    const Vector ax = op.apply(x), ay = op.apply(y);
    const double direct = ax.dot(ay);
    const double polar = (op.apply(x + y).squaredNorm() - op.apply(x - y).squaredNorm()) / 4.0;
    const double rel = std::abs(direct - polar) / (ax.norm() * ay.norm());
    rep.record(rel, tol - rel);
  }
  rep.finish();
  return rep;
}

struct MvtSandwich {
  double lower = 0.0;   // l ||A x1 - A x2||
  double middle = 0.0;  // ||f(A x1) - f(A x2)||
  double upper = 0.0;   // u ||A x1 - A x2||
};

inline MvtSandwich mvt_sandwich(const SensingOperator& op, const LinkModel& link, const Vector& x1, const Vector& x2) {
  if (!link.differentiable()) throw unsupported_operation("mvt: link is not differentiable");
  const Vector a1 = op.apply(x1), a2 = op.apply(x2);
  const double d = (a1 - a2).norm();
  return {link.deriv_lo() * d, (link.eval(a1) - link.eval(a2)).norm(), link.deriv_hi() * d};
}

/// l ||A(x1 - x2)|| <= ||f(A x1) - f(A x2)|| <= u ||A(x1 - x2)|| with zero
/// tolerance, x1, x2 ~ N(0, I_p).
inline CheckReport mvt_check(const SensingOperator& op, const LinkModel& link, int triples, std::uint64_t seed) {
  CheckReport rep;
  rep.name = "mvt";
  rep.params = {{"l", link.deriv_lo()}, {"u", link.deriv_hi()}, {"triples", triples}};
  for (int i = 0; i < triples; ++i) {
    Rng rng(derive_seed(seed, "mvt", i));
    const Vector x1 = gaussian_vector(rng, op.cols());
    const Vector x2 = gaussian_vector(rng, op.cols());
    const auto s = mvt_sandwich(op, link, x1, x2);
    const double slack = std::min(s.middle - s.lower, s.upper - s.middle);
    rep.record(std::max(0.0, -slack), slack);
  }
  rep.finish();
  return rep;
}

/// Central-difference check of an analytic gradient: relative 2-norm error
/// against (loss(x + h e_i) - loss(x - h e_i)) / 2h at `points` Gaussian x.
template <class Loss, class Grad>
CheckReport gradient_check(std::string name, Index dim, Loss loss, Grad grad, int points, std::uint64_t seed,
                           double tol = 1e-5, double h = 1e-5) {
  CheckReport rep;
  rep.name = std::move(name);
  rep.params = {{"tol", tol}, {"h", h}, {"points", points}};
  for (int i = 0; i < points; ++i) {
    Rng rng(derive_seed(seed, "gradient.point", i));
    Vector x = gaussian_vector(rng, dim);
    const Vector g = grad(x);
    Vector fd(dim);
    for (Index c = 0; c < dim; ++c) {
      const double keep = x[c];
      x[c] = keep + h;
      const double up = loss(x);
      x[c] = keep - h;
      const double down = loss(x);
      x[c] = keep;
      fd[c] = (up - down) / (2.0 * h);
    }
    const double scale = fd.norm();
    const double rel = scale > 0.0 ? (g - fd).norm() / scale : g.norm();
    rep.record(rel, tol - rel);
  }
  rep.finish();
  return rep;
}

/// Per-coordinate check of vjp against central differences of <G(z), v>,
/// z uniform in the ball and v ~ N(0, I). Coordinates whose difference
/// quotient is below 1e-3 of the largest one are measured against that floor.
inline CheckReport vjp_check(const GenerativeDecoder& decoder, int points, std::uint64_t seed, double tol = 1e-4,
                             double h = 1e-5) {
  CheckReport rep;
  rep.name = "vjp";
  rep.params = {{"tol", tol}, {"h", h}, {"points", points}};
  for (int i = 0; i < points; ++i) {
    Vector z = decoder.sample_latent(derive_seed(seed, "vjp.z", i));
    Rng rng(derive_seed(seed, "vjp.v", i));
    const Vector v = gaussian_vector(rng, decoder.ambient_dim());
    const Vector g = decoder.vjp(z, v);
    Vector fd(z.size());
    for (Index c = 0; c < z.size(); ++c) {
      const double keep = z[c];
      z[c] = keep + h;
      const double up = decoder.forward(z).dot(v);
      z[c] = keep - h;
      const double down = decoder.forward(z).dot(v);
      z[c] = keep;
      fd[c] = (up - down) / (2.0 * h);
    }
    const double floor = 1e-3 * fd.lpNorm<Eigen::Infinity>();
    double worst = 0.0;
    for (Index c = 0; c < z.size(); ++c) {
      const double denom = std::max(std::abs(fd[c]), floor);
      worst = std::max(worst, denom > 0.0 ? std::abs(g[c] - fd[c]) / denom : std::abs(g[c]));
    }
    rep.record(worst, tol - worst);
  }
  rep.finish();
  return rep;
}

/// <A x, v> = <x, A^T v> to relative tolerance tol over Gaussian pairs.
inline CheckReport adjoint_check(const SensingOperator& op, int pairs, std::uint64_t seed, double tol = 1e-10) {
  CheckReport rep;
  rep.name = std::string("adjoint.") + to_string(op.kind());
  rep.params = {{"tol", tol}, {"pairs", pairs}, {"n", op.rows()}, {"p", op.cols()}};
  for (int i = 0; i < pairs; ++i) {
    Rng rng(derive_seed(seed, "adjoint", i));
    const Vector x = gaussian_vector(rng, op.cols());
    const Vector v = gaussian_vector(rng, op.rows());
    const Vector ax = op.apply(x);
    const double denom = ax.norm() * v.norm();
    const double rel = denom > 0.0 ? std::abs(ax.dot(v) - x.dot(op.adjoint_apply(v))) / denom : 0.0;
    rep.record(rel, tol - rel);
  }
  rep.finish();
  return rep;
}

struct ContractionFit {
  double slope = 0.0;        // per-iteration slope of log(error)
  double floor_error = 0.0;  // smallest recorded error
};

/// Least-squares slope of log(error_t) against t over the points with
/// error_t > floor.
inline ContractionFit contraction_fit(const Trajectory& traj, double floor) {
  const auto& e = traj.error_to_target;
  if (e.empty()) throw insufficient_data("contraction_fit: trajectory has no error_to_target");
  std::vector<double> ts, ls;
  for (std::size_t t = 0; t < e.size(); ++t) {
    if (e[t] > floor) {
      ts.push_back(double(t));
      ls.push_back(std::log(e[t]));
    }
  }
  if (ts.size() < 3) throw insufficient_data("contraction_fit: fewer than 3 points above the floor");
  const double n = double(ts.size());
  double mt = 0.0, ml = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    ml += ls[i];
  }
  mt /= n;
  ml /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sxy += (ts[i] - mt) * (ls[i] - ml);
    sxx += (ts[i] - mt) * (ts[i] - mt);
  }
  return {sxy / sxx, *std::min_element(e.begin(), e.end())};
}

/// Linear-interpolated quantile (type 7) of unsorted data.
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw insufficient_data("quantile: no values");
  std::sort(values.begin(), values.end());
  const double pos = q * double(values.size() - 1);
  const auto lo = std::size_t(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - double(lo)) * (values[hi] - values[lo]);
}

inline double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

}  // namespace genprior
