#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "genprior/common.hpp"

namespace genprior {

enum class SensingKind { dense_gaussian, partial_circulant };

inline const char* to_string(SensingKind k) {
  return k == SensingKind::dense_gaussian ? "dense_gaussian" : "partial_circulant";
}

struct SensingSpec {
  SensingKind kind = SensingKind::dense_gaussian;
  int n = 100;
  int p = 784;
  std::uint64_t seed = 0;

  bool operator==(const SensingSpec&) const = default;
};

/// Random measurement operator A in R^{n x p}. Stores the unnormalized A;
/// the 1/n and 1/sqrt(n) factors belong to the call sites.
///
/// partial_circulant realizes (Ax)_j = (circ(g) (xi .* x))_{omega[j]} where
/// circ(g) is cyclic convolution with the generator g, xi are random signs and
/// omega is a sorted row subset drawn uniformly without replacement.
class SensingOperator {
 public:
  static constexpr double kMaterializeLimit = 1e7;

  static SensingOperator create(const SensingSpec& spec) {
    require(spec.n >= 1 && spec.p >= 1, "sensing: n and p must be positive");
    SensingOperator op;
    op.spec_ = spec;
    if (spec.kind == SensingKind::dense_gaussian) {
      Rng rng(derive_seed(spec.seed, "sensing.dense"));
      std::normal_distribution<double> normal(0.0, 1.0);
      op.dense_.resize(spec.n, spec.p);
      for (int r = 0; r < spec.n; ++r)
        for (int c = 0; c < spec.p; ++c) op.dense_(r, c) = normal(rng);
      return op;
    }
    require(spec.n <= spec.p, "sensing: partial_circulant needs n <= p");
    Rng g_rng(derive_seed(spec.seed, "sensing.circulant.generator"));
    Rng s_rng(derive_seed(spec.seed, "sensing.circulant.signs"));
    Rng o_rng(derive_seed(spec.seed, "sensing.circulant.rows"));
    Vector g = gaussian_vector(g_rng, spec.p);
    Vector xi(spec.p);
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < spec.p; ++i) xi[i] = coin(s_rng) ? 1.0 : -1.0;
    std::vector<int> rows(spec.p);
    std::iota(rows.begin(), rows.end(), 0);
    // partial Fisher-Yates: first n entries are a uniform n-subset
    for (int i = 0; i < spec.n; ++i) {
      std::uniform_int_distribution<int> pick(i, spec.p - 1);
      std::swap(rows[i], rows[pick(o_rng)]);
    }
    rows.resize(spec.n);
    std::sort(rows.begin(), rows.end());
    op.set_circulant(std::move(g), std::move(xi), std::move(rows));
    return op;
  }

  static SensingOperator from_dense(Matrix a) {
    require(a.rows() >= 1 && a.cols() >= 1, "sensing: empty matrix");
    SensingOperator op;
    op.spec_ = {SensingKind::dense_gaussian, int(a.rows()), int(a.cols()), 0};
    op.dense_ = std::move(a);
    op.explicit_payload_ = true;
    return op;
  }

  static SensingOperator from_circulant(Vector generator, Vector signs, std::vector<int> rows) {
    const auto p = generator.size();
    require(p >= 1, "sensing: empty generator");
    require_size(signs.size(), p, "sensing signs");
    require(!rows.empty() && Index(rows.size()) <= p, "sensing: row set size must be in [1, p]");
    std::sort(rows.begin(), rows.end());
    require(std::adjacent_find(rows.begin(), rows.end()) == rows.end(), "sensing: row indices must be distinct");
    require(rows.front() >= 0 && rows.back() < p, "sensing: row index out of range");
    SensingOperator op;
    op.spec_ = {SensingKind::partial_circulant, int(rows.size()), int(p), 0};
    op.explicit_payload_ = true;
    op.set_circulant(std::move(generator), std::move(signs), std::move(rows));
    return op;
  }

  SensingKind kind() const { return spec_.kind; }
  int rows() const { return spec_.n; }
  int cols() const { return spec_.p; }
  const SensingSpec& spec() const { return spec_; }
  /// False for operators built from explicit payloads (not reproducible from spec).
  bool from_spec() const { return !explicit_payload_; }

  const Matrix& dense_payload() const { return dense_; }
  const Vector& generator() const { return generator_; }
  const Vector& signs() const { return signs_; }
  const std::vector<int>& row_indices() const { return rows_; }

  Vector apply(const Vector& x) const {
    require_size(x.size(), spec_.p, "sensing apply");
    if (spec_.kind == SensingKind::dense_gaussian) return dense_ * x;
    const Vector full = cyclic_convolve(signs_.cwiseProduct(x), false);
    Vector out(spec_.n);
    for (int j = 0; j < spec_.n; ++j) out[j] = full[rows_[j]];
    return out;
  }

  Vector adjoint_apply(const Vector& v) const {
    require_size(v.size(), spec_.n, "sensing adjoint_apply");
    if (spec_.kind == SensingKind::dense_gaussian) return dense_.transpose() * v;
    Vector filled = Vector::Zero(spec_.p);
    for (int j = 0; j < spec_.n; ++j) filled[rows_[j]] = v[j];
    return signs_.cwiseProduct(cyclic_convolve(filled, true));
  }

  /// Dense copy; column j equals apply(e_j). Refuses beyond 10^7 entries.
  Matrix materialize() const {
    if (double(spec_.n) * double(spec_.p) > kMaterializeLimit)
      throw std::length_error("sensing: materialize refused, n*p exceeds 1e7");
    if (spec_.kind == SensingKind::dense_gaussian) return dense_;
    Matrix a(spec_.n, spec_.p);
    for (int j = 0; j < spec_.p; ++j) a.col(j) = apply(Vector::Unit(spec_.p, j));
    return a;
  }

  /// ||A||_{2->2} by power iteration on A^T A.
  double spectral_norm_estimate(double tol = 1e-8, int max_iter = 100000) const {
    Rng rng(0x5eed5eedULL);
    Vector v = random_unit_vector(rng, spec_.p);
    double rho = 0.0;
    for (int it = 0; it < max_iter; ++it) {
      const Vector av = apply(v);
      const Vector mv = adjoint_apply(av);
      rho = av.squaredNorm();
      const double mnorm = mv.norm();
      if (mnorm == 0.0) return 0.0;
      if ((mv - rho * v).norm() <= tol * rho) break;
      v = mv / mnorm;
    }
    return std::sqrt(rho);
  }

 private:
  void set_circulant(Vector g, Vector xi, std::vector<int> rows) {
    generator_ = std::move(g);
    signs_ = std::move(xi);
    rows_ = std::move(rows);
    if (generator_.size() == 1) return;  // kissfft does not handle length 1
    Eigen::FFT<double> fft;
    std::vector<double> gin(generator_.data(), generator_.data() + generator_.size());
    fft.fwd(generator_spectrum_, gin);
  }

  // circ(g) w, or circ(g)^T w (cyclic correlation) when transpose is set.
  Vector cyclic_convolve(const Vector& w, bool transpose) const {
    if (w.size() == 1) return generator_[0] * w;
    Eigen::FFT<double> fft;
    std::vector<double> in(w.data(), w.data() + w.size());
    std::vector<std::complex<double>> spectrum;
    fft.fwd(spectrum, in);
    for (std::size_t i = 0; i < spectrum.size(); ++i)
      spectrum[i] *= transpose ? std::conj(generator_spectrum_[i]) : generator_spectrum_[i];
    std::vector<double> out;
    fft.inv(out, spectrum);
    return Eigen::Map<const Vector>(out.data(), Index(out.size()));
  }

  SensingSpec spec_;
  bool explicit_payload_ = false;
  Matrix dense_;
  Vector generator_;
  Vector signs_;
  std::vector<int> rows_;
  std::vector<std::complex<double>> generator_spectrum_;
};

inline Vector apply(const SensingOperator& op, const Vector& x) { return op.apply(x); }
inline Vector adjoint_apply(const SensingOperator& op, const Vector& v) { return op.adjoint_apply(v); }
inline Matrix materialize(const SensingOperator& op) { return op.materialize(); }
inline double spectral_norm_estimate(const SensingOperator& op, double tol = 1e-8) {
  return op.spectral_norm_estimate(tol);
}

}  // namespace genprior
