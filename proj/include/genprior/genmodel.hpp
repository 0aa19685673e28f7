#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "genprior/common.hpp"

namespace genprior {

enum class Activation { tanh, relu, identity };

/// How layer weights are drawn from the seed.
///  - gaussian:    i.i.d. N(0, (scale / sqrt(fan_in))^2)
///  - orthonormal: scale * Q where Q has orthonormal columns (thin QR of a
///                 Gaussian matrix); requires d_out >= d_in
///  - identity:    scale * [I; 0]; requires d_out >= d_in
enum class WeightInit { gaussian, orthonormal, identity };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
  }
  return "?";
}

inline const char* to_string(WeightInit w) {
  switch (w) {
    case WeightInit::gaussian: return "gaussian";
    case WeightInit::orthonormal: return "orthonormal";
    case WeightInit::identity: return "identity";
  }
  return "?";
}

struct DecoderSpec {
  std::uint64_t seed = 0;
  int latent_dim = 20;
  std::vector<int> hidden_dims;
  int ambient_dim = 784;
  double latent_radius = 3.0;
  Activation activation = Activation::tanh;
  double weight_scale = 1.0;
  WeightInit init = WeightInit::gaussian;

  std::vector<int> layer_dims() const {
    std::vector<int> dims{latent_dim};
    dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
    dims.push_back(ambient_dim);
    return dims;
  }

  bool operator==(const DecoderSpec&) const = default;
};

struct Layer {
  Matrix weight;  // d_out x d_in
  Vector bias;    // d_out
};

/// Largest singular value of W by power iteration on W^T W. Stops once the
/// eigen-residual ||W^T W v - rho v|| drops below rel_tol * rho.
inline double spectral_norm(const Matrix& w, double rel_tol = 1e-8, int max_iter = 100000) {
  if (w.size() == 0) return 0.0;
  Rng rng(0x5eed5eedULL);
  Vector v = random_unit_vector(rng, w.cols());
  double rho = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const Vector wv = w * v;
    const Vector mv = w.transpose() * wv;
    rho = wv.squaredNorm();
    const double mnorm = mv.norm();
    if (mnorm == 0.0) return 0.0;
    if ((mv - rho * v).norm() <= rel_tol * rho) break;
    v = mv / mnorm;
  }
  return std::sqrt(rho);
}

struct ForwardDiagnostics {
  Vector x;
  bool out_of_ball = false;
};

/// Fixed-weight feed-forward decoder G : B_2^k(r) -> R^p. The activation is
/// applied after every layer except the last. Immutable after construction.
class GenerativeDecoder {
 public:
  static GenerativeDecoder create(const DecoderSpec& spec) {
    require(spec.latent_dim >= 1, "decoder: latent_dim must be positive");
    require(spec.ambient_dim >= 1, "decoder: ambient_dim must be positive");
    require(spec.ambient_dim >= spec.latent_dim, "decoder: ambient_dim must be >= latent_dim");
    require(spec.latent_radius > 0.0, "decoder: latent_radius must be positive");
    require(spec.weight_scale > 0.0, "decoder: weight_scale must be positive");
    for (int h : spec.hidden_dims) require(h >= 1, "decoder: hidden dimensions must be positive");

    const auto dims = spec.layer_dims();
    std::vector<Layer> layers;
    layers.reserve(dims.size() - 1);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
      const int d_in = dims[i];
      const int d_out = dims[i + 1];
      Rng rng(derive_seed(spec.seed, "decoder.layer", i));
      Layer layer{Matrix(d_out, d_in), Vector::Zero(d_out)};
      switch (spec.init) {
        case WeightInit::gaussian: {
          std::normal_distribution<double> normal(0.0, spec.weight_scale / std::sqrt(double(d_in)));
          for (int r = 0; r < d_out; ++r)
            for (int c = 0; c < d_in; ++c) layer.weight(r, c) = normal(rng);
          break;
        }
        case WeightInit::orthonormal: {
          require(d_out >= d_in, "decoder: orthonormal init needs d_out >= d_in");
          Matrix g(d_out, d_in);
          std::normal_distribution<double> normal(0.0, 1.0);
          for (int r = 0; r < d_out; ++r)
            for (int c = 0; c < d_in; ++c) g(r, c) = normal(rng);
          Eigen::HouseholderQR<Matrix> qr(g);
          layer.weight = spec.weight_scale * (qr.householderQ() * Matrix::Identity(d_out, d_in));
          break;
        }
        case WeightInit::identity:
          require(d_out >= d_in, "decoder: identity init needs d_out >= d_in");
          layer.weight = spec.weight_scale * Matrix::Identity(d_out, d_in);
          break;
      }
      layers.push_back(std::move(layer));
    }
    GenerativeDecoder d(std::move(layers), spec.latent_radius, spec.activation);
    d.spec_ = spec;
    return d;
  }

  /// Decoder from explicit weights; it carries no spec and cannot be
  /// serialized.
  static GenerativeDecoder from_layers(std::vector<Layer> layers, double latent_radius, Activation activation) {
    require(!layers.empty(), "decoder: at least one layer required");
    require(latent_radius > 0.0, "decoder: latent_radius must be positive");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      require(layers[i].weight.rows() == layers[i].bias.size(), "decoder: bias length must match layer output");
      require(layers[i].weight.rows() >= 1 && layers[i].weight.cols() >= 1, "decoder: empty layer");
      if (i > 0) require(layers[i].weight.cols() == layers[i - 1].weight.rows(), "decoder: layer dimensions do not compose");
    }
    return GenerativeDecoder(std::move(layers), latent_radius, activation);
  }

  int latent_dim() const { return int(layers_.front().weight.cols()); }
  int ambient_dim() const { return int(layers_.back().weight.rows()); }
  double latent_radius() const { return radius_; }
  Activation activation() const { return activation_; }
  double lipschitz_bound() const { return lipschitz_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const std::optional<DecoderSpec>& spec() const { return spec_; }

  Vector forward(const Vector& z) const { return forward_with_diagnostics(z).x; }

  ForwardDiagnostics forward_with_diagnostics(const Vector& z) const {
    require_size(z.size(), latent_dim(), "decoder forward");
    Vector h = z;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      Vector pre = layers_[i].weight * h + layers_[i].bias;
      h = (i + 1 < layers_.size()) ? activate(pre) : std::move(pre);
    }
    return {std::move(h), z.norm() > radius_};
  }

  /// Gradient of <G(z), v> with respect to z, by reverse accumulation.
  Vector vjp(const Vector& z, const Vector& v) const {
    require_size(z.size(), latent_dim(), "decoder vjp (latent)");
    require_size(v.size(), ambient_dim(), "decoder vjp (ambient)");
    const std::size_t depth = layers_.size();
    std::vector<Vector> pre(depth);
    Vector h = z;
    for (std::size_t i = 0; i < depth; ++i) {
      pre[i] = layers_[i].weight * h + layers_[i].bias;
      if (i + 1 < depth) h = activate(pre[i]);
    }
    Vector g = v;
    for (std::size_t i = depth; i-- > 0;) {
      if (i + 1 < depth) g = g.cwiseProduct(activation_derivative(pre[i]));
      g = layers_[i].weight.transpose() * g;
    }
    return g;
  }

  /// Single identity-activation layer, zero bias, W^T W = I.
  bool is_linear_orthonormal(double tol = 1e-10) const {
    if (layers_.size() != 1) return false;
    const auto& w = layers_.front().weight;
    if (layers_.front().bias.lpNorm<Eigen::Infinity>() != 0.0) return false;
    const Matrix gram = w.transpose() * w;
    return (gram - Matrix::Identity(gram.rows(), gram.cols())).lpNorm<Eigen::Infinity>() <= tol;
  }

  /// Uniform draw from the ball of radius inset * r.
  Vector sample_latent(std::uint64_t seed, double inset = 0.9) const {
    Rng rng(seed);
    const int k = latent_dim();
    Vector direction = random_unit_vector(rng, k);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double radius = inset * radius_ * std::pow(unif(rng), 1.0 / k);
    return radius * direction;
  }

 private:
  GenerativeDecoder(std::vector<Layer> layers, double radius, Activation activation)
      : layers_(std::move(layers)), radius_(radius), activation_(activation) {
    lipschitz_ = 1.0;
    for (const auto& layer : layers_) lipschitz_ *= spectral_norm(layer.weight);
  }

  Vector activate(const Vector& pre) const {
    switch (activation_) {
      case Activation::tanh: return pre.array().tanh().matrix();
      case Activation::relu: return pre.cwiseMax(0.0);
      case Activation::identity: return pre;
    }
    return pre;
  }

  // relu convention: derivative 0 at 0
  Vector activation_derivative(const Vector& pre) const {
    switch (activation_) {
      case Activation::tanh: return (1.0 - pre.array().tanh().square()).matrix();
      case Activation::relu: return (pre.array() > 0.0).cast<double>().matrix();
      case Activation::identity: return Vector::Ones(pre.size());
    }
    return Vector::Ones(pre.size());
  }

  std::vector<Layer> layers_;
  double radius_;
  Activation activation_;
  double lipschitz_ = 1.0;
  std::optional<DecoderSpec> spec_;
};

inline double lipschitz_bound(const GenerativeDecoder& decoder) { return decoder.lipschitz_bound(); }

/// Decoder resembling the MNIST VAE scale (k = 20, p = 784).
inline DecoderSpec mnist_scale_decoder_spec(std::uint64_t seed = 7) {
  DecoderSpec spec;
  spec.seed = seed;
  spec.latent_dim = 20;
  spec.hidden_dims = {500, 500};
  spec.ambient_dim = 784;
  spec.latent_radius = 3.0;
  return spec;
}

}  // namespace genprior
