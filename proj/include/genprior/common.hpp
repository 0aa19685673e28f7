#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace genprior {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

/// Raised when an operation is well-formed but not defined for the given
/// model, e.g. the derivative of a sign link.
class unsupported_operation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when a statistic cannot be formed from too few samples.
class insufficient_data : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

inline void require_size(Index actual, Index expected, const char* what) {
  if (actual != expected) {
    throw std::invalid_argument(std::string(what) + ": expected length " + std::to_string(expected) +
                                ", got " + std::to_string(actual));
  }
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed splitting rule: seed = mix(mix(master ^ fnv1a(label)) ^ index).
/// Every random stream in the library is derived through this function so a
/// single master seed reproduces a whole experiment.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(master ^ h) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline Vector gaussian_vector(Rng& rng, Index size, double stddev = 1.0) {
  std::normal_distribution<double> normal(0.0, stddev);
  Vector v(size);
  for (Index i = 0; i < size; ++i) v[i] = normal(rng);
  return v;
}

inline Vector random_unit_vector(Rng& rng, Index size) {
  Vector v = gaussian_vector(rng, size);
  double norm = v.norm();
  while (norm == 0.0) {
    v = gaussian_vector(rng, size);
    norm = v.norm();
  }
  return v / norm;
}

/// Radially rescales z into the closed ball of the given radius. Returns true
/// when z was outside.
inline bool clip_to_ball(Vector& z, double radius) {
  const double norm = z.norm();
  if (norm > radius) {
    z *= radius / norm;
    return true;
  }
  return false;
}

inline Vector clipped_to_ball(Vector z, double radius) {
  clip_to_ball(z, radius);
  return z;
}

}  // namespace genprior
