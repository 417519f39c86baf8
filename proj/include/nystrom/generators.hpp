#pragma once

#include <cmath>
#include <numbers>

#include "nystrom/common.hpp"
#include "nystrom/dataset.hpp"

namespace nystrom {

// Synthetic datasets for the benchmark harness. All generators are
// deterministic per seed.

/// Two interlocking moons in R^2: the upper unit half-circle at the origin and
/// the lower half-circle centered at (1, 0.5), angles evenly spaced, plus
/// isotropic Gaussian noise of the given standard deviation. Class sizes
/// differ by at most one.
inline Dataset two_moons(Index n, double noise, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("two_moons: need n >= 2");
  if (!(noise >= 0.0)) throw std::invalid_argument("two_moons: noise must be >= 0");

  const Index n1 = (n + 1) / 2;
  const Index n2 = n - n1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Matrix points(2, n);
  auto angle = [](Index i, Index count) {
    return count > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(count - 1)
                     : 0.0;
  };
  for (Index i = 0; i < n1; ++i) {
    const double theta = angle(i, n1);
    points(0, i) = std::cos(theta);
    points(1, i) = std::sin(theta);
  }
  for (Index i = 0; i < n2; ++i) {
    const double theta = angle(i, n2);
    points(0, n1 + i) = 1.0 - std::cos(theta);
    points(1, n1 + i) = 0.5 - std::sin(theta);
  }
  if (noise > 0.0) {
    for (Index i = 0; i < n; ++i) {
      points(0, i) += noise * gauss(rng);
      points(1, i) += noise * gauss(rng);
    }
  }
  return Dataset(std::move(points));
}

/// Gaussian clusters N(v, sigma2 I) around every vertex v of the {0,1}^dim
/// cube, per_vertex points each; 2^dim * per_vertex points total.
inline Dataset borg(Index dim, Index per_vertex, double sigma2, std::uint64_t seed) {
  if (dim < 1 || dim > 20) throw std::invalid_argument("borg: need 1 <= dim <= 20");
  if (per_vertex < 1) throw std::invalid_argument("borg: per_vertex must be >= 1");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("borg: sigma2 must be >= 0");
  const std::uint64_t vertices = std::uint64_t{1} << dim;
  const std::uint64_t total = vertices * static_cast<std::uint64_t>(per_vertex);
  if (total > (std::uint64_t{1} << 31)) {
    throw std::invalid_argument("borg: point count overflows the supported range");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(sigma2));

  Matrix points(dim, static_cast<Index>(total));
  Index col = 0;
  for (std::uint64_t v = 0; v < vertices; ++v) {
    for (Index rep = 0; rep < per_vertex; ++rep, ++col) {
      for (Index j = 0; j < dim; ++j) {
        const double coord = static_cast<double>((v >> j) & 1u);
        points(j, col) = sigma2 > 0.0 ? coord + gauss(rng) : coord;
      }
    }
  }
  return Dataset(std::move(points));
}

/// n1 points of a 2D standard Gaussian at the origin embedded in R^3 (third
/// coordinate exactly zero) plus n2 points of a 3D standard Gaussian at
/// (0,0,1); the Gram matrix of the union has rank 3 almost surely.
inline Dataset gauss_rank3(Index n1, Index n2, std::uint64_t seed) {
  if (n1 < 1 || n2 < 0) throw std::invalid_argument("gauss_rank3: need n1 >= 1, n2 >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Matrix points(3, n1 + n2);
  for (Index i = 0; i < n1; ++i) {
    points(0, i) = gauss(rng);
    points(1, i) = gauss(rng);
    points(2, i) = 0.0;
  }
  for (Index i = 0; i < n2; ++i) {
    points(0, n1 + i) = gauss(rng);
    points(1, n1 + i) = gauss(rng);
    points(2, n1 + i) = 1.0 + gauss(rng);
  }
  return Dataset(std::move(points));
}

}  // namespace nystrom
