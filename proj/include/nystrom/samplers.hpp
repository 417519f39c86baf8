#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "nystrom/common.hpp"
#include "nystrom/kernel.hpp"
#include "nystrom/nystrom.hpp"

namespace nystrom {

/// l distinct indices from [0, n), uniform without replacement.
inline std::vector<Index> uniform_sample(Index n, Index l, std::uint64_t seed) {
  if (l < 1 || l > n) throw std::invalid_argument("uniform_sample: need 1 <= l <= n");
  return sample_without_replacement(n, l, seed);
}

/// Leverage scores s_j = |U_k(j,:)|^2 from the top-k invariant subspace of G.
struct LeverageProfile {
  Vector scores;
  Index k = 0;
};

inline LeverageProfile leverage_scores(const Matrix& g, Index k) {
  const Index n = g.rows();
  if (g.cols() != n || n < 1) throw std::invalid_argument("leverage_scores: G must be square");
  if (k < 1 || k > n) throw std::invalid_argument("leverage_scores: need 1 <= k <= n");

  // G is symmetric PSD, so ordering eigenpairs by |eigenvalue| matches the SVD.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (g + g.transpose()));
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  const Vector& values = eig.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::abs(values[a]) > std::abs(values[b]);
  });

  LeverageProfile profile;
  profile.k = k;
  profile.scores = Vector::Zero(n);
  for (Index t = 0; t < k; ++t) {
    profile.scores += eig.eigenvectors().col(order[static_cast<std::size_t>(t)]).cwiseAbs2();
  }
  return profile;
}

/// l distinct indices drawn sequentially, probability proportional to the
/// remaining scores; once only zero-score indices remain they are drawn
/// uniformly.
inline std::vector<Index> leverage_sample(const LeverageProfile& profile, Index l,
                                          std::uint64_t seed) {
  const Index n = profile.scores.size();
  if (l < 1 || l > n) throw std::invalid_argument("leverage_sample: need 1 <= l <= n");

  std::mt19937_64 rng(seed);
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(l));
  double total = 0.0;
  for (Index i = 0; i < n; ++i) total += std::max(0.0, profile.scores[i]);

  while (static_cast<Index>(out.size()) < l) {
    Index picked = -1;
    if (total > 0.0) {
      std::uniform_real_distribution<double> unit(0.0, total);
      const double u = unit(rng);
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) {
        if (taken[static_cast<std::size_t>(i)]) continue;
        acc += std::max(0.0, profile.scores[i]);
        if (u < acc) {
          picked = i;
          break;
        }
      }
      if (picked < 0) {  // u landed on the accumulated round-off tail
        for (Index i = n - 1; i >= 0; --i) {
          if (!taken[static_cast<std::size_t>(i)] && profile.scores[i] > 0.0) {
            picked = i;
            break;
          }
        }
      }
    }
    if (picked < 0) {  // zero-score pool
      std::vector<Index> rest;
      for (Index i = 0; i < n; ++i) {
        if (!taken[static_cast<std::size_t>(i)]) rest.push_back(i);
      }
      std::uniform_int_distribution<std::size_t> pick(0, rest.size() - 1);
      picked = rest[pick(rng)];
    }
    taken[static_cast<std::size_t>(picked)] = 1;
    total -= std::max(0.0, profile.scores[picked]);
    out.push_back(picked);
  }
  return out;
}

/// Assembles the approximation for an arbitrary index set; W may be singular
/// here (random samplers can pick dependent columns), so W^-1 comes from a
/// truncated pseudo-inverse.
inline NystromApprox build_from_indices(const KernelOracle& oracle,
                                        std::span<const Index> lambda) {
  const Index n = oracle.size();
  const Index k = static_cast<Index>(lambda.size());
  if (k == 0) return NystromApprox(n);

  Matrix c(n, k);
  for (Index t = 0; t < k; ++t) c.col(t) = oracle.column(lambda[static_cast<std::size_t>(t)]);
  Matrix w(k, k);
  for (Index t = 0; t < k; ++t) w.row(t) = c.row(lambda[static_cast<std::size_t>(t)]);

  Eigen::JacobiSVD<Matrix> svd(w, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const double floor = 1e-12 * sv(0);
  Vector inv = Vector::Zero(k);
  for (Index t = 0; t < k; ++t) {
    if (sv(t) > floor && sv(t) > 0.0) inv(t) = 1.0 / sv(t);
  }
  Matrix winv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  winv = 0.5 * (winv + winv.transpose());

  return NystromApprox(std::vector<Index>(lambda.begin(), lambda.end()), std::move(c),
                       std::move(winv));
}

enum class SamplerKind { oasis, uniform, leverage };

inline const char* to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::oasis: return "oasis";
    case SamplerKind::uniform: return "uniform";
    case SamplerKind::leverage: return "leverage";
  }
  return "?";
}

inline SamplerKind sampler_from_string(const std::string& name) {
  if (name == "oasis") return SamplerKind::oasis;
  if (name == "uniform") return SamplerKind::uniform;
  if (name == "leverage") return SamplerKind::leverage;
  throw std::invalid_argument("unknown sampler '" + name + "'");
}

}  // namespace nystrom
