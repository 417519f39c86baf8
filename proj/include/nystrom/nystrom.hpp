#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "nystrom/common.hpp"

namespace nystrom {

inline constexpr Index kDefaultDenseCap = 10000;

/// Factored low-rank approximation G ~ C W^-1 C^T built from the sampled
/// column set Lambda; W = G(Lambda, Lambda) is the k x k block of sampled rows.
struct NystromApprox {
  std::vector<Index> lambda;  // ordered sampled indices
  Matrix c;                   // n x k sampled columns
  Matrix winv;                // k x k, symmetric

  NystromApprox() = default;

  explicit NystromApprox(Index n) : c(n, 0), winv(0, 0) {
    if (n < 1) throw std::invalid_argument("NystromApprox: n must be >= 1");
  }

  NystromApprox(std::vector<Index> lambda_in, Matrix c_in, Matrix winv_in)
      : lambda(std::move(lambda_in)), c(std::move(c_in)), winv(std::move(winv_in)) {
    const Index k = static_cast<Index>(lambda.size());
    if (c.cols() != k || winv.rows() != k || winv.cols() != k) {
      throw std::invalid_argument("NystromApprox: inconsistent C/Winv shapes");
    }
    if (c.rows() < 1) throw std::invalid_argument("NystromApprox: n must be >= 1");
    std::vector<Index> sorted = lambda;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t t = 0; t < sorted.size(); ++t) {
      if (sorted[t] < 0 || sorted[t] >= c.rows()) {
        throw std::invalid_argument("NystromApprox: index out of range");
      }
      if (t > 0 && sorted[t] == sorted[t - 1]) {
        throw std::invalid_argument("NystromApprox: duplicate index in lambda");
      }
    }
    if (k > 0) {
      const double scale = 1.0 + winv.cwiseAbs().maxCoeff();
      if ((winv - winv.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw std::invalid_argument("NystromApprox: Winv is not symmetric");
      }
    }
  }

  Index n() const { return c.rows(); }
  Index k() const { return static_cast<Index>(lambda.size()); }

  /// The sampled-rows block W = C(Lambda, :).
  Matrix sampled_block() const {
    const Index kk = k();
    Matrix w(kk, kk);
    for (Index t = 0; t < kk; ++t) w.row(t) = c.row(lambda[static_cast<std::size_t>(t)]);
    return w;
  }
};

/// Dense C W^-1 C^T. Refuses above `cap` (O(n^2) memory); use
/// reconstruct_entry for large n.
inline Matrix reconstruct(const NystromApprox& approx, Index cap = kDefaultDenseCap) {
  if (approx.n() > cap) {
    throw std::runtime_error(
        "reconstruct: n = " + std::to_string(approx.n()) + " exceeds the dense cap " +
        std::to_string(cap) + "; evaluate entries with reconstruct_entry instead");
  }
  if (approx.k() == 0) return Matrix::Zero(approx.n(), approx.n());
  return approx.c * approx.winv * approx.c.transpose();
}

/// Single entry of the reconstruction: row_i(C) W^-1 row_j(C)^T.
inline double reconstruct_entry(const NystromApprox& approx, Index i, Index j) {
  if (i < 0 || i >= approx.n() || j < 0 || j >= approx.n()) {
    throw std::out_of_range("reconstruct_entry: index out of range");
  }
  if (approx.k() == 0) return 0.0;
  return approx.c.row(i) * approx.winv * approx.c.row(j).transpose();
}

/// Approximate SVD of G via the SVD of the small block W = U_W S_W U_W^T:
/// singular values (n/k) S_W, vectors sqrt(k/n) C U_W S_W^-1.
struct ApproxSvd {
  Matrix u;         // n x kept
  Vector s;         // kept, nonincreasing
  Index dropped = 0;  // components with singular value below 1e-14 * max
};

inline ApproxSvd approx_svd(const NystromApprox& approx) {
  const Index k = approx.k();
  if (k == 0) throw std::invalid_argument("approx_svd: empty approximation");
  const Index n = approx.n();

  Eigen::JacobiSVD<Matrix> svd(approx.sampled_block(), Eigen::ComputeFullU);
  const Vector& sv = svd.singularValues();
  const double floor = 1e-14 * sv(0);
  Index kept = 0;
  while (kept < k && sv(kept) > floor && sv(kept) > 0.0) ++kept;

  ApproxSvd out;
  out.dropped = k - kept;
  out.s = (static_cast<double>(n) / static_cast<double>(k)) * sv.head(kept);
  out.u = std::sqrt(static_cast<double>(k) / static_cast<double>(n)) *
          (approx.c * svd.matrixU().leftCols(kept)) * sv.head(kept).cwiseInverse().asDiagonal();
  return out;
}

}  // namespace nystrom
