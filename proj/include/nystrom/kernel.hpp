#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <variant>

#include "nystrom/common.hpp"
#include "nystrom/dataset.hpp"

namespace nystrom {

enum class KernelKind { gaussian, gram, diffusion_gaussian };

inline const char* to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::gram: return "gram";
    case KernelKind::diffusion_gaussian: return "diffusion-gaussian";
  }
  return "?";
}

inline KernelKind kernel_kind_from_string(const std::string& name) {
  if (name == "gaussian") return KernelKind::gaussian;
  if (name == "gram") return KernelKind::gram;
  if (name == "diffusion" || name == "diffusion-gaussian") return KernelKind::diffusion_gaussian;
  throw std::invalid_argument("unknown kernel kind '" + name + "'");
}

struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;
  double sigma = 1.0;  // bandwidth, gaussian kinds only

  bool needs_sigma() const { return kind != KernelKind::gram; }

  void validate() const {
    if (needs_sigma() && !(sigma > 0.0 && std::isfinite(sigma))) {
      throw std::invalid_argument("KernelSpec: sigma must be positive and finite");
    }
  }
};

namespace detail {

// Single shared evaluation path; every column/diagonal/entry, serial or
// per-worker, goes through here so equal inputs give bit-equal outputs.
inline double eval_kernel(const KernelSpec& spec, const VecRef& zi, const VecRef& zj) {
  switch (spec.kind) {
    case KernelKind::gram:
      return zi.dot(zj);
    case KernelKind::gaussian:
    case KernelKind::diffusion_gaussian:
      return std::exp(-(zi - zj).squaredNorm() / (spec.sigma * spec.sigma));
  }
  return 0.0;
}

}  // namespace detail

/// exp(-|zi-zj|^2/sigma^2) for the gaussian kinds, zi.zj for gram.
inline double kernel_entry(const KernelSpec& spec, const VecRef& zi, const VecRef& zj) {
  spec.validate();
  if (zi.size() != zj.size()) {
    throw std::invalid_argument("kernel_entry: dimension mismatch");
  }
  if (!zi.allFinite() || !zj.allFinite()) {
    throw std::invalid_argument("kernel_entry: non-finite input");
  }
  return detail::eval_kernel(spec, zi, zj);
}

/// Symmetric normalization M = D^(-1/2) N D^(-1/2), D = diag of row sums of N.
inline Matrix diffusion_transform(const Matrix& n_mat) {
  if (n_mat.rows() != n_mat.cols()) {
    throw std::invalid_argument("diffusion_transform: matrix must be square");
  }
  const double scale = std::max(1.0, n_mat.cwiseAbs().maxCoeff());
  if ((n_mat - n_mat.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("diffusion_transform: matrix must be symmetric");
  }
  Vector row_sums = n_mat.rowwise().sum();
  if ((row_sums.array() <= 0.0).any()) {
    throw std::invalid_argument("diffusion_transform: nonpositive row sum");
  }
  Vector inv_sqrt = row_sums.array().rsqrt();
  return inv_sqrt.asDiagonal() * n_mat * inv_sqrt.asDiagonal();
}

/// Serves single columns and the diagonal of the kernel matrix G, either from a
/// stored symmetric matrix (explicit mode) or straight from the data + kernel
/// function (implicit mode, G never materialized).
class KernelOracle {
 public:
  static KernelOracle from_matrix(Matrix g) {
    if (g.rows() != g.cols() || g.rows() < 1) {
      throw std::invalid_argument("KernelOracle: explicit matrix must be square, n >= 1");
    }
    if (!g.allFinite()) {
      throw std::invalid_argument("KernelOracle: explicit matrix has non-finite entries");
    }
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      throw std::invalid_argument("KernelOracle: explicit matrix is not symmetric");
    }
    return KernelOracle(std::move(g));
  }

  static KernelOracle from_dataset(Dataset dataset, KernelSpec spec) {
    spec.validate();
    if (spec.kind == KernelKind::diffusion_gaussian) {
      throw std::invalid_argument(
          "KernelOracle: diffusion kernel needs full row sums; use an explicit oracle "
          "(diffusion_transform of the dense gaussian matrix)");
    }
    return KernelOracle(std::move(dataset), spec);
  }

  Index size() const {
    return is_explicit() ? std::get<Matrix>(source_).rows()
                         : std::get<Implicit>(source_).dataset.size();
  }

  bool is_explicit() const { return std::holds_alternative<Matrix>(source_); }

  const Matrix& matrix() const {
    if (!is_explicit()) throw std::logic_error("KernelOracle: no stored matrix in implicit mode");
    return std::get<Matrix>(source_);
  }

  const Dataset& dataset() const { return implicit().dataset; }
  const KernelSpec& spec() const { return implicit().spec; }

  double entry(Index i, Index j) const {
    check_index(i);
    check_index(j);
    if (is_explicit()) return std::get<Matrix>(source_)(i, j);
    const auto& imp = implicit();
    return detail::eval_kernel(imp.spec, imp.dataset.point(i), imp.dataset.point(j));
  }

  Vector column(Index i) const {
    check_index(i);
    if (is_explicit()) return std::get<Matrix>(source_).col(i);
    const auto& imp = implicit();
    const Index n = imp.dataset.size();
    Vector out(n);
    for (Index j = 0; j < n; ++j) {
      out[j] = detail::eval_kernel(imp.spec, imp.dataset.point(j), imp.dataset.point(i));
    }
    return out;
  }

  Vector diagonal() const {
    const Index n = size();
    Vector out(n);
    if (is_explicit()) {
      out = std::get<Matrix>(source_).diagonal();
    } else {
      const auto& imp = implicit();
      for (Index i = 0; i < n; ++i) {
        out[i] = detail::eval_kernel(imp.spec, imp.dataset.point(i), imp.dataset.point(i));
      }
    }
    return out;
  }

  /// Materializes G; guarded so implicit mode cannot blow up by accident.
  Matrix dense(Index cap = 10000) const {
    if (is_explicit()) return std::get<Matrix>(source_);
    const Index n = size();
    if (n > cap) {
      throw std::runtime_error("KernelOracle::dense: n = " + std::to_string(n) +
                               " exceeds cap " + std::to_string(cap));
    }
    Matrix g(n, n);
    for (Index i = 0; i < n; ++i) g.col(i) = column(i);
    return g;
  }

 private:
  struct Implicit {
    Dataset dataset;
    KernelSpec spec;
  };

  explicit KernelOracle(Matrix g) : source_(std::move(g)) {}
  KernelOracle(Dataset dataset, KernelSpec spec)
      : source_(Implicit{std::move(dataset), spec}) {}

  const Implicit& implicit() const {
    if (is_explicit()) throw std::logic_error("KernelOracle: explicit mode has no dataset");
    return std::get<Implicit>(source_);
  }

  void check_index(Index i) const {
    if (i < 0 || i >= size()) {
      throw std::out_of_range("KernelOracle: column index " + std::to_string(i) +
                              " out of range [0, " + std::to_string(size()) + ")");
    }
  }

  std::variant<Matrix, Implicit> source_;
};

/// Max pairwise Euclidean distance; O(n^2 m), desk-scale use only.
inline double max_pairwise_distance(const Dataset& dataset, Index cap = 10000) {
  const Index n = dataset.size();
  if (n > cap) {
    throw std::runtime_error("max_pairwise_distance: n exceeds desk-scale cap");
  }
  double best = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      best = std::max(best, (dataset.point(i) - dataset.point(j)).squaredNorm());
    }
  }
  return std::sqrt(best);
}

/// Builds the oracle a spec asks for: implicit for gaussian/gram, dense
/// diffusion-normalized gaussian otherwise.
inline KernelOracle make_oracle(const Dataset& dataset, const KernelSpec& spec,
                                Index dense_cap = 10000) {
  spec.validate();
  if (spec.kind != KernelKind::diffusion_gaussian) {
    return KernelOracle::from_dataset(dataset, spec);
  }
  if (dataset.size() > dense_cap) {
    throw std::runtime_error("diffusion kernel is explicit-only; n exceeds dense cap");
  }
  KernelSpec gaussian{KernelKind::gaussian, spec.sigma};
  Matrix affinity = KernelOracle::from_dataset(dataset, gaussian).dense(dense_cap);
  return KernelOracle::from_matrix(diffusion_transform(affinity));
}

}  // namespace nystrom
