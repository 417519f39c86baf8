#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nystrom/common.hpp"
#include "nystrom/kernel.hpp"
#include "nystrom/nystrom.hpp"

namespace nystrom {

// Adaptive column selection. Each candidate column i is scored by its Schur
// complement against the selected block,
//
//   Delta(i) = d(i) - b_i^T W^-1 b_i = d(i) - sum_t C(i,t) R(t,i),
//
// which for PSD G equals the squared residual of point i against the span of
// the selected points. The column with the largest |Delta| is fetched and the
// bordered-inverse identities
//
//   W_{k+1}^-1 = | W^-1 + s q q^T   -s q |      q = W^-1 b,  s = 1/Delta,
//                | -s q^T            s   |
//
//   R_{k+1}    = | R + s q (q^T C^T - c^T) |    R = W^-1 C^T,
//                | s (-q^T C^T + c^T)      |
//
// extend W^-1 and R in O(kn), so G is only ever touched one column at a time.

struct OasisConfig {
  Index max_columns = 0;             // hard cap on |Lambda|
  Index init_columns = 1;            // random seed columns
  std::optional<double> tolerance;   // stop when max |Delta| falls below; unset -> 1e-8 * max|d|
  std::uint64_t seed = 0;

  void validate(Index n) const {
    if (init_columns < 1) throw std::invalid_argument("OasisConfig: init_columns must be >= 1");
    if (max_columns < init_columns) {
      throw std::invalid_argument("OasisConfig: max_columns must be >= init_columns");
    }
    if (max_columns > n) {
      throw std::invalid_argument("OasisConfig: max_columns exceeds matrix dimension");
    }
    if (tolerance && !(*tolerance >= 0.0)) {
      throw std::invalid_argument("OasisConfig: tolerance must be nonnegative");
    }
  }
};

/// Working state of a run: C (n x k sampled columns), W^-1, R = W^-1 C^T,
/// the diagonal d, and the current scores.
struct SamplerState {
  std::vector<Index> lambda;
  Matrix c;
  Matrix winv;
  Matrix r;
  Vector d;
  Vector delta;
};

enum class Termination { column_cap, tolerance, exhausted };

inline const char* to_string(Termination reason) {
  switch (reason) {
    case Termination::column_cap: return "column-cap";
    case Termination::tolerance: return "tolerance";
    case Termination::exhausted: return "exhausted";
  }
  return "?";
}

struct SelectionStep {
  Index step;        // |Lambda| after this selection
  Index index;       // selected global column
  double delta_abs;  // |Delta| of the selected column
  double seconds;    // cumulative wall-clock within the run
};
using StepCallback = std::function<void(const SelectionStep&)>;

struct OasisResult {
  NystromApprox approx;
  Termination reason = Termination::column_cap;
  double selection_seconds = 0.0;
  bool psd_warning = false;  // saw Delta far below zero: input likely not PSD
};

namespace detail {

// The engine keeps R transposed (rows x k, same row indexing as C) so every
// hot loop streams contiguous columns. Plain fixed-order loops throughout: a
// worker running them over its row block produces bit-identical values to a
// serial run over the same rows.

// out(i) = d(i) - sum_t c(i,t) rt(i,t).
inline void schur_scores(const MatRef& c, const MatRef& rt, const VecRef& d, VecMutRef out) {
  const Index rows = c.rows();
  const Index k = c.cols();
  for (Index i = 0; i < rows; ++i) out[i] = d[i];
  for (Index t = 0; t < k; ++t) {
    for (Index i = 0; i < rows; ++i) out[i] -= c(i, t) * rt(i, t);
  }
}

// Grows the bordered inverse in place; w is (k+1)x(k+1) with the old inverse
// in its top-left k x k block.
inline void schur_update_inplace(MatMutRef w, const Vector& q, double s) {
  const Index k = w.rows() - 1;
  if (k > 0) {
    w.topLeftCorner(k, k).noalias() += s * (q * q.transpose());
    w.col(k).head(k) = -s * q;
    w.row(k).head(k) = (-s * q).transpose();
  }
  w(k, k) = s;
}

// Grows R^T in place; rt is rows x (k+1) with the old R^T in its leading k
// columns, c_old the matching row block of C, c_new the new column restricted
// to the same rows. New column: s (c_new - C q); correction: -new_col q^T.
inline void update_rt_inplace(MatMutRef rt, const MatRef& c_old, const VecRef& c_new,
                              const Vector& q, double s) {
  const Index rows = rt.rows();
  const Index k = rt.cols() - 1;
  auto new_col = rt.col(k);
  for (Index i = 0; i < rows; ++i) new_col[i] = c_new[i];
  for (Index t = 0; t < k; ++t) {
    const double qt = q[t];
    for (Index i = 0; i < rows; ++i) new_col[i] -= qt * c_old(i, t);
  }
  for (Index i = 0; i < rows; ++i) new_col[i] *= s;
  for (Index t = 0; t < k; ++t) {
    const double qt = q[t];
    for (Index i = 0; i < rows; ++i) rt(i, t) -= new_col[i] * qt;
  }
}

// R^T = C W^-1 column by column (W^-1 symmetric, so this is (W^-1 C^T)^T).
inline void initial_rt(const MatRef& winv, const MatRef& c, MatMutRef rt) {
  const Index rows = c.rows();
  const Index k = c.cols();
  for (Index t = 0; t < k; ++t) {
    rt.col(t).setZero();
    for (Index u = 0; u < k; ++u) {
      const double w = winv(u, t);
      for (Index i = 0; i < rows; ++i) rt(i, t) += c(i, u) * w;
    }
  }
}

inline Matrix symmetric_inverse(const Matrix& w) {
  Matrix inv = w.inverse();
  inv = 0.5 * (inv + inv.transpose());
  return inv;
}

inline bool invertible_block(const Matrix& w, double cond_cap = 1e12) {
  Eigen::JacobiSVD<Matrix> svd(w);
  const Vector& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  return smin > 0.0 && sv(0) / smin < cond_cap;
}

inline std::vector<Index> draw_initial_indices(Index n, Index k0, std::mt19937_64& rng) {
  return sample_without_replacement(n, k0, rng);
}

inline double resolve_tolerance(const OasisConfig& config, const Vector& d) {
  return config.tolerance ? *config.tolerance : 1e-8 * d.cwiseAbs().maxCoeff();
}

// Below this the Schur pivot is numerically zero and 1/Delta is meaningless.
inline double pivot_floor(double d) { return 1e-14 * (1.0 + std::abs(d)); }

}  // namespace detail

/// Scores every column against the current state (Eq. Delta above).
inline Vector delta_scores(const SamplerState& state) {
  const Index n = state.d.size();
  const Index k = state.c.cols();
  if (state.c.rows() != n || state.r.rows() != k || state.r.cols() != n) {
    throw std::invalid_argument("delta_scores: inconsistent state shapes");
  }
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Index t = 0; t < k; ++t) acc += state.c(i, t) * state.r(t, i);
    out[i] = state.d[i] - acc;
  }
  return out;
}

/// Unselected index with the largest |Delta|, lowest index on ties; nullopt
/// when everything is selected or the best score falls below eps.
inline std::optional<Index> select_next(const Vector& delta, const std::vector<Index>& lambda,
                                        double eps) {
  const Index n = delta.size();
  std::vector<char> selected(static_cast<std::size_t>(n), 0);
  for (Index idx : lambda) {
    if (idx < 0 || idx >= n) throw std::invalid_argument("select_next: lambda index out of range");
    selected[static_cast<std::size_t>(idx)] = 1;
  }
  Index best = -1;
  double best_abs = -1.0;
  for (Index i = 0; i < n; ++i) {
    if (selected[static_cast<std::size_t>(i)]) continue;
    const double a = std::abs(delta[i]);
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  if (best < 0 || best_abs < eps) return std::nullopt;
  return best;
}

/// Bordered inverse of [[W, b], [b^T, d]] given W^-1 and the precomputed
/// pivot delta = d - b^T W^-1 b.
inline Matrix schur_update_winv(const Matrix& winv, const Vector& b, double d, double delta) {
  const Index k = winv.rows();
  if (winv.cols() != k || b.size() != k) {
    throw std::invalid_argument("schur_update_winv: shape mismatch");
  }
  if (std::abs(delta) < detail::pivot_floor(d)) {
    throw std::runtime_error("schur_update_winv: pivot below numeric floor; selection should "
                             "have terminated");
  }
  Matrix out(k + 1, k + 1);
  out.topLeftCorner(k, k) = winv;
  const Vector q = winv * b;
  detail::schur_update_inplace(out, q, 1.0 / delta);
  return out;
}

/// R_{k+1} from R_k (Eq. R above); q and s belong to the selected column.
inline Matrix update_r(const Matrix& r, const Matrix& c, const Vector& c_new, const Vector& q,
                       double s) {
  const Index k = r.rows();
  const Index n = r.cols();
  if (c.rows() != n || c.cols() != k || c_new.size() != n || q.size() != k) {
    throw std::invalid_argument("update_r: shape mismatch");
  }
  Matrix rt(n, k + 1);
  rt.leftCols(k) = r.transpose();
  detail::update_rt_inplace(rt, c, c_new, q, s);
  return rt.transpose();
}

/// Runs the adaptive sampler against the oracle: seeds with init_columns
/// random columns, then scores / selects / fetches / updates until the column
/// cap, the tolerance, or exhaustion. The column fetch for an index happens
/// only after that index has been selected.
inline OasisResult oasis_run(const KernelOracle& oracle, const OasisConfig& config,
                             const StepCallback& on_step = {}) {
  const Index n = oracle.size();
  config.validate(n);
  const Index l = config.max_columns;
  const Index k0 = config.init_columns;

  Stopwatch clock;
  const Vector d = oracle.diagonal();
  const double eps = detail::resolve_tolerance(config, d);
  const double d_scale = d.cwiseAbs().maxCoeff();

  Matrix c(n, l);
  Matrix winv(l, l);
  Matrix rt(n, l);  // R^T, row-aligned with C
  std::vector<Index> lambda;

  std::mt19937_64 rng(config.seed);
  bool seeded = false;
  for (int attempt = 0; attempt < 10 && !seeded; ++attempt) {
    std::vector<Index> seeds = detail::draw_initial_indices(n, k0, rng);
    for (Index t = 0; t < k0; ++t) c.col(t) = oracle.column(seeds[static_cast<std::size_t>(t)]);
    Matrix w0(k0, k0);
    for (Index t = 0; t < k0; ++t) {
      for (Index u = 0; u < k0; ++u) w0(t, u) = c(seeds[static_cast<std::size_t>(t)], u);
    }
    if (!detail::invertible_block(w0)) continue;
    winv.topLeftCorner(k0, k0) = detail::symmetric_inverse(w0);
    lambda = std::move(seeds);
    seeded = true;
  }
  if (!seeded) {
    throw std::runtime_error("oasis_run: initial column block stayed numerically singular after "
                             "10 draws; reduce init_columns");
  }
  detail::initial_rt(winv.topLeftCorner(k0, k0), c.leftCols(k0), rt.leftCols(k0));

  OasisResult result;
  result.reason = Termination::column_cap;
  Vector delta(n);
  Index k = k0;
  while (k < l) {
    detail::schur_scores(c.leftCols(k), rt.leftCols(k), d, delta);
    if (delta.minCoeff() < -1e-6 * d_scale) result.psd_warning = true;
    const auto pick = select_next(delta, lambda, eps);
    if (!pick) {
      result.reason =
          static_cast<Index>(lambda.size()) == n ? Termination::exhausted : Termination::tolerance;
      break;
    }
    const Index i = *pick;
    const double delta_i = delta[i];
    if (std::abs(delta_i) < detail::pivot_floor(d[i])) {
      result.reason = Termination::tolerance;
      break;
    }

    const Vector c_new = oracle.column(i);
    Vector b(k);
    for (Index t = 0; t < k; ++t) b[t] = c_new[lambda[static_cast<std::size_t>(t)]];
    const Vector q = winv.topLeftCorner(k, k) * b;
    const double s = 1.0 / delta_i;

    detail::schur_update_inplace(winv.topLeftCorner(k + 1, k + 1), q, s);
    detail::update_rt_inplace(rt.leftCols(k + 1), c.leftCols(k), c_new, q, s);
    c.col(k) = c_new;
    lambda.push_back(i);
    ++k;
    if (on_step) on_step({k, i, std::abs(delta_i), clock.seconds()});
  }

  result.approx = NystromApprox(lambda, c.leftCols(k), winv.topLeftCorner(k, k));
  result.selection_seconds = clock.seconds();
  return result;
}

}  // namespace nystrom
