#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <span>
#include <thread>
#include <vector>

#include "nystrom/common.hpp"
#include "nystrom/kernel.hpp"
#include "nystrom/nystrom.hpp"
#include "nystrom/oasis.hpp"
#include "nystrom/samplers.hpp"

namespace nystrom {

/// One point of a convergence curve.
struct ConvergencePoint {
  Index k = 0;
  double rel_error = 0.0;
  Index rank = 0;
  double elapsed_seconds = 0.0;
};

/// |G~ - G|_F / |G|_F against the full matrix.
inline double relative_frobenius_error(const Matrix& g, const NystromApprox& approx) {
  if (g.rows() != g.cols() || g.rows() != approx.n()) {
    throw std::invalid_argument("relative_frobenius_error: dimension mismatch");
  }
  const double g_norm = g.norm();
  if (g_norm == 0.0) throw std::invalid_argument("relative_frobenius_error: |G|_F is zero");
  return (reconstruct(approx, g.rows()) - g).norm() / g_norm;
}

/// Monte-Carlo variant for matrices too large to materialize: the same ratio
/// over uniformly sampled entries (with replacement, seeded).
inline double sampled_entry_error(const KernelOracle& oracle, const NystromApprox& approx,
                                  Index num_samples, std::uint64_t seed) {
  if (oracle.size() != approx.n()) {
    throw std::invalid_argument("sampled_entry_error: dimension mismatch");
  }
  if (num_samples < 1) throw std::invalid_argument("sampled_entry_error: num_samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> pick(0, oracle.size() - 1);
  double num = 0.0;
  double den = 0.0;
  for (Index t = 0; t < num_samples; ++t) {
    const Index i = pick(rng);
    const Index j = pick(rng);
    const double exact = oracle.entry(i, j);
    const double diff = exact - reconstruct_entry(approx, i, j);
    num += diff * diff;
    den += exact * exact;
  }
  if (den == 0.0) {
    throw std::runtime_error("sampled_entry_error: every sampled entry of G was zero");
  }
  return std::sqrt(num) / std::sqrt(den);
}

/// Numerical rank at the 1e-10 * sigma_max threshold.
inline Index rank_of(const Matrix& w) {
  if (w.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(w);
  const Vector& sv = svd.singularValues();
  if (!(sv(0) > 0.0)) return 0;
  const double floor = 1e-10 * sv(0);
  Index rank = 0;
  while (rank < sv.size() && sv(rank) > floor) ++rank;
  return rank;
}

enum class ErrorMode { full, sampled };

struct SweepOptions {
  OasisConfig config;            // seed doubles as the master seed
  int trials = 10;               // randomized samplers only
  ErrorMode error_mode = ErrorMode::full;
  Index error_samples = 100000;
  Index dense_cap = kDefaultDenseCap;
};

namespace detail {

inline void run_trials(int trials, const std::function<void(int)>& body) {
  const int threads = std::min(trials, thread_cap());
  if (threads <= 1) {
    for (int t = 0; t < trials; ++t) body(t);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (int t = w; t < trials; t += threads) body(t);
    });
  }
}

}  // namespace detail

/// Convergence curve over the k grid. The adaptive sampler contributes one
/// incremental run (grid points are prefixes of its Lambda); randomized
/// samplers are repeated `trials` times and the errors averaged.
inline std::vector<ConvergencePoint> sweep(const KernelOracle& oracle, SamplerKind sampler,
                                           std::span<const Index> grid,
                                           const SweepOptions& options) {
  const Index n = oracle.size();
  options.config.validate(n);
  std::vector<Index> ks(grid.begin(), grid.end());
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (!ks.empty() && (ks.front() < 1 || ks.back() > options.config.max_columns)) {
    throw std::invalid_argument("sweep: grid values must lie in [1, max_columns]");
  }

  Matrix dense_g;
  if (options.error_mode == ErrorMode::full || sampler == SamplerKind::leverage) {
    dense_g = oracle.dense(options.dense_cap);
  }
  const std::uint64_t master = options.config.seed;
  auto error_of = [&](const NystromApprox& approx) {
    if (options.error_mode == ErrorMode::full) return relative_frobenius_error(dense_g, approx);
    return sampled_entry_error(oracle, approx, options.error_samples, split_seed(master, 0xE57));
  };

  std::vector<ConvergencePoint> curve;
  if (sampler == SamplerKind::oasis) {
    std::vector<double> step_seconds(static_cast<std::size_t>(options.config.max_columns) + 1,
                                     0.0);
    OasisResult run = oasis_run(oracle, options.config, [&](const SelectionStep& step) {
      step_seconds[static_cast<std::size_t>(step.step)] = step.seconds;
    });
    const auto& lambda = run.approx.lambda;
    for (Index k : ks) {
      if (k > run.approx.k()) break;  // run terminated before reaching this k
      std::span<const Index> prefix(lambda.data(), static_cast<std::size_t>(k));
      NystromApprox approx = build_from_indices(oracle, prefix);
      curve.push_back({k, error_of(approx), rank_of(approx.sampled_block()),
                       step_seconds[static_cast<std::size_t>(k)]});
    }
    return curve;
  }

  const Index l = options.config.max_columns;
  const int trials = std::max(1, options.trials);
  std::vector<std::vector<Index>> draws(static_cast<std::size_t>(trials));
  if (sampler == SamplerKind::uniform) {
    for (int t = 0; t < trials; ++t) {
      draws[static_cast<std::size_t>(t)] =
          uniform_sample(n, l, split_seed(master, 100 + static_cast<std::uint64_t>(t)));
    }
  } else {
    const LeverageProfile profile = leverage_scores(dense_g, l);
    for (int t = 0; t < trials; ++t) {
      draws[static_cast<std::size_t>(t)] =
          leverage_sample(profile, l, split_seed(master, 200 + static_cast<std::uint64_t>(t)));
    }
  }

  // errors[t][grid position], factor time measured fresh per (k, trial).
  std::vector<std::vector<double>> errors(static_cast<std::size_t>(trials));
  std::vector<std::vector<double>> times(static_cast<std::size_t>(trials));
  std::vector<std::vector<Index>> ranks(static_cast<std::size_t>(trials));
  detail::run_trials(trials, [&](int t) {
    auto& err_row = errors[static_cast<std::size_t>(t)];
    auto& time_row = times[static_cast<std::size_t>(t)];
    auto& rank_row = ranks[static_cast<std::size_t>(t)];
    for (Index k : ks) {
      std::span<const Index> prefix(draws[static_cast<std::size_t>(t)].data(),
                                    static_cast<std::size_t>(k));
      Stopwatch clock;
      NystromApprox approx = build_from_indices(oracle, prefix);
      time_row.push_back(clock.seconds());
      err_row.push_back(error_of(approx));
      rank_row.push_back(rank_of(approx.sampled_block()));
    }
  });

  for (std::size_t pos = 0; pos < ks.size(); ++pos) {
    double err = 0.0;
    double time = 0.0;
    for (int t = 0; t < trials; ++t) {
      err += errors[static_cast<std::size_t>(t)][pos];
      time += times[static_cast<std::size_t>(t)][pos];
    }
    curve.push_back({ks[pos], err / trials, ranks.front()[pos], time / trials});
  }
  return curve;
}

/// Rank trajectory (with errors) over every k from 1 to max_columns on an
/// explicit matrix.
inline std::vector<ConvergencePoint> rank_curve(const Matrix& g, SamplerKind sampler,
                                                const SweepOptions& options) {
  std::vector<Index> grid;
  for (Index k = 1; k <= options.config.max_columns; ++k) grid.push_back(k);
  return sweep(KernelOracle::from_matrix(g), sampler, grid, options);
}

/// CSV with the stable header `k,rel_error,rank,elapsed_seconds`.
inline void write_curve_csv(std::ostream& out, const std::vector<ConvergencePoint>& curve) {
  out << "k,rel_error,rank,elapsed_seconds\n";
  char buffer[64];
  for (const auto& point : curve) {
    std::snprintf(buffer, sizeof buffer, "%lld,%.17g,%lld,%.6f",
                  static_cast<long long>(point.k), point.rel_error,
                  static_cast<long long>(point.rank), point.elapsed_seconds);
    out << buffer << '\n';
  }
}

}  // namespace nystrom
