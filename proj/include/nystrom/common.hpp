#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace nystrom {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Ref aliases that bind to blocks of larger preallocated matrices without copying.
using MatRef = Eigen::Ref<const Matrix, 0, Eigen::OuterStride<>>;
using MatMutRef = Eigen::Ref<Matrix, 0, Eigen::OuterStride<>>;
using VecRef = Eigen::Ref<const Vector>;
using VecMutRef = Eigen::Ref<Vector>;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from one master seed.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 1));
}

/// `count` distinct indices from [0, n), uniform without replacement.
inline std::vector<Index> sample_without_replacement(Index n, Index count, std::mt19937_64& rng) {
  if (count < 0 || count > n) {
    throw std::invalid_argument("sample_without_replacement: count must lie in [0, n]");
  }
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(count));
  return pool;
}

inline std::vector<Index> sample_without_replacement(Index n, Index count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_without_replacement(n, count, rng);
}

/// Thread cap from NYSTROM_THREADS; defaults to 1 (serial).
inline int thread_cap() {
  if (const char* raw = std::getenv("NYSTROM_THREADS")) {
    const int parsed = std::atoi(raw);
    if (parsed >= 1) return parsed;
  }
  return 1;
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace nystrom
