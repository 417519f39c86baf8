#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "nystrom/common.hpp"
#include "nystrom/nystrom.hpp"

namespace nystrom {

// NYSA container: magic "NYSA", u32 n, u32 k, k u32 indices, C (n*k f64,
// column-major), Winv (k*k f64), then a u32-length-prefixed UTF-8 JSON
// metadata blob (kernel spec, seed, tolerance, ...). All integers and floats
// little-endian.

namespace detail {
inline constexpr char kNysaMagic[4] = {'N', 'Y', 'S', 'A'};
}

inline void save_approx(const NystromApprox& approx, const std::filesystem::path& path,
                        const nlohmann::json& metadata = nlohmann::json::object()) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::uint32_t n = static_cast<std::uint32_t>(approx.n());
  const std::uint32_t k = static_cast<std::uint32_t>(approx.k());
  out.write(detail::kNysaMagic, 4);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(&k), sizeof k);
  for (Index idx : approx.lambda) {
    const std::uint32_t v = static_cast<std::uint32_t>(idx);
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  out.write(reinterpret_cast<const char*>(approx.c.data()),
            static_cast<std::streamsize>(sizeof(double) * approx.c.size()));
  out.write(reinterpret_cast<const char*>(approx.winv.data()),
            static_cast<std::streamsize>(sizeof(double) * approx.winv.size()));
  const std::string blob = metadata.dump();
  const std::uint32_t len = static_cast<std::uint32_t>(blob.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

struct LoadedApprox {
  NystromApprox approx;
  nlohmann::json metadata;
};

inline LoadedApprox load_approx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, detail::kNysaMagic, 4) != 0) {
    throw std::runtime_error(path.string() + ": not a NYSA file (bad magic)");
  }
  std::uint32_t n = 0;
  std::uint32_t k = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  in.read(reinterpret_cast<char*>(&k), sizeof k);
  if (!in || n == 0) throw std::runtime_error(path.string() + ": bad NYSA header");

  std::vector<Index> lambda(k);
  for (std::uint32_t t = 0; t < k; ++t) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    lambda[t] = static_cast<Index>(v);
  }
  Matrix c(static_cast<Index>(n), static_cast<Index>(k));
  in.read(reinterpret_cast<char*>(c.data()), static_cast<std::streamsize>(sizeof(double) * n * k));
  Matrix winv(static_cast<Index>(k), static_cast<Index>(k));
  in.read(reinterpret_cast<char*>(winv.data()),
          static_cast<std::streamsize>(sizeof(double) * k * k));
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in) throw std::runtime_error(path.string() + ": truncated NYSA payload");
  std::string blob(len, '\0');
  in.read(blob.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error(path.string() + ": truncated NYSA metadata");

  LoadedApprox out;
  out.approx = k == 0 ? NystromApprox(static_cast<Index>(n))
                      : NystromApprox(std::move(lambda), std::move(c), std::move(winv));
  out.metadata = blob.empty() ? nlohmann::json::object() : nlohmann::json::parse(blob);
  return out;
}

}  // namespace nystrom
