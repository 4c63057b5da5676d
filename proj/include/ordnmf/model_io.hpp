#pragma once

#include <cstdint>
#include <filesystem>

#include "ordnmf/variational.hpp"

namespace ordnmf {

// Binary model file, little-endian IEEE-754:
//   "ONMF", u32 version, u64 U, u64 I, u64 K, u32 V,
//   f64 alpha_w, f64 alpha_h, f64 theta[V], f64 user_rate[U], f64 item_rate[I],
//   f64 W shape[U*K], f64 W rate[U*K], f64 H shape[I*K], f64 H rate[I*K]
// Matrices are row-major. Reloading reproduces every cached moment bit-exactly.
inline constexpr std::uint32_t kModelFileVersion = 1;

void write_model(const std::filesystem::path& path, const VariationalState& state);
VariationalState read_model(const std::filesystem::path& path);

}  // namespace ordnmf
