#pragma once

// Model state file, all integers and reals little-endian:
//
//   "IDSX"                      magic
//   u16   version               (kSnapshotVersion)
//   u32   plane count N
//   f64   v_in, v_dd, r_res, r_x, delta      readout
//   f64   v0, t0; u32 steps                   pulse
//   f64   epsilon_weight
//   N x { u32 rows, u32 cols,
//         f64 r_on, r_off, d, mu_v, r_couple,
//         f64 x_lo, x_hi, f64 y_lo, y_hi,
//         u8 rectify }
//   N x rows*cols f64 w, row-major
//   u32   CRC-32 (IEEE) of every preceding byte

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ids/alm.hpp"

namespace ids {

inline constexpr std::uint16_t kSnapshotVersion = 1;

std::vector<std::uint8_t> encode_model(const Model& model);

/// Throws SnapshotError on any defect; never returns a partially decoded model.
Model decode_model(std::span<const std::uint8_t> bytes);

/// Writes through a temporary file and renames it into place.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

}  // namespace ids
