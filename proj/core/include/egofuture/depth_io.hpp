#pragma once

// "EGOD" depth files: little-endian, magic "EGOD", u32 version (1),
// u32 width, u32 height, f32 fx fy cx cy, then width*height f32 depths
// row-major. Non-positive or non-finite depths mark invalid pixels.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "egofuture/geometry.hpp"

namespace egofuture {

inline constexpr std::uint32_t kEgodVersion = 1;

std::vector<std::uint8_t> encode_egod(const DepthImage& depth);
DepthImage decode_egod(std::vector<std::uint8_t> bytes);

void write_egod(const std::filesystem::path& path, const DepthImage& depth);
DepthImage read_egod(const std::filesystem::path& path);

}  // namespace egofuture
