#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spinr/image.hpp"

namespace spinr::io {

/// Parses a binary PPM (P6, maxval 255). Throws ParseError naming the byte
/// offset of the first problem.
Image decode_ppm(std::span<const std::uint8_t> bytes);

/// Quantizes with round(clamp(v, 0, 1) * 255), halves away from zero.
std::vector<std::uint8_t> encode_ppm(const Image& image);

/// 8-bit sample for a real value, using the export rounding rule.
std::uint8_t to_byte(double value);

/// Loads P6 files, and PNG files when built with libpng. The format is
/// chosen from the file's magic bytes.
Image load(const std::filesystem::path& path);
void save(const Image& image, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace spinr::io
