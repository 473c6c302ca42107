#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mfseg/grid.hpp"
#include "mfseg/transform.hpp"

namespace mfseg::io {

/// Float image file, all integers in the byte order named by byte 4:
///   bytes 0-3   "MFRW"
///   byte  4     'L' little-endian or 'B' big-endian
///   bytes 5-7   zero
///   bytes 8-11  uint32 width
///   bytes 12-15 uint32 height
///   then width * height IEEE-754 float32 values, row-major.
/// Writers always emit little-endian. Readers accept both and require a
/// square power-of-two image.
void write_image(const std::filesystem::path& path, const Image& image);
Image read_image(const std::filesystem::path& path);

/// Binary 8-bit graymap (P5, maxval 255) holding labels 1..K.
void write_mask(const std::filesystem::path& path, const Grid<std::uint8_t>& mask);
Grid<std::uint8_t> read_mask(const std::filesystem::path& path);

/// Writes text atomically enough for tests: whole string, then close.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mfseg::io
