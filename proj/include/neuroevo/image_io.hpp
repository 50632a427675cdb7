#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>

#include "neuroevo/phenotype.hpp"

namespace neuroevo {

// Decodes an 8-bit PNG (gray, gray+alpha, RGB, RGBA, palette) or an
// uncompressed 8/24/32-bit BMP into grayscale in [0, 1]. The container is
// detected from the file signature, not the extension.
ImageMatrix load_image(const std::filesystem::path& path);

// Luminance 0.299 R + 0.587 G + 0.114 B, exact for gray pixels.
double luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept;

// Writers for 8-bit data, `channels` is 1 (gray) or 3 (RGB), rows top-down.
void write_png(const std::filesystem::path& path, std::size_t width, std::size_t height, int channels,
               std::span<const std::uint8_t> data);
void write_bmp(const std::filesystem::path& path, std::size_t width, std::size_t height, int channels,
               std::span<const std::uint8_t> data);

} // namespace neuroevo
