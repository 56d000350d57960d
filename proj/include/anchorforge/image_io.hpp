#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace anchorforge {

/// 8-bit single-channel raster, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Binary PGM (P5, maxval 255). The header written is exactly
/// "P5\n<w> <h>\n255\n".
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_pgm(const std::filesystem::path& path);

/// 8-bit grayscale PNG through libpng. Reading rejects other color types and
/// bit depths.
void write_png(const std::filesystem::path& path, const GrayImage& img);
GrayImage read_png(const std::filesystem::path& path);

/// Dispatches on the file signature (P5 or PNG). Throws DataError for
/// missing or unsupported files.
GrayImage read_gray_image(const std::filesystem::path& path);

}  // namespace anchorforge
