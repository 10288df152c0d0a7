// Grayscale PNG read/write for label masks and map visualizations.
#ifndef GAZEFORGE_IO_IMAGE_IO_HPP
#define GAZEFORGE_IO_IMAGE_IO_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>

#include "gazeforge/raster.hpp"

namespace gazeforge::io {

using Gray16 = Eigen::Array<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Reads an 8- or 16-bit grayscale PNG (palette images are expanded to their indices).
LabelGrid read_gray_png(const std::filesystem::path& path);

/// Writes 8-bit (values 0..255) or 16-bit (0..65535) grayscale.
void write_gray_png(const std::filesystem::path& path, const Gray16& pixels, int bit_depth);

void write_label_png(const std::filesystem::path& path, const LabelGrid& labels);

}  // namespace gazeforge::io

#endif  // GAZEFORGE_IO_IMAGE_IO_HPP
