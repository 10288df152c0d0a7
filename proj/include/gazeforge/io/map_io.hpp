// Raw saliency map storage: little-endian f32 raster, row-major, plus a JSON sidecar
// {width, height, dtype: "f32le", kind} sharing the raster's stem.
#ifndef GAZEFORGE_IO_MAP_IO_HPP
#define GAZEFORGE_IO_MAP_IO_HPP

#include <filesystem>
#include <string>

#include "gazeforge/raster.hpp"

namespace gazeforge::io {

struct MapHeader {
  int width = 0;
  int height = 0;
  std::string dtype = "f32le";
  std::string kind = "saliency";
};

std::filesystem::path sidecar_path(const std::filesystem::path& raster);

void write_map(const std::filesystem::path& raster, const RealMap<float>& map, const std::string& kind = "saliency");
/// Narrowing to f32 happens here; only f32 maps round-trip bit-exactly.
void write_map(const std::filesystem::path& raster, const RealMap<double>& map, const std::string& kind = "saliency");

RealMap<float> read_map(const std::filesystem::path& raster, MapHeader* header = nullptr);

/// Quantizes round(v * (2^bits - 1)) after clamping to [0, 1]; bits is 8 or 16.
void export_map_png(const std::filesystem::path& path, const RealMap<double>& map, int bits = 8);

}  // namespace gazeforge::io

#endif  // GAZEFORGE_IO_MAP_IO_HPP
