#include "gazeforge/io/map_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>

#include <json.hpp>

#include "gazeforge/error.hpp"
#include "gazeforge/io/digest.hpp"
#include "gazeforge/io/image_io.hpp"

namespace gazeforge::io {

using nlohmann::json;

std::filesystem::path sidecar_path(const std::filesystem::path& raster) {
  auto p = raster;
  return p.replace_extension(".json");
}

void write_map(const std::filesystem::path& raster, const RealMap<float>& map, const std::string& kind) {
  if (!map.allFinite()) throw Error(ErrorCode::domain, "map contains non-finite values: " + raster.string());
  std::string bytes(static_cast<std::size_t>(map.size()) * 4, '\0');
  for (Eigen::Index i = 0; i < map.size(); ++i) {
    const std::uint32_t bits = std::bit_cast<std::uint32_t>(map.data()[i]);
    for (int b = 0; b < 4; ++b) bytes[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  write_file(raster, bytes);
  const json side = {{"width", map.cols()}, {"height", map.rows()}, {"dtype", "f32le"}, {"kind", kind}};
  write_file(sidecar_path(raster), side.dump(2) + "\n");
}

void write_map(const std::filesystem::path& raster, const RealMap<double>& map, const std::string& kind) {
  write_map(raster, RealMap<float>(map.cast<float>()), kind);
}

RealMap<float> read_map(const std::filesystem::path& raster, MapHeader* header) {
  const auto side_path = sidecar_path(raster);
  MapHeader h;
  try {
    const json side = json::parse(read_file(side_path));
    h.width = side.at("width").get<int>();
    h.height = side.at("height").get<int>();
    h.dtype = side.at("dtype").get<std::string>();
    h.kind = side.value("kind", std::string("saliency"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::validation, "malformed map sidecar " + side_path.string() + ": " + e.what(),
                {side_path.string()});
  }
  if (h.dtype != "f32le") {
    throw Error(ErrorCode::validation, "unsupported dtype '" + h.dtype + "' in " + side_path.string(), {"dtype"});
  }
  if (h.width < 0 || h.height < 0) throw Error(ErrorCode::validation, "negative map size in " + side_path.string());
  const std::string bytes = read_file(raster);
  const std::size_t expected = static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height) * 4;
  if (bytes.size() != expected) {
    throw Error(ErrorCode::validation,
                "size mismatch: " + raster.string() + " has " + std::to_string(bytes.size()) + " bytes, sidecar " +
                    "declares " + std::to_string(h.width) + "x" + std::to_string(h.height) + " (" +
                    std::to_string(expected) + " bytes)",
                {raster.string()});
  }
  RealMap<float> map(h.height, h.width);
  for (Eigen::Index i = 0; i < map.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= std::uint32_t(static_cast<unsigned char>(bytes[4 * i + b])) << (8 * b);
    map.data()[i] = std::bit_cast<float>(bits);
  }
  if (header) *header = h;
  return map;
}

void export_map_png(const std::filesystem::path& path, const RealMap<double>& map, int bits) {
  if (bits != 8 && bits != 16) throw Error(ErrorCode::parameter, "PNG export supports 8 or 16 bits");
  const double top = bits == 8 ? 255.0 : 65535.0;
  Gray16 px(map.rows(), map.cols());
  for (Eigen::Index i = 0; i < map.size(); ++i) {
    const double v = std::isfinite(map.data()[i]) ? std::clamp(map.data()[i], 0.0, 1.0) : 0.0;
    px.data()[i] = static_cast<std::uint16_t>(std::lround(v * top));
  }
  write_gray_png(path, px, bits);
}

}  // namespace gazeforge::io
