#ifndef GAZEFORGE_IO_SCANPATH_IO_HPP
#define GAZEFORGE_IO_SCANPATH_IO_HPP

#include <filesystem>
#include <string>

#include "gazeforge/saliency_gen.hpp"

namespace gazeforge::io {

/// JSON list of {order, instrument_id, part, row, col, weight}, two-space indented.
std::string scanpath_to_json(const Scanpath& path);
Scanpath scanpath_from_json(const std::string& text, const std::string& origin = "scanpath");

void write_scanpath(const std::filesystem::path& path, const Scanpath& scanpath);
Scanpath read_scanpath(const std::filesystem::path& path);

}  // namespace gazeforge::io

#endif  // GAZEFORGE_IO_SCANPATH_IO_HPP
