// Synthetic sequences: moving, growing rectangles standing in for instruments, each with a shaft,
// a wrist and two clasper jaws, written in the on-disk dataset encoding.
#ifndef GAZEFORGE_IO_FIXTURE_HPP
#define GAZEFORGE_IO_FIXTURE_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gazeforge/io/config.hpp"
#include "gazeforge/raster.hpp"

namespace gazeforge::io {

struct FixtureSpec {
  int width = 160;
  int height = 128;
  int frames = 5;
  int instruments = 3;  // at most 7
  std::uint64_t seed = 1;
  std::vector<int> drop_frames;  // frame ids left out, to produce gaps
};

/// On-disk encoding used by the fixture: parts {0, 85, 170, 255}, instrument type t as 32 * t.
LabelRemap fixture_label_map();

struct FixtureFrame {
  LabelGrid parts;  // internal part ids
  LabelGrid types;  // internal instrument types
};

/// Internal-id masks for frame `t`, independent of which frames are written.
FixtureFrame fixture_frame(const FixtureSpec& spec, int t);

/// Writes <root>/instrument_dataset_<seq>/... and <root>/label_map.json.
void write_fixture(const std::filesystem::path& root, const std::string& seq, const FixtureSpec& spec);

}  // namespace gazeforge::io

#endif  // GAZEFORGE_IO_FIXTURE_HPP
