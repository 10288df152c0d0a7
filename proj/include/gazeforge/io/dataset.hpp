// Sequence ingestion for the per-part / per-type mask layout:
//   <root>/instrument_dataset_<seq>/parts_masks/frameNNN.png
//   <root>/instrument_dataset_<seq>/instruments_masks/frameNNN.png
#ifndef GAZEFORGE_IO_DATASET_HPP
#define GAZEFORGE_IO_DATASET_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gazeforge/io/config.hpp"
#include "gazeforge/raster.hpp"
#include "gazeforge/saliency_gen.hpp"

namespace gazeforge::io {

inline constexpr const char* kPartsDir = "parts_masks";
inline constexpr const char* kInstrumentsDir = "instruments_masks";

struct FrameBundle {
  int frame_id = 0;
  LabelMask parts;  // 0 background, 1 shaft, 2 wrist, 3 clasper
  LabelMask types;  // 0 background, otherwise instrument type
  std::optional<RealMap<float>> saliency;
  std::optional<Scanpath> scanpath;
  std::filesystem::path parts_path;
  std::filesystem::path types_path;

  /// Combined instrument/part labels, see compose_instrument_parts.
  LabelMask instrument_parts() const { return compose_instrument_parts(parts, types); }
};

struct Sequence {
  std::vector<FrameBundle> frames;  // ascending frame_id
  std::vector<int> missing;         // gaps between the first and last frame id
};

struct LoadOptions {
  std::optional<std::filesystem::path> saliency_dir;  // frameNNN.f32
  std::optional<std::filesystem::path> scanpath_dir;  // frameNNN.json
};

std::filesystem::path sequence_dir(const std::filesystem::path& root, const std::string& seq);

/// Frame number from the digits of a file stem ("frame012" -> 12); nullopt without digits.
std::optional<int> frame_number(const std::filesystem::path& file);

std::string frame_stem(int frame_id);

/// Files with extension `ext` in `dir`, keyed and sorted by frame number.
std::vector<std::pair<int, std::filesystem::path>> frame_files(const std::filesystem::path& dir,
                                                               const std::string& ext);

/// Reads one mask and applies one remapping table (empty table: identity). Unknown ids raise a
/// validation error naming the id and the frame.
LabelMask read_mask(const std::filesystem::path& path, const std::map<int, int>& table, int frame_id,
                    int class_count = 0);

/// Loads a sequence; gaps in the frame numbering are reported through warn() and `missing`.
Sequence load_sequence(const std::filesystem::path& root, const std::string& seq, const LabelRemap& remap,
                       const LoadOptions& options = {});

/// The remapping table in effect: the config's, else <root>/label_map.json, else identity.
LabelRemap resolve_label_map(const std::filesystem::path& root, const RunConfig& config);

}  // namespace gazeforge::io

#endif  // GAZEFORGE_IO_DATASET_HPP
