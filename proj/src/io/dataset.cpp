#include "gazeforge/io/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>

#include "gazeforge/error.hpp"
#include "gazeforge/io/digest.hpp"
#include "gazeforge/io/image_io.hpp"
#include "gazeforge/io/map_io.hpp"
#include "gazeforge/io/scanpath_io.hpp"

namespace gazeforge::io {

namespace fs = std::filesystem;

fs::path sequence_dir(const fs::path& root, const std::string& seq) { return root / ("instrument_dataset_" + seq); }

std::optional<int> frame_number(const fs::path& file) {
  const std::string stem = file.stem().string();
  // Last run of digits, so "seq2_frame010" gives 10.
  auto end = stem.find_last_of("0123456789");
  if (end == std::string::npos) return std::nullopt;
  auto begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1]))) --begin;
  const std::string digits = stem.substr(begin, end - begin + 1);
  if (digits.size() > 9) return std::nullopt;
  return std::stoi(digits);
}

std::string frame_stem(int frame_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame%03d", frame_id);
  return buf;
}

std::vector<std::pair<int, fs::path>> frame_files(const fs::path& dir, const std::string& ext) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::io, "not a directory: " + dir.string(), {dir.string()});
  std::vector<std::pair<int, fs::path>> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ext) continue;
    const auto id = frame_number(entry.path());
    if (!id) continue;
    out.emplace_back(*id, entry.path());
  }
  std::sort(out.begin(), out.end());
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].first == out[i - 1].first) {
      throw Error(ErrorCode::validation,
                  "duplicate frame id " + std::to_string(out[i].first) + ": " + out[i - 1].second.string() + " and " +
                      out[i].second.string(),
                  {out[i].second.string()});
    }
  }
  return out;
}

LabelMask read_mask(const fs::path& path, const std::map<int, int>& table, int frame_id, int class_count) {
  LabelGrid raw = read_gray_png(path);
  if (!table.empty()) {
    std::set<int> unknown;
    for (Eigen::Index i = 0; i < raw.size(); ++i) {
      const auto it = table.find(raw.data()[i]);
      if (it == table.end()) {
        unknown.insert(raw.data()[i]);
      } else {
        raw.data()[i] = it->second;
      }
    }
    if (!unknown.empty()) {
      std::string ids;
      for (int u : unknown) ids += (ids.empty() ? "" : ", ") + std::to_string(u);
      throw Error(ErrorCode::validation,
                  "frame " + std::to_string(frame_id) + ": unknown label id " + ids + " in " + path.string(),
                  {"frame " + std::to_string(frame_id), ids});
    }
  }
  try {
    return LabelMask(std::move(raw), class_count);
  } catch (const Error& e) {
    throw Error(ErrorCode::validation, "frame " + std::to_string(frame_id) + ": " + e.what() + " in " + path.string(),
                {"frame " + std::to_string(frame_id)});
  }
}

Sequence load_sequence(const fs::path& root, const std::string& seq, const LabelRemap& remap,
                       const LoadOptions& options) {
  const fs::path dir = sequence_dir(root, seq);
  if (!fs::is_directory(dir)) throw Error(ErrorCode::io, "sequence directory not found: " + dir.string(), {dir.string()});
  const auto parts = frame_files(dir / kPartsDir, ".png");
  const auto types = frame_files(dir / kInstrumentsDir, ".png");
  std::map<int, fs::path> type_by_id(types.begin(), types.end());

  Sequence out;
  for (const auto& [id, path] : parts) {
    const auto t = type_by_id.find(id);
    if (t == type_by_id.end()) {
      throw Error(ErrorCode::validation, "frame " + std::to_string(id) + " has a parts mask but no type mask",
                  {path.string()});
    }
    FrameBundle b;
    b.frame_id = id;
    b.parts_path = path;
    b.types_path = t->second;
    b.parts = read_mask(path, remap.parts, id, kPartSlots);
    b.types = read_mask(t->second, remap.instruments, id);
    type_by_id.erase(t);
    if (!b.parts.same_shape(b.types)) {
      throw Error(ErrorCode::validation, "frame " + std::to_string(id) + ": parts and type masks differ in size",
                  {path.string()});
    }
    if (!out.frames.empty() && !b.parts.same_shape(out.frames.front().parts)) {
      throw Error(ErrorCode::validation,
                  "inconsistent dimensions within sequence " + seq + ": frame " + std::to_string(id) + " is " +
                      std::to_string(b.parts.width()) + "x" + std::to_string(b.parts.height()) + ", frame " +
                      std::to_string(out.frames.front().frame_id) + " is " +
                      std::to_string(out.frames.front().parts.width()) + "x" +
                      std::to_string(out.frames.front().parts.height()),
                  {path.string()});
    }
    if (options.saliency_dir) {
      const fs::path m = *options.saliency_dir / (frame_stem(id) + ".f32");
      if (fs::exists(m)) {
        b.saliency = read_map(m);
        if (b.saliency->rows() != b.parts.height() || b.saliency->cols() != b.parts.width()) {
          throw Error(ErrorCode::validation, "saliency map size differs from masks: " + m.string(), {m.string()});
        }
      }
    }
    if (options.scanpath_dir) {
      const fs::path s = *options.scanpath_dir / (frame_stem(id) + ".json");
      if (fs::exists(s)) b.scanpath = read_scanpath(s);
    }
    out.frames.push_back(std::move(b));
  }
  if (!type_by_id.empty()) {
    throw Error(ErrorCode::validation,
                "frame " + std::to_string(type_by_id.begin()->first) + " has a type mask but no parts mask",
                {type_by_id.begin()->second.string()});
  }
  if (out.frames.empty()) throw Error(ErrorCode::empty, "no frames found in " + dir.string(), {dir.string()});

  for (std::size_t i = 1; i < out.frames.size(); ++i) {
    for (int id = out.frames[i - 1].frame_id + 1; id < out.frames[i].frame_id; ++id) out.missing.push_back(id);
  }
  if (!out.missing.empty()) {
    std::string ids;
    for (int m : out.missing) ids += (ids.empty() ? "" : ", ") + std::to_string(m);
    warn("sequence " + seq + ": missing frame(s) " + ids);
  }
  return out;
}

LabelRemap resolve_label_map(const fs::path& root, const RunConfig& config) {
  if (config.label_map) return *config.label_map;
  const fs::path file = root / "label_map.json";
  if (fs::exists(file)) return parse_label_map(read_file(file), file.string());
  return {};
}

}  // namespace gazeforge::io
