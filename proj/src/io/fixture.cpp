#include "gazeforge/io/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gazeforge/error.hpp"
#include "gazeforge/io/dataset.hpp"
#include "gazeforge/io/digest.hpp"
#include "gazeforge/io/image_io.hpp"

namespace gazeforge::io {

namespace {

constexpr int kPartValue[4] = {0, 85, 170, 255};
constexpr int kTypeStride = 32;

struct Track {
  bool from_left = true;
  int base_row = 0;
  int x0 = 0;  // tip column at t = 0, measured from the entry edge
  int speed = 0;
  int size0 = 0;
  int growth = 0;
  int sway = 0;
  double phase = 0;
};

// std::uniform_int_distribution is implementation defined; plain modulo keeps fixtures identical
// across standard libraries.
int draw(std::mt19937_64& rng, int lo, int hi) { return lo + static_cast<int>(rng() % std::uint64_t(hi - lo + 1)); }

std::vector<Track> tracks(const FixtureSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::vector<Track> out;
  for (int i = 0; i < spec.instruments; ++i) {
    Track t;
    t.from_left = i % 2 == 0;
    t.base_row = spec.height * (i + 1) / (spec.instruments + 1);
    t.x0 = draw(rng, spec.width / 5, spec.width / 3);
    t.speed = draw(rng, 1, 6);
    t.size0 = draw(rng, 6, 10);
    t.growth = draw(rng, 0, 2);
    t.sway = draw(rng, 0, 3);
    t.phase = draw(rng, 0, 628) / 100.0;
    out.push_back(t);
  }
  return out;
}

void fill(LabelGrid& g, int r0, int c0, int rows, int cols, int value) {
  const int r1 = std::clamp(r0 + rows, 0, int(g.rows())), c1 = std::clamp(c0 + cols, 0, int(g.cols()));
  r0 = std::clamp(r0, 0, int(g.rows()));
  c0 = std::clamp(c0, 0, int(g.cols()));
  if (r1 > r0 && c1 > c0) g.block(r0, c0, r1 - r0, c1 - c0).setConstant(value);
}

}  // namespace

LabelRemap fixture_label_map() {
  LabelRemap m;
  for (int p = 0; p < 4; ++p) m.parts[kPartValue[p]] = p;
  for (int t = 0; t <= 7; ++t) m.instruments[kTypeStride * t] = t;
  return m;
}

FixtureFrame fixture_frame(const FixtureSpec& spec, int t) {
  if (spec.width < 32 || spec.height < 32) throw Error(ErrorCode::parameter, "fixture needs at least 32x32 pixels");
  if (spec.instruments < 1 || spec.instruments > 7) throw Error(ErrorCode::parameter, "fixture supports 1..7 instruments");
  FixtureFrame f{LabelGrid::Zero(spec.height, spec.width), LabelGrid::Zero(spec.height, spec.width)};
  const auto all = tracks(spec);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const Track& k = all[i];
    const int type = static_cast<int>(i) + 1;
    const int size = k.size0 + k.growth * t;
    const int centre = k.base_row + static_cast<int>(std::lround(k.sway * std::sin(k.phase + 0.9 * t)));
    const int tip = std::min(k.x0 + k.speed * t, spec.width - 2 * size - 4);
    const int jaw_h = std::max(2, size / 3), jaw_w = size / 2 + 2;

    // Geometry along the entry axis; mirrored for instruments entering from the right.
    auto paint = [&](int r0, int a0, int rows, int len, Part part) {
      const int c0 = k.from_left ? a0 : spec.width - a0 - len;
      fill(f.parts, r0, c0, rows, len, static_cast<int>(part));
      fill(f.types, r0, c0, rows, len, type);
    };
    paint(centre - 3, 0, 6, tip, Part::shaft);
    paint(centre - size / 2, tip, size, size, Part::wrist);
    paint(centre - size / 2, tip + size, jaw_h, jaw_w, Part::clasper);
    paint(centre + size - size / 2 - jaw_h, tip + size, jaw_h, jaw_w, Part::clasper);
  }
  return f;
}

void write_fixture(const std::filesystem::path& root, const std::string& seq, const FixtureSpec& spec) {
  if (spec.frames < 1) throw Error(ErrorCode::parameter, "fixture needs at least one frame");
  const auto dir = sequence_dir(root, seq);
  for (int t = 0; t < spec.frames; ++t) {
    if (std::find(spec.drop_frames.begin(), spec.drop_frames.end(), t) != spec.drop_frames.end()) continue;
    const auto f = fixture_frame(spec, t);
    const LabelGrid parts = f.parts.unaryExpr([](std::int32_t p) { return std::int32_t(kPartValue[p]); });
    const LabelGrid types = f.types * kTypeStride;
    write_label_png(dir / kPartsDir / (frame_stem(t) + ".png"), parts);
    write_label_png(dir / kInstrumentsDir / (frame_stem(t) + ".png"), types);
  }
  write_file(root / "label_map.json", label_map_to_json(fixture_label_map()));
}

}  // namespace gazeforge::io
