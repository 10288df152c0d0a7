// gen-saliency, gen-scanpath, make-fixture.
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "cli/common.hpp"
#include "gazeforge/error.hpp"
#include "gazeforge/io/dataset.hpp"
#include "gazeforge/io/fixture.hpp"
#include "gazeforge/io/map_io.hpp"
#include "gazeforge/io/scanpath_io.hpp"
#include "gazeforge/saliency_gen.hpp"

namespace gazeforge::cli {

namespace {

struct GenArgs {
  CommonArgs common;
  DatasetArgs data;
  std::optional<int> png_bits;
  std::optional<std::string> pred;  // gen-scanpath only
};

struct LoadedRun {
  io::RunConfig config;
  io::Sequence seq;
  std::vector<LabelMask> combined;  // instrument/part labels per frame
  fs::path seq_dir;
};

LoadedRun load_run(const GenArgs& a, Manifest& manifest) {
  LoadedRun run;
  run.config = merged_config(a.common);
  const auto remap = io::resolve_label_map(a.data.root, run.config);
  run.seq = io::load_sequence(a.data.root, a.data.seq, remap);
  run.seq_dir = io::sequence_dir(a.data.root, a.data.seq);
  for (const auto& f : run.seq.frames) {
    run.combined.push_back(f.instrument_parts());
    manifest.add_input("root", a.data.root, f.parts_path);
    manifest.add_input("root", a.data.root, f.types_path);
  }
  if (fs::exists(fs::path(a.data.root) / "label_map.json") && !run.config.label_map) {
    manifest.add_input("root", a.data.root, fs::path(a.data.root) / "label_map.json");
  }
  manifest.set_config(run.config);
  manifest.set_seed(run.config.seed);
  return run;
}

/// Frame t - delta_t when present; otherwise the earlier frame closest to it; the first frame
/// is its own reference.
std::size_t reference_index(const std::vector<io::FrameBundle>& frames, std::size_t i, int delta_t) {
  const int target = frames[i].frame_id - delta_t;
  std::size_t best = i;
  int best_gap = 0;
  for (std::size_t j = 0; j < i; ++j) {
    const int gap = std::abs(frames[j].frame_id - target);
    if (best == i || gap < best_gap) {
      best = j;
      best_gap = gap;
    }
  }
  return best;
}

SaliencyParams saliency_params(const io::RunConfig& c) {
  SaliencyParams p;
  p.weights = {c.lambda_de, c.lambda_di, c.epsilon};
  p.sigma = c.sigma.value_or(0.0);
  p.points_per_part = c.points_per_part;
  return p;
}

std::vector<FrameSaliency> generate_all(const LoadedRun& run, int jobs) {
  const auto params = saliency_params(run.config);
  const auto& frames = run.seq.frames;
  return parallel_map(jobs, frames.size(), [&](std::size_t i) {
    const std::size_t ref = reference_index(frames, i, run.config.delta_t);
    return generate_frame_saliency(run.combined[i], run.combined[ref], params);
  });
}

void warn_omitted(const LoadedRun& run, const std::vector<FrameSaliency>& results) {
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].omitted.empty()) continue;
    std::string ids;
    for (int id : results[i].omitted) ids += (ids.empty() ? "" : ", ") + std::to_string(id);
    warn("frame " + std::to_string(run.seq.frames[i].frame_id) + ": instrument(s) " + ids +
         " not in the reference frame, left out of the scanpath");
  }
}

void gen_saliency(const GenArgs& a, const Context& ctx) {
  if (a.png_bits && *a.png_bits != 8 && *a.png_bits != 16) {
    throw Error(ErrorCode::validation, "--png must be 8 or 16", {"png"});
  }
  Manifest manifest("gen-saliency", ctx, a.common.out);
  const auto run = load_run(a, manifest);
  const int jobs = resolve_jobs(a.common.jobs);
  const auto results = generate_all(run, jobs);
  warn_omitted(run, results);

  CsvTable dyn({"frame", "ref_frame", "instrument_id", "area_t", "area_prev", "deformation", "displacement", "weight"});
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& f = run.seq.frames[i];
    const auto& r = results[i];
    const std::string stem = io::frame_stem(f.frame_id);
    io::write_map(manifest.out_dir() / "saliency" / (stem + ".f32"), r.map);
    manifest.record("saliency/" + stem + ".f32");
    manifest.record("saliency/" + stem + ".json");
    manifest.write("scanpath/" + stem + ".json", io::scanpath_to_json(r.scanpath));
    if (a.png_bits) {
      io::export_map_png(manifest.out_dir() / "saliency_png" / (stem + ".png"), r.map, *a.png_bits);
      manifest.record("saliency_png/" + stem + ".png");
    }
    const int ref = run.seq.frames[reference_index(run.seq.frames, i, run.config.delta_t)].frame_id;
    for (const auto& d : r.dynamics) {
      dyn.add({std::to_string(f.frame_id), std::to_string(ref), std::to_string(d.instrument_id),
               format_number(d.area_t), format_number(d.area_prev), format_number(d.deformation),
               format_number(d.displacement), format_number(r.weights.at(d.instrument_id))});
    }
  }
  manifest.write("dynamics.csv", dyn.str());
  manifest.finish();
  ctx.out << "gen-saliency: " << results.size() << " frame(s) written\n";
}

/// Instrument weight as the mean predicted saliency over its wrist and clasper pixels.
std::map<int, double> predicted_weights(const LabelMask& combined, const RealMap<float>& pred) {
  std::map<int, std::pair<double, double>> acc;
  for (int r = 0; r < combined.height(); ++r) {
    for (int c = 0; c < combined.width(); ++c) {
      const auto label = combined(r, c);
      if (!is_attended(label)) continue;
      auto& [sum, count] = acc[instrument_of(label)];
      sum += pred(r, c);
      count += 1;
    }
  }
  std::map<int, double> w;
  for (const auto& [id, sc] : acc) {
    const double mean = sc.first / sc.second;
    if (std::isfinite(mean) && mean > 0) w[id] = mean;
  }
  return w;
}

void gen_scanpath(const GenArgs& a, const Context& ctx) {
  Manifest manifest("gen-scanpath", ctx, a.common.out);
  const auto run = load_run(a, manifest);
  const int jobs = resolve_jobs(a.common.jobs);
  std::vector<Scanpath> paths;
  if (!a.pred) {
    const auto results = generate_all(run, jobs);
    warn_omitted(run, results);
    for (const auto& r : results) paths.push_back(r.scanpath);
  } else {
    const fs::path dir = resolve_subdir(*a.pred, "saliency");
    const auto& frames = run.seq.frames;
    for (const auto& f : frames) {
      const auto file = dir / (io::frame_stem(f.frame_id) + ".f32");
      if (!fs::exists(file)) {
        throw Error(ErrorCode::validation, "no predicted map for frame " + std::to_string(f.frame_id) + ": " +
                                               file.string(), {file.string()});
      }
      manifest.add_input("pred", dir, file);
    }
    const int ppp = run.config.points_per_part;
    paths = parallel_map(jobs, frames.size(), [&](std::size_t i) {
      const auto file = dir / (io::frame_stem(frames[i].frame_id) + ".f32");
      const auto pred = io::read_map(file);
      if (pred.rows() != run.combined[i].height() || pred.cols() != run.combined[i].width()) {
        throw Error(ErrorCode::validation, "predicted map size differs from masks: " + file.string(), {file.string()});
      }
      const auto w = predicted_weights(run.combined[i], pred);
      return generate_scanpath(place_fixations(run.combined[i], w, ppp));
    });
  }
  for (std::size_t i = 0; i < paths.size(); ++i) {
    manifest.write("scanpath/" + io::frame_stem(run.seq.frames[i].frame_id) + ".json", io::scanpath_to_json(paths[i]));
  }
  manifest.finish();
  ctx.out << "gen-scanpath: " << paths.size() << " frame(s) written\n";
}

struct FixtureArgs {
  std::string root;
  std::string seq = "1";
  io::FixtureSpec spec;
};

void make_fixture(const FixtureArgs& a, const Context& ctx) {
  io::write_fixture(a.root, a.seq, a.spec);
  ctx.out << "make-fixture: " << a.spec.frames - static_cast<int>(a.spec.drop_frames.size()) << " frame(s) in "
          << io::sequence_dir(a.root, a.seq).string() << '\n';
}

}  // namespace

void register_gen(CLI::App& app, Registry& reg) {
  {
    auto& a = reg.make<GenArgs>();
    auto* sub = app.add_subcommand("gen-saliency", "ground-truth saliency maps and scanpaths from part masks");
    add_common(sub, a.common);
    add_dataset(sub, a.data);
    sub->add_option("--png", a.png_bits, "also export 8- or 16-bit PNG visualizations");
    reg.add(sub, [&a](const Context& ctx) { gen_saliency(a, ctx); });
  }
  {
    auto& a = reg.make<GenArgs>();
    auto* sub = app.add_subcommand("gen-scanpath", "scanpaths from part masks, optionally weighted by predicted maps");
    add_common(sub, a.common);
    add_dataset(sub, a.data);
    sub->add_option("--pred", a.pred, "predicted saliency directory (frameNNN.f32)");
    reg.add(sub, [&a](const Context& ctx) { gen_scanpath(a, ctx); });
  }
  {
    auto& a = reg.make<FixtureArgs>();
    auto* sub = app.add_subcommand("make-fixture", "write a synthetic mask sequence");
    sub->add_option("--root", a.root, "dataset root")->required();
    sub->add_option("--seq", a.seq, "sequence id")->capture_default_str();
    sub->add_option("--frames", a.spec.frames)->capture_default_str();
    sub->add_option("--width", a.spec.width)->capture_default_str();
    sub->add_option("--height", a.spec.height)->capture_default_str();
    sub->add_option("--instruments", a.spec.instruments)->capture_default_str();
    sub->add_option("--seed", a.spec.seed)->capture_default_str();
    sub->add_option("--drop", a.spec.drop_frames, "frame ids to leave out");
    reg.add(sub, [&a](const Context& ctx) { make_fixture(a, ctx); });
  }
}

}  // namespace gazeforge::cli
