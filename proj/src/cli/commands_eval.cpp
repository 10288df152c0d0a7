// eval-saliency, eval-seg, eval-scanpath.
#include <cmath>
#include <limits>

#include "cli/common.hpp"
#include "gazeforge/error.hpp"
#include "gazeforge/io/dataset.hpp"
#include "gazeforge/io/map_io.hpp"
#include "gazeforge/io/scanpath_io.hpp"
#include "gazeforge/loss.hpp"
#include "gazeforge/metrics.hpp"

namespace gazeforge::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct EvalArgs {
  CommonArgs common;
  std::string pred;
  std::string gt;
  std::optional<std::string> fixations;
};

/// Frames of `gt` with their counterpart in `pred`; a frame missing from `pred` is an error.
std::vector<std::tuple<int, fs::path, fs::path>> paired_frames(const fs::path& pred, const fs::path& gt,
                                                                const std::string& ext) {
  const auto gt_files = io::frame_files(gt, ext);
  if (gt_files.empty()) throw Error(ErrorCode::empty, "no " + ext + " frames in " + gt.string(), {gt.string()});
  std::map<int, fs::path> pred_files;
  for (const auto& [id, p] : io::frame_files(pred, ext)) pred_files[id] = p;
  std::vector<std::tuple<int, fs::path, fs::path>> out;
  std::vector<std::string> missing;
  for (const auto& [id, g] : gt_files) {
    const auto it = pred_files.find(id);
    if (it == pred_files.end()) {
      missing.push_back(std::to_string(id));
      continue;
    }
    out.emplace_back(id, it->second, g);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw Error(ErrorCode::validation, "prediction missing for frame(s) " + list + " in " + pred.string(), missing);
  }
  return out;
}

void write_metric_outputs(Manifest& manifest, const std::string& name, const std::vector<std::string>& columns,
                          const std::vector<int>& ids, const std::vector<std::vector<double>>& rows) {
  std::vector<std::string> header{"frame"};
  header.insert(header.end(), columns.begin(), columns.end());
  CsvTable csv(header);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<std::string> cells{std::to_string(ids[i])};
    for (double v : rows[i]) cells.push_back(format_number(v));
    csv.add(std::move(cells));
  }
  manifest.write(name + "_metrics.csv", csv.str());
  manifest.write(name + "_summary.json", summary_json(columns, rows));
}

void eval_saliency(const EvalArgs& a, const Context& ctx) {
  if (!a.common.seed) {
    throw Error(ErrorCode::usage, "eval-saliency needs an explicit --seed for AUC-Borji sampling", {"seed"});
  }
  Manifest manifest("eval-saliency", ctx, a.common.out);
  const auto config = merged_config(a.common);
  manifest.set_config(config);
  manifest.set_seed(config.seed);
  const fs::path pred_dir = resolve_subdir(a.pred, "saliency");
  const fs::path gt_dir = resolve_subdir(a.gt, "saliency");
  const fs::path fix_dir = a.fixations ? resolve_subdir(*a.fixations, "scanpath") : resolve_subdir(a.gt, "scanpath");
  const auto frames = paired_frames(pred_dir, gt_dir, ".f32");
  std::vector<int> ids;
  for (const auto& [id, p, g] : frames) {
    const fs::path fix = fix_dir / (io::frame_stem(id) + ".json");
    if (!fs::exists(fix)) throw Error(ErrorCode::validation, "no fixations for frame " + std::to_string(id) + ": " + fix.string(), {fix.string()});
    manifest.add_input("pred", pred_dir, p);
    manifest.add_input("gt", gt_dir, g);
    manifest.add_input("fixations", fix_dir, fix);
    ids.push_back(id);
  }

  const auto rows = parallel_map(resolve_jobs(a.common.jobs), frames.size(), [&](std::size_t i) {
    const auto& [id, p, g] = frames[i];
    const RealMap<double> pred = io::read_map(p).cast<double>();
    const RealMap<double> gt = io::read_map(g).cast<double>();
    if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) {
      throw Error(ErrorCode::validation, "frame " + std::to_string(id) + ": predicted and ground-truth maps differ in size");
    }
    const auto path = io::read_scanpath(fix_dir / (io::frame_stem(id) + ".json"));
    const FixationSet fix(path.entries().begin(), path.entries().end());
    std::vector<double> row{bce_loss(pred, gt).value, kNaN, kNaN, kNaN};
    if (gt.maxCoeff() > 0 && pred.maxCoeff() > 0) row[1] = similarity(pred, gt);
    if (!fix.empty()) {
      row[2] = nss(pred, fix);
      row[3] = auc_borji(pred, fix, {config.auc_splits, config.auc_negatives, frame_seed(config.seed, id)});
    }
    return row;
  });
  write_metric_outputs(manifest, "saliency", {"bce", "sim", "nss", "auc_borji"}, ids, rows);
  manifest.finish();
  ctx.out << "eval-saliency: " << rows.size() << " frame(s) evaluated\n";
}

struct SegArgs {
  CommonArgs common;
  DatasetArgs data;
  std::string pred;
  std::string target = "types";
};

void eval_seg(const SegArgs& a, const Context& ctx) {
  if (a.target != "types" && a.target != "parts") {
    throw Error(ErrorCode::validation, "--target must be 'types' or 'parts'", {"target"});
  }
  const bool types = a.target == "types";
  Manifest manifest("eval-seg", ctx, a.common.out);
  const auto config = merged_config(a.common);
  manifest.set_config(config);
  const auto remap = io::resolve_label_map(a.data.root, config);
  const auto seq = io::load_sequence(a.data.root, a.data.seq, remap);
  std::map<int, fs::path> pred_files;
  for (const auto& [id, p] : io::frame_files(a.pred, ".png")) pred_files[id] = p;
  std::vector<std::string> missing;
  std::vector<int> ids;
  for (const auto& f : seq.frames) {
    if (!pred_files.count(f.frame_id)) missing.push_back(std::to_string(f.frame_id));
    ids.push_back(f.frame_id);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw Error(ErrorCode::validation, "predicted mask missing for frame(s) " + list + " in " + a.pred, missing);
  }
  for (const auto& f : seq.frames) {
    manifest.add_input("root", a.data.root, types ? f.types_path : f.parts_path);
    manifest.add_input("pred", a.pred, pred_files.at(f.frame_id));
  }

  const auto rows = parallel_map(resolve_jobs(a.common.jobs), seq.frames.size(), [&](std::size_t i) {
    const auto& f = seq.frames[i];
    const LabelMask& gt = types ? f.types : f.parts;
    const LabelMask pred = io::read_mask(pred_files.at(f.frame_id), types ? remap.instruments : remap.parts,
                                         f.frame_id, types ? 0 : kPartSlots);
    if (!pred.same_shape(gt)) {
      throw Error(ErrorCode::validation, "frame " + std::to_string(f.frame_id) + ": predicted mask differs in size");
    }
    std::vector<double> row{dice(pred, gt, DiceMode::per_type).mean, dice(pred, gt, DiceMode::binary).mean, kNaN,
                            kNaN};
    row[2] = hausdorff_per_type(pred, gt).value_or(kNaN);
    try {
      row[3] = hausdorff(pred, gt);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::empty) throw;
    }
    return row;
  });
  write_metric_outputs(manifest, "seg",
                       {"dice_per_type", "dice_binary", "hausdorff_per_type", "hausdorff_binary"}, ids, rows);
  manifest.finish();
  ctx.out << "eval-seg: " << rows.size() << " frame(s) evaluated\n";
}

void eval_scanpath(const EvalArgs& a, const Context& ctx) {
  Manifest manifest("eval-scanpath", ctx, a.common.out);
  manifest.set_config(merged_config(a.common));
  const fs::path pred_dir = resolve_subdir(a.pred, "scanpath");
  const fs::path gt_dir = resolve_subdir(a.gt, "scanpath");
  const auto frames = paired_frames(pred_dir, gt_dir, ".json");
  std::vector<int> ids;
  for (const auto& [id, p, g] : frames) {
    manifest.add_input("pred", pred_dir, p);
    manifest.add_input("gt", gt_dir, g);
    ids.push_back(id);
  }
  const auto rows = parallel_map(resolve_jobs(a.common.jobs), frames.size(), [&](std::size_t i) {
    const auto& [id, p, g] = frames[i];
    const auto pred = io::read_scanpath(p);
    const auto gt = io::read_scanpath(g);
    if (pred.empty() || gt.empty()) return std::vector<double>{kNaN, kNaN, kNaN};
    const auto s = scanpath_accuracy(pred, gt);
    return std::vector<double>{s.top_one, s.whole, s.kendall_tau.value_or(kNaN)};
  });
  write_metric_outputs(manifest, "scanpath", {"top_one", "whole", "kendall_tau"}, ids, rows);
  manifest.finish();
  ctx.out << "eval-scanpath: " << rows.size() << " frame(s) evaluated\n";
}

}  // namespace

void register_eval(CLI::App& app, Registry& reg) {
  {
    auto& a = reg.make<EvalArgs>();
    auto* sub = app.add_subcommand("eval-saliency", "BCE, SIM, NSS and AUC-Borji of predicted maps");
    add_common(sub, a.common);
    sub->add_option("--pred", a.pred, "predicted maps (run directory or saliency/)")->required();
    sub->add_option("--gt", a.gt, "ground-truth maps (run directory or saliency/)")->required();
    sub->add_option("--fixations", a.fixations, "scanpath directory (default: the ground-truth run's scanpath/)");
    reg.add(sub, [&a](const Context& ctx) { eval_saliency(a, ctx); });
  }
  {
    auto& a = reg.make<SegArgs>();
    auto* sub = app.add_subcommand("eval-seg", "Dice and Hausdorff of predicted masks");
    add_common(sub, a.common);
    add_dataset(sub, a.data);
    sub->add_option("--pred", a.pred, "predicted masks (frameNNN.png, dataset encoding)")->required();
    sub->add_option("--target", a.target, "types or parts")->capture_default_str();
    reg.add(sub, [&a](const Context& ctx) { eval_seg(a, ctx); });
  }
  {
    auto& a = reg.make<EvalArgs>();
    auto* sub = app.add_subcommand("eval-scanpath", "first-instrument, whole-order and Kendall-tau agreement");
    add_common(sub, a.common);
    sub->add_option("--pred", a.pred, "predicted scanpaths (run directory or scanpath/)")->required();
    sub->add_option("--gt", a.gt, "ground-truth scanpaths (run directory or scanpath/)")->required();
    reg.add(sub, [&a](const Context& ctx) { eval_scanpath(a, ctx); });
  }
}

}  // namespace gazeforge::cli
