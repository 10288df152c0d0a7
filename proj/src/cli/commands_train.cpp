// loss, schedule.
#include <json.hpp>

#include "cli/common.hpp"
#include "gazeforge/error.hpp"
#include "gazeforge/io/dataset.hpp"
#include "gazeforge/io/map_io.hpp"
#include "gazeforge/loss.hpp"

namespace gazeforge::cli {

namespace {

using nlohmann::ordered_json;

struct LossArgs {
  CommonArgs common;
  std::string pred;
  std::string gt;
  double l_seg = 0;
  double lambda_seg = 1;
  double lambda_sal = 1;
};

void loss_command(const LossArgs& a, const Context& ctx) {
  Manifest manifest("loss", ctx, a.common.out);
  const auto config = merged_config(a.common);
  manifest.set_config(config);
  const fs::path pred_dir = resolve_subdir(a.pred, "saliency");
  const fs::path gt_dir = resolve_subdir(a.gt, "saliency");
  std::map<int, fs::path> pred_files;
  for (const auto& [id, p] : io::frame_files(pred_dir, ".f32")) pred_files[id] = p;
  std::vector<RealMap<double>> pred, gt;
  std::vector<int> ids;
  for (const auto& [id, g] : io::frame_files(gt_dir, ".f32")) {
    const auto it = pred_files.find(id);
    if (it == pred_files.end()) {
      throw Error(ErrorCode::validation, "prediction missing for frame " + std::to_string(id), {std::to_string(id)});
    }
    manifest.add_input("pred", pred_dir, it->second);
    manifest.add_input("gt", gt_dir, g);
    pred.push_back(io::read_map(it->second).cast<double>());
    gt.push_back(io::read_map(g).cast<double>());
    ids.push_back(id);
  }
  if (ids.empty()) throw Error(ErrorCode::empty, "no maps in " + gt_dir.string(), {gt_dir.string()});
  if (!std::isfinite(a.l_seg) || a.l_seg < 0) throw Error(ErrorCode::validation, "--l-seg must be >= 0", {"l_seg"});
  if (!(a.lambda_seg >= 0) || !(a.lambda_sal >= 0)) {
    throw Error(ErrorCode::validation, "loss weights must be >= 0", {"lambda_seg", "lambda_sal"});
  }

  CsvTable csv({"frame", "bw", "bce", "fused"});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto r = fused_saliency_loss<double>({pred[i]}, {gt[i]}, config.alpha);
    csv.add({std::to_string(ids[i]), format_number(r.bw), format_number(r.bce), format_number(r.value)});
  }
  const auto batch = fused_saliency_loss(pred, gt, config.alpha);
  csv.add({"batch", format_number(batch.bw), format_number(batch.bce), format_number(batch.value)});
  const double total = total_loss(a.l_seg, batch.value, a.lambda_seg, a.lambda_sal);

  ordered_json j;
  j["frames"] = ids.size();
  j["alpha"] = config.alpha;
  j["bw"] = batch.bw;
  j["bce"] = batch.bce;
  j["saliency_loss"] = batch.value;
  j["segmentation_loss"] = a.l_seg;
  j["lambda_seg"] = a.lambda_seg;
  j["lambda_sal"] = a.lambda_sal;
  j["total"] = total;
  manifest.write("loss.csv", csv.str());
  manifest.write("loss.json", j.dump(2) + "\n");
  manifest.finish();
  ctx.out << "loss: total " << format_number(total) << '\n';
}

struct ScheduleArgs {
  CommonArgs common;
  long max_iter = 0;
  std::optional<double> power;
  std::optional<std::string> converged_task;
  std::optional<long> converged_at;
  long step = 1;
};

void schedule_command(const ScheduleArgs& a, const Context& ctx) {
  Manifest manifest("schedule", ctx, a.common.out);
  auto config = merged_config(a.common);
  if (a.power) config.power = *a.power;
  io::validate(config);
  manifest.set_config(config);
  if (a.max_iter < 1) throw Error(ErrorCode::validation, "--max-iter must be >= 1", {"max_iter"});
  if (a.step < 1) throw Error(ErrorCode::validation, "--step must be >= 1", {"step"});
  if (a.converged_task.has_value() != a.converged_at.has_value()) {
    throw Error(ErrorCode::usage, "--converged-task and --converged-at go together", {"converged_task", "converged_at"});
  }
  std::optional<Task> task;
  if (a.converged_task) {
    if (*a.converged_task == "segmentation" || *a.converged_task == "seg") {
      task = Task::segmentation;
    } else if (*a.converged_task == "saliency" || *a.converged_task == "sal") {
      task = Task::saliency;
    } else {
      throw Error(ErrorCode::validation, "--converged-task must be segmentation or saliency", {"converged_task"});
    }
    if (*a.converged_at < 0 || *a.converged_at > a.max_iter) {
      throw Error(ErrorCode::validation, "--converged-at must lie in [0, max-iter]", {"converged_at"});
    }
  }

  std::vector<long> iters;
  for (long it = 0; it < a.max_iter; it += a.step) iters.push_back(it);
  iters.push_back(a.max_iter);
  if (task) {
    iters.push_back(*a.converged_at);
    std::sort(iters.begin(), iters.end());
    iters.erase(std::unique(iters.begin(), iters.end()), iters.end());
  }

  TwoPhaseSchedule schedule(a.max_iter, config.power);
  CsvTable csv({"iter", "phase", "lambda_seg", "lambda_sal"});
  for (long it : iters) {
    std::optional<Task> signal;
    if (task && it == *a.converged_at) signal = task;
    const auto w = schedule.step(it, signal);
    csv.add({std::to_string(it), schedule.state().phase == Phase::one ? "1" : "2", format_number(w.segmentation),
             format_number(w.saliency)});
  }
  manifest.write("schedule.csv", csv.str());
  manifest.finish();
  ctx.out << "schedule: " << iters.size() << " row(s)\n";
}

}  // namespace

void register_train(CLI::App& app, Registry& reg) {
  {
    auto& a = reg.make<LossArgs>();
    auto* sub = app.add_subcommand("loss", "fused saliency loss over a batch of maps and the multitask total");
    add_common(sub, a.common);
    sub->add_option("--pred", a.pred, "predicted maps")->required();
    sub->add_option("--gt", a.gt, "ground-truth maps")->required();
    sub->add_option("--l-seg", a.l_seg, "segmentation loss value to combine")->capture_default_str();
    sub->add_option("--lambda-seg", a.lambda_seg)->capture_default_str();
    sub->add_option("--lambda-sal", a.lambda_sal)->capture_default_str();
    reg.add(sub, [&a](const Context& ctx) { loss_command(a, ctx); });
  }
  {
    auto& a = reg.make<ScheduleArgs>();
    auto* sub = app.add_subcommand("schedule", "two-phase task-weight curve as CSV");
    add_common(sub, a.common);
    sub->add_option("--max-iter", a.max_iter)->required();
    sub->add_option("--power", a.power, "poly power (default from config, 0.9)");
    sub->add_option("--converged-task", a.converged_task, "segmentation or saliency");
    sub->add_option("--converged-at", a.converged_at, "iteration of the convergence signal");
    sub->add_option("--step", a.step)->capture_default_str();
    reg.add(sub, [&a](const Context& ctx) { schedule_command(a, ctx); });
  }
}

}  // namespace gazeforge::cli
