#include "cli/common.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>

#include <json.hpp>

#include "gazeforge/cli.hpp"
#include "gazeforge/error.hpp"
#include "gazeforge/io/digest.hpp"
#include "gazeforge/metrics.hpp"

namespace gazeforge::cli {

using nlohmann::ordered_json;

void add_common(CLI::App* sub, CommonArgs& a, bool out_required) {
  auto* out = sub->add_option("--out", a.out, "output directory");
  if (out_required) out->required();
  sub->add_option("--config", a.config_path, "JSON run config")->check(CLI::ExistingFile);
  sub->add_option("--seed", a.seed, "run seed");
  sub->add_option("--jobs", a.jobs, "worker threads (default: GAZE_FORGE_JOBS, else all cores)");
  sub->add_option("--delta-t", a.delta_t, "frame gap for deformation/displacement");
  sub->add_option("--sigma", a.sigma, "Gaussian width in pixels (default width/32)");
  sub->add_option("--alpha", a.alpha, "bW share of the fused saliency loss");
  sub->add_option("--lambda-de", a.lambda_de, "deformation weight");
  sub->add_option("--lambda-di", a.lambda_di, "displacement weight");
  sub->add_option("--epsilon", a.epsilon, "displacement floor");
  sub->add_option("--points-per-part", a.points_per_part, "fixations per wrist/clasper component");
  sub->add_option("--auc-splits", a.auc_splits, "AUC-Borji splits");
  sub->add_option("--auc-negatives", a.auc_negatives, "AUC-Borji negatives per split (0: one per fixation)");
}

void add_dataset(CLI::App* sub, DatasetArgs& a) {
  sub->add_option("--root", a.root, "dataset root")->required();
  sub->add_option("--seq", a.seq, "sequence id")->capture_default_str();
}

io::RunConfig merged_config(const CommonArgs& a) {
  io::RunConfig c;
  if (a.config_path) c = io::parse_config(io::read_file(*a.config_path), *a.config_path);
  if (a.seed) c.seed = *a.seed;
  if (a.delta_t) c.delta_t = *a.delta_t;
  if (a.sigma) c.sigma = *a.sigma;
  if (a.alpha) c.alpha = *a.alpha;
  if (a.lambda_de) c.lambda_de = *a.lambda_de;
  if (a.lambda_di) c.lambda_di = *a.lambda_di;
  if (a.epsilon) c.epsilon = *a.epsilon;
  if (a.points_per_part) c.points_per_part = *a.points_per_part;
  if (a.auc_splits) c.auc_splits = *a.auc_splits;
  if (a.auc_negatives) c.auc_negatives = *a.auc_negatives;
  io::validate(c);
  return c;
}

int resolve_jobs(std::optional<int> jobs) {
  if (jobs) {
    if (*jobs < 1) throw Error(ErrorCode::validation, "--jobs must be >= 1", {"jobs"});
    return *jobs;
  }
  if (const char* env = std::getenv("GAZE_FORGE_JOBS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw Error(ErrorCode::validation, "GAZE_FORGE_JOBS must be a positive integer", {"GAZE_FORGE_JOBS"});
    return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::uint64_t frame_seed(std::uint64_t seed, int frame_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(frame_id)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (std::uint64_t(words[0]) << 32) | words[1];
}

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

fs::path resolve_subdir(const fs::path& p, const std::string& name) {
  return fs::is_directory(p / name) ? p / name : p;
}

std::string CsvTable::str() const {
  std::string s;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
    s += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return s;
}

Manifest::Manifest(std::string command, const Context& ctx, fs::path out_dir)
    : command_(std::move(command)), out_dir_(std::move(out_dir)) {
  // The output location is masked so reruns into different directories stay byte-identical.
  for (std::size_t i = 0; i < ctx.argv.size(); ++i) {
    const std::string& a = ctx.argv[i];
    if (a == "--out" && i + 1 < ctx.argv.size()) {
      args_.push_back(a);
      args_.push_back("<out>");
      ++i;
    } else if (a.rfind("--out=", 0) == 0) {
      args_.push_back("--out=<out>");
    } else {
      args_.push_back(a);
    }
  }
}

void Manifest::add_input(const std::string& label, const fs::path& base, const fs::path& file) {
  const auto rel = file.lexically_relative(base).generic_string();
  inputs_[label + ":" + rel] = io::sha256_file(file);
}

void Manifest::write(const std::string& rel, const std::string& bytes) {
  io::write_file(out_dir_ / rel, bytes);
  outputs_[rel] = io::sha256_hex(bytes);
}

void Manifest::record(const std::string& rel) { outputs_[rel] = io::sha256_file(out_dir_ / rel); }

void Manifest::finish() const {
  ordered_json j;
  j["command"] = command_;
  j["tool_version"] = tool_version();
  j["args"] = args_;
  j["seed"] = seed_ ? ordered_json(*seed_) : ordered_json(nullptr);
  j["config"] = config_json_ ? ordered_json::parse(*config_json_) : ordered_json(nullptr);
  for (const auto& [k, v] : extra_) j[k] = ordered_json::parse(v);
  j["inputs"] = ordered_json::object();
  for (const auto& [k, v] : inputs_) j["inputs"][k] = v;
  j["outputs"] = ordered_json::object();
  for (const auto& [k, v] : outputs_) j["outputs"][k] = v;
  io::write_file(out_dir_ / "manifest.json", j.dump(2) + "\n");
}

std::string summary_json(const std::vector<std::string>& columns, const std::vector<std::vector<double>>& rows) {
  MetricTable table(columns);
  for (const auto& r : rows) {
    std::map<std::string, double> values;
    for (std::size_t c = 0; c < columns.size(); ++c) values[columns[c]] = r[c];
    table.add_row(0, values);
  }
  auto num = [](double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); };
  ordered_json j;
  j["frames"] = rows.size();
  j["metrics"] = ordered_json::object();
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto s = table.summary(c);
    j["metrics"][columns[c]] = {{"mean", num(s.mean)}, {"std", num(s.stddev)}, {"count", s.count}};
  }
  return j.dump(2) + "\n";
}

}  // namespace gazeforge::cli
