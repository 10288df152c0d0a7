// Plumbing shared by the subcommands: argument structs, config merging, worker pool, CSV and
// manifest writers.
#ifndef GAZEFORGE_CLI_COMMON_HPP
#define GAZEFORGE_CLI_COMMON_HPP

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gazeforge/io/config.hpp"

namespace gazeforge::cli {

namespace fs = std::filesystem;

struct Context {
  std::vector<std::string> argv;  // as given, without the program name
  std::ostream& out;
  std::ostream& err;
};

using Action = std::function<void(const Context&)>;

/// Subcommands register their CLI11 node, the action to run when it is selected, and the
/// argument storage the options bind into.
class Registry {
 public:
  template <typename T>
  T& make() {
    auto p = std::make_shared<T>();
    storage_.push_back(p);
    return *p;
  }
  void add(CLI::App* sub, Action action) { actions_.emplace_back(sub, std::move(action)); }
  const std::vector<std::pair<CLI::App*, Action>>& actions() const { return actions_; }

 private:
  std::vector<std::shared_ptr<void>> storage_;
  std::vector<std::pair<CLI::App*, Action>> actions_;
};

struct CommonArgs {
  std::optional<std::string> config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<int> delta_t;
  std::optional<double> sigma;
  std::optional<double> alpha;
  std::optional<double> lambda_de;
  std::optional<double> lambda_di;
  std::optional<double> epsilon;
  std::optional<int> points_per_part;
  std::optional<int> auc_splits;
  std::optional<int> auc_negatives;
};

struct DatasetArgs {
  std::string root;
  std::string seq = "1";
};

/// --config, --out, --seed, --jobs and every config override flag.
void add_common(CLI::App* sub, CommonArgs& args, bool out_required = true);
void add_dataset(CLI::App* sub, DatasetArgs& args);

/// Config file, then flag overrides, then invariant validation.
io::RunConfig merged_config(const CommonArgs& args);

/// --jobs, else GAZE_FORGE_JOBS, else the hardware thread count.
int resolve_jobs(std::optional<int> jobs);

/// Independent per-frame stream seed derived from the run seed.
std::uint64_t frame_seed(std::uint64_t seed, int frame_id);

/// Shortest round-trippable-enough decimal; NaN becomes an empty CSV field.
std::string format_number(double v);

/// `p/name` when that directory exists, else `p` (accepts a run directory or the subdirectory).
fs::path resolve_subdir(const fs::path& p, const std::string& name);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; results keep index order and the first
/// exception (by index) is rethrown after all workers stop.
template <typename Fn>
auto parallel_map(int jobs, std::size_t n, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Collects everything a run reads and writes, then writes manifest.json beside the outputs.
class Manifest {
 public:
  Manifest(std::string command, const Context& ctx, fs::path out_dir);

  void set_config(const io::RunConfig& config) { config_json_ = io::config_to_json(config, -1); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void set_extra(const std::string& key, const std::string& json_value) { extra_[key] = json_value; }
  /// Digest of an input file, keyed "<label>:<path relative to base>".
  void add_input(const std::string& label, const fs::path& base, const fs::path& file);

  const fs::path& out_dir() const { return out_dir_; }
  /// Writes bytes under the output directory and records the digest.
  void write(const std::string& rel, const std::string& bytes);
  /// Records a file some other writer already put under the output directory.
  void record(const std::string& rel);

  void finish() const;

 private:
  std::string command_;
  std::vector<std::string> args_;
  fs::path out_dir_;
  std::optional<std::string> config_json_;
  std::optional<std::uint64_t> seed_;
  std::map<std::string, std::string> inputs_;
  std::map<std::string, std::string> outputs_;
  std::map<std::string, std::string> extra_;
};

/// {"frames": n, "metrics": {column: {mean, std, count}}} for a per-frame metric table.
std::string summary_json(const std::vector<std::string>& columns, const std::vector<std::vector<double>>& rows);

void register_gen(CLI::App& app, Registry& reg);
void register_eval(CLI::App& app, Registry& reg);
void register_train(CLI::App& app, Registry& reg);
void register_blocks(CLI::App& app, Registry& reg);

}  // namespace gazeforge::cli

#endif  // GAZEFORGE_CLI_COMMON_HPP
