#ifndef GAZEFORGE_IO_CONFIG_HPP
#define GAZEFORGE_IO_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gazeforge::io {

/// Dataset pixel values -> internal ids. An empty table passes values through unchanged.
struct LabelRemap {
  std::map<int, int> parts;
  std::map<int, int> instruments;

  bool empty() const { return parts.empty() && instruments.empty(); }
};

struct RunConfig {
  double lambda_de = 0.5;
  double lambda_di = 0.5;
  double alpha = 0.3;
  std::optional<double> sigma;  // unset: width / 32
  double epsilon = 1e-6;
  double power = 0.9;
  int delta_t = 1;
  int points_per_part = 1;
  std::uint64_t seed = 0;
  int auc_splits = 100;
  int auc_negatives = 0;  // 0: one negative per fixated pixel
  std::optional<LabelRemap> label_map;
};

/// Parses a JSON config. Unknown keys and ill-typed values raise a validation error listing them.
RunConfig parse_config(const std::string& json_text, const std::string& origin = "config");
RunConfig load_config(const std::filesystem::path& path);

/// Field names whose values violate the invariants; empty when the config is valid.
std::vector<std::string> invalid_fields(const RunConfig& config);
/// Throws a validation error listing every offending field.
void validate(const RunConfig& config);

LabelRemap parse_label_map(const std::string& json_text, const std::string& origin = "label map");
std::string label_map_to_json(const LabelRemap& remap);

/// Canonical JSON echo, keys sorted.
std::string config_to_json(const RunConfig& config, int indent = 2);

}  // namespace gazeforge::io

#endif  // GAZEFORGE_IO_CONFIG_HPP
