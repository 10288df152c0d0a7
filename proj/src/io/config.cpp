#include "gazeforge/io/config.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "gazeforge/error.hpp"
#include "gazeforge/io/digest.hpp"

namespace gazeforge::io {

using nlohmann::json;

namespace {

std::map<int, int> parse_table(const json& j, const std::string& field, std::vector<std::string>& bad) {
  std::map<int, int> table;
  if (!j.is_object()) {
    bad.push_back(field);
    return table;
  }
  for (const auto& [key, value] : j.items()) {
    try {
      std::size_t used = 0;
      const int from = std::stoi(key, &used);
      if (used != key.size() || !value.is_number_integer()) throw std::invalid_argument(key);
      table[from] = value.get<int>();
    } catch (const std::exception&) {
      bad.push_back(field + "." + key);
    }
  }
  return table;
}

LabelRemap remap_from_json(const json& j, const std::string& origin) {
  std::vector<std::string> bad;
  LabelRemap remap;
  if (!j.is_object()) throw Error(ErrorCode::validation, origin + ": label map must be a JSON object", {"label_map"});
  for (const auto& [key, value] : j.items()) {
    if (key == "parts") {
      remap.parts = parse_table(value, "label_map.parts", bad);
    } else if (key == "instruments") {
      remap.instruments = parse_table(value, "label_map.instruments", bad);
    } else {
      bad.push_back("label_map." + key);
    }
  }
  for (const auto& [from, to] : remap.parts) {
    if (to < 0 || to > 3) bad.push_back("label_map.parts." + std::to_string(from));
  }
  for (const auto& [from, to] : remap.instruments) {
    if (to < 0) bad.push_back("label_map.instruments." + std::to_string(from));
  }
  if (!bad.empty()) throw Error(ErrorCode::validation, origin + ": invalid label map entries", bad);
  return remap;
}

json table_json(const std::map<int, int>& t) {
  json j = json::object();
  for (const auto& [from, to] : t) j[std::to_string(from)] = to;
  return j;
}

}  // namespace

RunConfig parse_config(const std::string& json_text, const std::string& origin) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::validation, origin + ": not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::validation, origin + ": config must be a JSON object");

  RunConfig c;
  std::vector<std::string> bad;
  auto number = [&](const std::string& key, const json& v, double& out) {
    if (v.is_number()) {
      out = v.get<double>();
    } else {
      bad.push_back(key);
    }
  };
  auto integer = [&](const std::string& key, const json& v, int& out) {
    if (v.is_number_integer()) {
      out = v.get<int>();
    } else {
      bad.push_back(key);
    }
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "lambda_de") {
      number(key, v, c.lambda_de);
    } else if (key == "lambda_di") {
      number(key, v, c.lambda_di);
    } else if (key == "alpha") {
      number(key, v, c.alpha);
    } else if (key == "sigma") {
      double s = 0;
      number(key, v, s);
      c.sigma = s;
    } else if (key == "epsilon") {
      number(key, v, c.epsilon);
    } else if (key == "power") {
      number(key, v, c.power);
    } else if (key == "delta_t") {
      integer(key, v, c.delta_t);
    } else if (key == "points_per_part") {
      integer(key, v, c.points_per_part);
    } else if (key == "auc_splits") {
      integer(key, v, c.auc_splits);
    } else if (key == "auc_negatives") {
      integer(key, v, c.auc_negatives);
    } else if (key == "seed") {
      if (v.is_number_unsigned()) {
        c.seed = v.get<std::uint64_t>();
      } else {
        bad.push_back(key);
      }
    } else if (key == "label_map") {
      try {
        c.label_map = remap_from_json(v, origin);
      } catch (const Error& e) {
        bad.insert(bad.end(), e.details().begin(), e.details().end());
      }
    } else {
      bad.push_back(key);
    }
  }
  if (!bad.empty()) throw Error(ErrorCode::validation, origin + ": unknown or ill-typed fields", bad);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  RunConfig c = parse_config(read_file(path), path.string());
  validate(c);
  return c;
}

std::vector<std::string> invalid_fields(const RunConfig& c) {
  std::vector<std::string> bad;
  auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0; };
  if (!finite_nonneg(c.lambda_de)) bad.push_back("lambda_de");
  if (!finite_nonneg(c.lambda_di)) bad.push_back("lambda_di");
  if (!(c.alpha >= 0 && c.alpha <= 1)) bad.push_back("alpha");
  if (c.sigma && !(std::isfinite(*c.sigma) && *c.sigma > 0)) bad.push_back("sigma");
  if (!(std::isfinite(c.epsilon) && c.epsilon > 0)) bad.push_back("epsilon");
  if (!(std::isfinite(c.power) && c.power > 0)) bad.push_back("power");
  if (c.delta_t < 1) bad.push_back("delta_t");
  if (c.points_per_part < 1) bad.push_back("points_per_part");
  if (c.auc_splits < 1) bad.push_back("auc_splits");
  if (c.auc_negatives < 0) bad.push_back("auc_negatives");
  return bad;
}

void validate(const RunConfig& config) {
  const auto bad = invalid_fields(config);
  if (bad.empty()) return;
  std::string list;
  for (const auto& f : bad) list += (list.empty() ? "" : ", ") + f;
  throw Error(ErrorCode::validation, "config violates invariants: " + list, bad);
}

LabelRemap parse_label_map(const std::string& json_text, const std::string& origin) {
  try {
    return remap_from_json(json::parse(json_text), origin);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::validation, origin + ": not valid JSON: " + e.what());
  }
}

std::string label_map_to_json(const LabelRemap& remap) {
  const json j = {{"instruments", table_json(remap.instruments)}, {"parts", table_json(remap.parts)}};
  return j.dump(2) + "\n";
}

std::string config_to_json(const RunConfig& c, int indent) {
  json j;
  j["lambda_de"] = c.lambda_de;
  j["lambda_di"] = c.lambda_di;
  j["alpha"] = c.alpha;
  j["sigma"] = c.sigma ? json(*c.sigma) : json("auto");
  j["epsilon"] = c.epsilon;
  j["power"] = c.power;
  j["delta_t"] = c.delta_t;
  j["points_per_part"] = c.points_per_part;
  j["seed"] = c.seed;
  j["auc_splits"] = c.auc_splits;
  j["auc_negatives"] = c.auc_negatives;
  if (c.label_map) j["label_map"] = json::parse(label_map_to_json(*c.label_map));
  return j.dump(indent);
}

}  // namespace gazeforge::io
