#include "gazeforge/io/scanpath_io.hpp"

#include <json.hpp>

#include "gazeforge/error.hpp"
#include "gazeforge/io/digest.hpp"

namespace gazeforge::io {

using nlohmann::ordered_json;

namespace {
Part parse_part(const std::string& s, const std::string& origin) {
  if (s == "wrist") return Part::wrist;
  if (s == "clasper") return Part::clasper;
  if (s == "shaft") return Part::shaft;
  throw Error(ErrorCode::validation, origin + ": unknown part '" + s + "'", {"part"});
}
}  // namespace

std::string scanpath_to_json(const Scanpath& path) {
  ordered_json list = ordered_json::array();
  int order = 0;
  for (const auto& f : path.entries()) {
    ordered_json e;
    e["order"] = order++;
    e["instrument_id"] = f.instrument_id;
    e["part"] = to_string(f.part);
    e["row"] = f.point.row;
    e["col"] = f.point.col;
    e["weight"] = f.weight;
    list.push_back(std::move(e));
  }
  return list.dump(2) + "\n";
}

Scanpath scanpath_from_json(const std::string& text, const std::string& origin) {
  std::vector<Fixation> entries;
  try {
    const auto list = ordered_json::parse(text);
    if (!list.is_array()) throw Error(ErrorCode::validation, origin + ": expected a JSON list");
    std::vector<std::pair<int, Fixation>> ordered;
    for (const auto& e : list) {
      Fixation f;
      f.instrument_id = e.at("instrument_id").get<int>();
      f.part = parse_part(e.value("part", std::string("wrist")), origin);
      f.point = {e.at("row").get<int>(), e.at("col").get<int>()};
      f.weight = e.at("weight").get<double>();
      ordered.emplace_back(e.at("order").get<int>(), f);
    }
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      if (ordered[i].first != static_cast<int>(i)) {
        throw Error(ErrorCode::validation, origin + ": order indices must be 0..n-1", {"order"});
      }
      entries.push_back(ordered[i].second);
    }
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::validation, origin + ": malformed scanpath: " + e.what());
  }
  return Scanpath::from_ordered(std::move(entries));
}

void write_scanpath(const std::filesystem::path& path, const Scanpath& scanpath) {
  write_file(path, scanpath_to_json(scanpath));
}

Scanpath read_scanpath(const std::filesystem::path& path) { return scanpath_from_json(read_file(path), path.string()); }

}  // namespace gazeforge::io
