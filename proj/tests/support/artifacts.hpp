#pragma once

// Snapshot of a run directory for determinism checks. Wall-clock fields are
// the only content allowed to differ between two identical runs, so they are
// stripped: timing.csv and summary.txt are skipped and "wall_time_s" keys are
// removed from JSON artifacts.

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace nnreach::artifacts {

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::map<std::string, std::string> deterministic_artifacts(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name == "timing.csv" || name == "summary.txt") continue;
    std::string content = slurp(e.path());
    if (e.path().extension() == ".json") {
      auto j = nlohmann::json::parse(content);
      if (j.is_object()) j.erase("wall_time_s");
      content = j.dump();
    }
    out.emplace(fs::relative(e.path(), root).generic_string(), std::move(content));
  }
  return out;
}

}  // namespace nnreach::artifacts
