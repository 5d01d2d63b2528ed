#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "autograph/error.hpp"
#include "autograph/harness.hpp"

namespace autograph::harness {

namespace fs = std::filesystem;

std::string leaderboard_csv(const fs::path& results_dir) {
  if (!fs::is_directory(results_dir)) throw LoadError("results directory not found: " + results_dir.string());
  std::vector<std::string> datasets;
  std::set<std::string> extra;
  const auto& known = solution_names();
  for (const auto& d : fs::directory_iterator(results_dir)) {
    if (!d.is_directory()) continue;
    datasets.push_back(d.path().filename().string());
    for (const auto& s : fs::directory_iterator(d.path()))
      if (s.is_directory() && std::find(known.begin(), known.end(), s.path().filename()) == known.end())
        extra.insert(s.path().filename().string());
  }
  std::sort(datasets.begin(), datasets.end());
  std::vector<std::string> solutions = known;
  solutions.insert(solutions.end(), extra.begin(), extra.end());

  std::string csv = "dataset";
  for (const auto& s : solutions) csv += "," + s + "_acc," + s + "_balacc";
  csv += "\n";
  for (const auto& d : datasets) {
    csv += d;
    for (const auto& s : solutions) {
      const fs::path p = results_dir / d / s / "scores.json";
      std::string acc = "-", bal = "-";
      if (fs::exists(p)) {
        std::ifstream in(p);
        const auto j = nlohmann::json::parse(in, nullptr, false);
        if (!j.is_discarded() && j.contains("accuracy") && j.contains("balanced_accuracy")) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.4f", j["accuracy"].get<double>());
          acc = buf;
          std::snprintf(buf, sizeof buf, "%.4f", j["balanced_accuracy"].get<double>());
          bal = buf;
        }
      }
      csv += "," + acc + "," + bal;
    }
    csv += "\n";
  }
  return csv;
}

void leaderboard(const fs::path& results_dir, const fs::path& out) {
  const std::string csv = leaderboard_csv(results_dir);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream f(out);
  if (!f) throw LoadError("cannot write " + out.string());
  f << csv;
}

}  // namespace autograph::harness
