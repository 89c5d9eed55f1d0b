#include <algorithm>
#include <fstream>
#include <sstream>

#include "phaseflow/cli.hpp"

namespace phaseflow::cli {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// `<label>.<kind>.csv` -> (label, kind)
std::pair<std::string, std::string> parts(const std::filesystem::path& p) {
  const std::string stem = p.stem().string();
  const auto dot = stem.rfind('.');
  if (dot == std::string::npos) return {stem, ""};
  return {stem.substr(0, dot), stem.substr(dot + 1)};
}

}  // namespace

std::filesystem::path export_plotdata(const std::filesystem::path& run_dir) {
  if (!std::filesystem::is_directory(run_dir)) throw ConfigError("rundir", "not a directory: " + run_dir.string());
  if (!std::filesystem::exists(run_dir / "summary.json"))
    throw ConfigError("rundir", "no summary.json in " + run_dir.string() + " (not a run directory)");

  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(run_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv" && entry.path().filename() != "plotdata.csv")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  const auto target = run_dir / "plotdata.csv";
  std::ofstream out(target);
  if (!out) throw ConfigError("rundir", "cannot write " + target.string());
  out << "treatment,table,t,quantity,value\n";
  for (const auto& path : files) {
    std::ifstream in(path);
    std::string line;
    if (!std::getline(in, line)) continue;
    const auto header = split(line);
    const auto [label, table] = parts(path);

    if (table == "moments") {
      // t,n,k,value,flavor[,closure]
      while (std::getline(in, line)) {
        const auto c = split(line);
        if (c.size() < 4) continue;
        out << label << ",moments," << c[0] << ",x" << c[1] << "p" << c[2] << ',' << c[3] << '\n';
      }
    } else if (path.filename() == "compare.csv") {
      // t,n,k,<label>...
      while (std::getline(in, line)) {
        const auto c = split(line);
        for (std::size_t j = 3; j < c.size() && j < header.size(); ++j)
          if (!c[j].empty()) out << header[j] << ",compare," << c[0] << ",x" << c[1] << "p" << c[2] << ',' << c[j] << '\n';
      }
    } else if (table == "blocks") {
      // system,xbar,pbar,cxx,block,lambda; the block index stands in for t
      while (std::getline(in, line)) {
        const auto c = split(line);
        if (c.size() < 6) continue;
        out << label << ",blocks," << c[4] << ",lambda[" << c[0] << " xbar=" << c[1] << " pbar=" << c[2]
            << " cxx=" << c[3] << "]," << c[5] << '\n';
      }
    } else if (!header.empty() && header[0] == "t") {
      // wide tables: diagnostics and trajectories
      while (std::getline(in, line)) {
        const auto c = split(line);
        for (std::size_t j = 1; j < c.size() && j < header.size(); ++j)
          if (!c[j].empty()) out << label << ',' << table << ',' << c[0] << ',' << header[j] << ',' << c[j] << '\n';
      }
    }
  }
  return target;
}

}  // namespace phaseflow::cli
