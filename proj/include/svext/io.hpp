#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "svext/error.hpp"
#include "svext/estimators.hpp"
#include "svext/models.hpp"

namespace svext {

/// Full-precision decimal (17 significant digits).
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_path_csv(const Path& path, std::ostream& out) {
  out << "t,sigma,x\n";
  for (std::size_t t = 0; t < path.size(); ++t) {
    out << t << ',' << format_double(path.sigma[t]) << ',' << format_double(path.x[t]) << '\n';
  }
}

/// The columns of a `t,sigma,x` file.
struct PathColumns {
  std::vector<double> sigma;
  std::vector<double> x;
};

inline PathColumns read_path_csv(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "path csv: empty input");
  require(line.rfind("t,sigma,x", 0) == 0, "path csv: expected header t,sigma,x");
  PathColumns cols;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string t, s, x;
    require(std::getline(row, t, ',') && std::getline(row, s, ',') && std::getline(row, x, ','),
            "path csv: malformed row: " + line);
    cols.sigma.push_back(std::stod(s));
    cols.x.push_back(std::stod(x));
  }
  return cols;
}

inline PathColumns read_path_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  require(in.good(), "cannot open " + file.string());
  return read_path_csv(in);
}

inline void write_extremogram_csv(const std::vector<ExtremogramPoint>& pts, std::ostream& out) {
  out << "lag,chi_hat,stderr\n";
  for (const auto& p : pts) {
    out << p.lag << ',' << format_double(p.chi_hat) << ',' << format_double(p.stderr_) << '\n';
  }
}

inline nlohmann::json read_json_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  require(in.good(), "cannot open " + file.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid JSON in " + file.string() + ": " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  require(out.good(), "cannot write " + file.string());
  out << text;
}

}  // namespace svext
