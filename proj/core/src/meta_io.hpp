#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "swda/error.hpp"

namespace swda::detail {

using MetaMap = std::map<std::string, std::string>;

inline std::string fmt_exact(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

/// `key = value` lines; blank lines and lines starting with '#' are skipped.
inline MetaMap read_meta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  MetaMap kv;
  for (std::string line; std::getline(in, line);) {
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(path.string() + ": malformed line '" + line + "'");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline double meta_double(const MetaMap& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw FormatError("metadata missing '" + key + "'");
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw FormatError("metadata '" + key + "' is not a number");
  }
}

}  // namespace swda::detail
