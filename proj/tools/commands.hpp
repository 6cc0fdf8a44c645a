#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "rlab/system.hpp"

namespace rlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitDiagnostic = 2;

/// State of one command invocation.
struct Run {
  ExperimentConfig cfg;
  System sys;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool svg = false;
  /// "key: value" lines of the structured report.
  std::ostringstream report;
  /// Written files, in write order, with their SHA-256.
  std::vector<std::pair<std::string, std::string>> files;
  int status = kExitOk;

  void write(const std::string& name, const std::string& content);
  template <class T>
  void field(const std::string& key, const T& value) {
    report << key << ": " << value << '\n';
  }
};

using Command = std::function<void(Run&)>;

/// Command name -> implementation, in the order listed by --help.
const std::vector<std::pair<std::string, Command>>& commands();

std::string sha256_hex(const std::string& data);

}  // namespace rlab::cli
