#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rlab/system.hpp"

namespace rlab::cli {

using IntList = std::vector<std::int64_t>;
using RealList = std::vector<double>;
using Value = std::variant<bool, std::int64_t, std::uint64_t, double, std::string, IntList, RealList>;

enum class Kind { Bool, Int, UInt, Real, Text, Ints, Reals, Matrix };

struct KeySpec {
  const char* section;
  const char* key;
  Kind kind;
};

/// Every accepted key. Bare keys on --set resolve through this table, so
/// names are unique across sections.
const std::vector<KeySpec>& schema();

/// Parsed configuration: "section.key" -> typed value. Matrices are kept as
/// their canonical "a,b;c,d" text.
struct ExperimentConfig {
  std::map<std::string, Value> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }

  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const;
  double real(const std::string& key, double fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  IntList ints(const std::string& key, const IntList& fallback) const;
  RealList reals(const std::string& key, const RealList& fallback) const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Reads INI text. `origin` names the source in error messages.
ExperimentConfig parse_config(const std::string& text, const std::string& origin);
ExperimentConfig load_config(const std::string& path);

/// Applies one "key=value" override; key is "section.key" or a bare key.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

/// Sets a typed value from text, validating the key.
void set_value(ExperimentConfig& cfg, const std::string& key, const std::string& text);

/// Canonical INI text; parse_config(to_ini(c)) == c.
std::string to_ini(const ExperimentConfig& cfg);

std::string format_value(const Value& v);

/// The system described by the [system] block.
System make_system(const ExperimentConfig& cfg);

}  // namespace rlab::cli
