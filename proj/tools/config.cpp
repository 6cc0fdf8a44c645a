#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rlab/errors.hpp"
#include "rlab/format.hpp"

namespace rlab::cli {
namespace {

const KeySpec* find_spec(const std::string& section, const std::string& key) {
  for (const auto& s : schema())
    if (section == s.section && key == s.key) return &s;
  return nullptr;
}

std::string trim(std::string s) {
  boost::algorithm::trim(s);
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  boost::algorithm::split(out, s, [sep](char c) { return c == sep; });
  for (auto& t : out) t = trim(t);
  return out;
}

template <class T>
T parse_number(const std::string& s, const std::string& key) {
  T v{};
  const auto t = trim(s);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError("key '" + key + "': cannot parse '" + s + "'");
  return v;
}

double parse_real(const std::string& s, const std::string& key) {
  const auto t = trim(s);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != t.size() || t.empty() || !std::isfinite(v))
    throw ConfigError("key '" + key + "': cannot parse '" + s + "' as a real number");
  return v;
}

IntList parse_ints(const std::string& s, const std::string& key) {
  IntList out;
  const auto t = trim(s);
  if (const auto dots = t.find(".."); dots != std::string::npos) {
    const auto a = parse_number<std::int64_t>(t.substr(0, dots), key);
    const auto b = parse_number<std::int64_t>(t.substr(dots + 2), key);
    if (b < a) throw ConfigError("key '" + key + "': empty range '" + s + "'");
    for (auto i = a; i <= b; ++i) out.push_back(i);
    return out;
  }
  for (const auto& part : split(t, ',')) out.push_back(parse_number<std::int64_t>(part, key));
  return out;
}

std::string canonical_matrix(const std::string& s, const std::string& key) {
  std::ostringstream os;
  std::size_t cols = 0;
  const auto rows = split(s, ';');
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto entries = split(rows[r], ',');
    if (r == 0) cols = entries.size();
    if (entries.size() != cols || cols != rows.size())
      throw ConfigError("key '" + key + "': matrix must be square, rows separated by ';'");
    for (std::size_t c = 0; c < entries.size(); ++c)
      os << (c ? "," : "") << parse_number<std::int64_t>(entries[c], key);
    if (r + 1 < rows.size()) os << ';';
  }
  return os.str();
}

Value parse_value(Kind kind, const std::string& text, const std::string& key) {
  switch (kind) {
    case Kind::Bool: {
      const auto t = boost::algorithm::to_lower_copy(trim(text));
      if (t == "true" || t == "1" || t == "yes") return true;
      if (t == "false" || t == "0" || t == "no") return false;
      throw ConfigError("key '" + key + "': expected true or false, got '" + text + "'");
    }
    case Kind::Int:
      return parse_number<std::int64_t>(text, key);
    case Kind::UInt:
      return parse_number<std::uint64_t>(text, key);
    case Kind::Real:
      return parse_real(text, key);
    case Kind::Text:
      return trim(text);
    case Kind::Ints:
      return parse_ints(text, key);
    case Kind::Reals: {
      RealList out;
      for (const auto& part : split(trim(text), ',')) out.push_back(parse_real(part, key));
      return out;
    }
    case Kind::Matrix:
      return canonical_matrix(text, key);
  }
  throw ConfigError("unreachable");
}

// Line of `key` inside `section`, 0 when absent.
int line_of(const std::string& text, const std::string& section, const std::string& key) {
  std::istringstream is(text);
  std::string line, current;
  int no = 0;
  while (std::getline(is, line)) {
    ++no;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      current = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq != std::string::npos && current == section && trim(t.substr(0, eq)) == key) return no;
  }
  return 0;
}

std::string at(const std::string& origin, int line) {
  return line > 0 ? origin + ":" + std::to_string(line) + ": " : origin + ": ";
}

template <class T>
const T* get_if(const ExperimentConfig& c, const std::string& key) {
  const auto it = c.values.find(key);
  if (it == c.values.end()) return nullptr;
  const T* v = std::get_if<T>(&it->second);
  if (!v) throw ConfigError("key '" + key + "' has the wrong type");
  return v;
}

}  // namespace

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> s = {
      {"system", "preset", Kind::Text},
      {"system", "variant", Kind::Text},
      {"system", "matrix", Kind::Matrix},
      {"system", "epsilon", Kind::Real},
      {"system", "delta", Kind::Real},
      {"experiment", "point", Kind::Reals},
      {"experiment", "n", Kind::Int},
      {"experiment", "depth", Kind::Int},
      {"experiment", "epsilon_ball", Kind::Real},
      {"experiment", "K", Kind::Int},
      {"experiment", "grid_step", Kind::Real},
      {"experiment", "num_samples", Kind::UInt},
      {"experiment", "n_range", Kind::Ints},
      {"experiment", "n_list", Kind::Ints},
      {"experiment", "n_ref", Kind::Int},
      {"experiment", "n_max", Kind::Int},
      {"experiment", "box_size", Kind::Real},
      {"experiment", "num_boxes", Kind::Int},
      {"experiment", "v_margin", Kind::Real},
      {"experiment", "num_z", Kind::Int},
      {"experiment", "num_centers", Kind::Int},
      {"experiment", "include_level_n", Kind::Bool},
      {"experiment", "bins", Kind::Int},
      {"experiment", "burn_in", Kind::Int},
      {"experiment", "phi", Kind::Ints},
      {"experiment", "psi", Kind::Ints},
      {"experiment", "sampler", Kind::Text},
      {"run", "seed", Kind::UInt},
      {"run", "threads", Kind::Int},
      {"run", "deterministic", Kind::Bool},
      {"run", "output", Kind::Text},
  };
  return s;
}

std::int64_t ExperimentConfig::integer(const std::string& key, std::int64_t fallback) const {
  const auto* v = get_if<std::int64_t>(*this, key);
  return v ? *v : fallback;
}
std::uint64_t ExperimentConfig::unsigned_integer(const std::string& key,
                                                 std::uint64_t fallback) const {
  const auto* v = get_if<std::uint64_t>(*this, key);
  return v ? *v : fallback;
}
double ExperimentConfig::real(const std::string& key, double fallback) const {
  const auto* v = get_if<double>(*this, key);
  return v ? *v : fallback;
}
bool ExperimentConfig::flag(const std::string& key, bool fallback) const {
  const auto* v = get_if<bool>(*this, key);
  return v ? *v : fallback;
}
std::string ExperimentConfig::text(const std::string& key, const std::string& fallback) const {
  const auto* v = get_if<std::string>(*this, key);
  return v ? *v : fallback;
}
IntList ExperimentConfig::ints(const std::string& key, const IntList& fallback) const {
  const auto* v = get_if<IntList>(*this, key);
  return v ? *v : fallback;
}
RealList ExperimentConfig::reals(const std::string& key, const RealList& fallback) const {
  const auto* v = get_if<RealList>(*this, key);
  return v ? *v : fallback;
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(at(origin, static_cast<int>(e.line())) + e.message());
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError(at(origin, line_of(text, "", section)) + "key '" + section +
                        "' outside a section");
    }
    for (const auto& [key, node] : body) {
      const KeySpec* spec = find_spec(section, key);
      if (!spec) {
        throw ConfigError(at(origin, line_of(text, section, key)) + "unknown key '" + key +
                          "' in [" + section + "]");
      }
      try {
        cfg.values[section + "." + key] = parse_value(spec->kind, node.data(), key);
      } catch (const ConfigError& e) {
        throw ConfigError(at(origin, line_of(text, section, key)) + e.what());
      }
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void set_value(ExperimentConfig& cfg, const std::string& key, const std::string& text) {
  const auto dot = key.find('.');
  const KeySpec* spec = nullptr;
  if (dot != std::string::npos) {
    spec = find_spec(key.substr(0, dot), key.substr(dot + 1));
  } else {
    for (const auto& s : schema())
      if (key == s.key) spec = &s;
  }
  if (!spec) throw ConfigError("unknown key '" + key + "'");
  cfg.values[std::string(spec->section) + "." + spec->key] = parse_value(spec->kind, text, key);
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  set_value(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

std::string format_value(const Value& v) {
  std::ostringstream os;
  std::visit(
      [&os](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) {
          os << (x ? "true" : "false");
        } else if constexpr (std::is_same_v<T, double>) {
          os << fmt(x);
        } else if constexpr (std::is_same_v<T, IntList>) {
          for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
        } else if constexpr (std::is_same_v<T, RealList>) {
          for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << fmt(x[i]);
        } else {
          os << x;
        }
      },
      v);
  return os.str();
}

std::string to_ini(const ExperimentConfig& cfg) {
  std::ostringstream os;
  for (const char* section : {"system", "experiment", "run"}) {
    bool header = false;
    for (const auto& s : schema()) {
      if (std::string(s.section) != section) continue;
      const auto it = cfg.values.find(std::string(section) + "." + s.key);
      if (it == cfg.values.end()) continue;
      if (!header) {
        os << (os.tellp() > 0 ? "\n" : "") << '[' << section << "]\n";
        header = true;
      }
      os << s.key << " = " << format_value(it->second) << '\n';
    }
  }
  return os.str();
}

System make_system(const ExperimentConfig& cfg) {
  const std::string preset = cfg.text("system.preset", "");
  std::string variant = "toral";
  std::string matrix;
  double epsilon = 0.02;
  if (preset == "doubling") {
    matrix = "2";
  } else if (preset == "mat2122") {
    matrix = "2,1;2,2";
  } else if (preset == "mat2223") {
    matrix = "2,2;2,3";
  } else if (preset == "example3") {
    matrix = "2,0,0;0,2,2;0,2,3";
  } else if (preset == "example4") {
    variant = "perturbed_skew";
    matrix = "2,1;2,2";
  } else if (!preset.empty()) {
    throw ConfigError("unknown preset '" + preset +
                      "' (doubling, mat2122, mat2223, example3, example4)");
  }
  variant = cfg.text("system.variant", variant);
  matrix = cfg.text("system.matrix", matrix);
  epsilon = cfg.real("system.epsilon", epsilon);
  const double delta = cfg.real("system.delta", 0.1);
  if (matrix.empty()) throw ConfigError("[system] needs a preset or a matrix");

  const auto rows = split(matrix, ';');
  const int m = static_cast<int>(rows.size());
  if (m < 1 || m > 3) throw ConfigError("matrix size must be 1, 2 or 3");
  IntMatrix A(m, m);
  for (int r = 0; r < m; ++r) {
    const auto entries = split(rows[r], ',');
    for (int c = 0; c < m; ++c) A(r, c) = parse_number<std::int64_t>(entries[c], "matrix");
  }
  if (variant == "toral") return System::toral(A);
  if (variant == "perturbed_skew") return System::perturbed_skew(A, epsilon, delta);
  throw ConfigError("unknown variant '" + variant + "' (toral, perturbed_skew)");
}

}  // namespace rlab::cli
