/**
 * @file io.hpp
 * @brief Run configuration (flat dotted keys), tau grids, state descriptors and
 * CSV / JSON emission of result series.
 */
#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cavity/observables.hpp"

namespace cavity::io {

/// Any problem with user-supplied configuration; maps to exit status 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

inline double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
    throw ConfigError(key + ": not a finite number: '" + text + "'");
  return v;
}

inline long parse_long(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) throw ConfigError(key + ": not an integer: '" + text + "'");
  return v;
}

/// Shortest text that reads back to the same double (17 significant digits).
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// Configuration

class Config {
 public:
  /// Every accepted key with its default value.
  static const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> d = {
        {"run.command", "verify"},
        {"cavity.p", "2"},
        {"cavity.gamma", "0"},
        {"cavity.epsilon", "0.001"},
        {"cavity.L0", "1"},
        {"run.tau", "0:0.25:1"},
        {"run.state", "vacuum"},
        {"run.modes", "10"},
        {"run.upper", "10"},
        {"run.method", "closed_form"},
        {"numeric.tolerance", "1e-7"},
        {"numeric.reduced_tolerance", "1e-9"},
        {"truncation.rows", "0"},
        {"full.enable", "0"},
        {"full.K", "24"},
        {"full.steps_per_period", "200"},
        {"sweep.p", "1,2,3"},
        {"sweep.gamma", "0:0.5:1.5"},
        {"output.format", "csv"},
    };
    return d;
  }

  Config() : values_(defaults()) {}

  void set(const std::string& key, const std::string& value) {
    if (!defaults().count(key)) throw ConfigError("unknown config key '" + key + "'");
    values_[key] = trim(value);
  }

  const std::string& str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
  }
  double real(const std::string& key) const { return parse_double(key, str(key)); }
  long integer(const std::string& key) const { return parse_long(key, str(key)); }

  const std::map<std::string, std::string>& values() const { return values_; }

  /// Resolved configuration as "key = value" lines in key order.
  std::string to_text() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
  }

  ResonanceConfig resonance() const {
    ResonanceConfig r;
    r.p = static_cast<int>(integer("cavity.p"));
    r.gamma = real("cavity.gamma");
    r.epsilon = real("cavity.epsilon");
    r.L0 = real("cavity.L0");
    try {
      r.validate();
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    return r;
  }

 private:
  std::map<std::string, std::string> values_;
};

/// Applies "key = value" lines; '#' starts a comment, blank lines are skipped.
/// Lines beginning "# " are config echoes from an emitted CSV when echo is set.
inline void apply_config_text(Config& cfg, const std::string& text, bool echo = false) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string body = line;
    if (echo) {
      if (body.rfind("# ", 0) != 0) continue;
      body = body.substr(2);
    }
    if (const auto h = body.find('#'); h != std::string::npos) body = body.substr(0, h);
    body = trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    cfg.set(trim(body.substr(0, eq)), body.substr(eq + 1));
  }
}

/// Reads a config file.  An emitted CSV or JSON result file is accepted too; its
/// embedded config is used.
inline void load_config_file(Config& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const std::string head = trim(text.substr(0, std::min<std::size_t>(text.size(), 64)));
  if (!head.empty() && head[0] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.contains("config") || !j["config"].is_object()) throw ConfigError("JSON file has no config object");
    for (const auto& [k, v] : j["config"].items()) {
      if (!v.is_string()) throw ConfigError("config value for '" + k + "' must be a string");
      cfg.set(k, v.get<std::string>());
    }
    return;
  }
  const bool echo = text.rfind("# ", 0) == 0;
  apply_config_text(cfg, text, echo);
}

// ---------------------------------------------------------------------------
// Grids, lists and states

/// "start:step:stop" (stop included within half a step), a comma list, or a
/// single value.
inline std::vector<double> parse_grid(const std::string& key, const std::string& spec) {
  std::vector<double> out;
  const std::string s = trim(spec);
  if (s.empty()) throw ConfigError(key + ": empty grid");
  if (s.find(':') != std::string::npos) {
    const auto parts = split(s, ':');
    if (parts.size() != 3) throw ConfigError(key + ": grid must be start:step:stop");
    const double a = parse_double(key, parts[0]), h = parse_double(key, parts[1]), b = parse_double(key, parts[2]);
    if (!(h > 0.0)) throw ConfigError(key + ": grid step must be positive");
    if (b < a) throw ConfigError(key + ": grid stop precedes start");
    const long n = static_cast<long>(std::floor((b - a) / h + 0.5));
    if (n > 1000000) throw ConfigError(key + ": grid too long");
    for (long i = 0; i <= n; ++i) out.push_back(a + i * h);
  } else {
    for (const auto& part : split(s, ',')) out.push_back(parse_double(key, part));
  }
  if (out.empty()) throw ConfigError(key + ": empty grid");
  return out;
}

inline std::vector<double> parse_tau_grid(const std::string& spec) {
  std::vector<double> g = parse_grid("run.tau", spec);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] < 0.0) throw ConfigError("run.tau: slow times must be nonnegative");
    if (i > 0 && g[i] <= g[i - 1]) throw ConfigError("run.tau: slow times must increase");
  }
  return g;
}

/// vacuum | fock:mode=M,N=X | coherent:mode=M,alpha=A,phi=F | thermal:T=X,cutoff=N
inline InitialState parse_state(const std::string& spec) {
  const std::string s = trim(spec);
  const auto colon = s.find(':');
  const std::string name = trim(s.substr(0, colon));
  std::map<std::string, std::string> params;
  if (colon != std::string::npos) {
    for (const auto& kv : split(s.substr(colon + 1), ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("run.state: expected name=value in '" + kv + "'");
      params[trim(kv.substr(0, eq))] = trim(kv.substr(eq + 1));
    }
  }
  auto take = [&](const std::string& k, const std::string& def) {
    const auto it = params.find(k);
    if (it == params.end()) return def;
    std::string v = it->second;
    params.erase(it);
    return v;
  };
  auto done = [&] {
    if (!params.empty()) throw ConfigError("run.state: unknown parameter '" + params.begin()->first + "' for " + name);
  };
  try {
    if (name == "vacuum") {
      done();
      return InitialState::vacuum();
    }
    if (name == "fock") {
      const long mode = parse_long("run.state", take("mode", "1"));
      const double N = parse_double("run.state", take("N", "1"));
      done();
      return InitialState::fock({{mode, N}});
    }
    if (name == "coherent") {
      const long mode = parse_long("run.state", take("mode", "1"));
      const double A = parse_double("run.state", take("alpha", "1"));
      const double phi = parse_double("run.state", take("phi", "0"));
      done();
      return InitialState::coherent(mode, std::polar(A, phi));
    }
    if (name == "thermal") {
      const double T = parse_double("run.state", take("T", "1"));
      const long cutoff = parse_long("run.state", take("cutoff", "256"));
      done();
      return InitialState::thermal(T, cutoff);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("run.state: ") + e.what());
  }
  throw ConfigError("run.state: unknown state '" + name + "'");
}

// ---------------------------------------------------------------------------
// Result series

using Cell = std::variant<double, std::string>;

/// Rectangular table with named columns; rows are emitted in insertion order.
struct Series {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::logic_error("Series::add: row width does not match the header");
    rows.push_back(std::move(row));
  }
  bool operator==(const Series&) const = default;
};

inline std::string cell_text(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) return format_double(*d);
  return std::get<std::string>(c);
}

/// CSV with the resolved config as leading "# key = value" lines.
inline void emit_csv(const Series& s, const Config& cfg, std::ostream& out) {
  if (s.columns.empty()) throw std::invalid_argument("emit_csv: empty series");
  std::istringstream conf(cfg.to_text());
  std::string line;
  while (std::getline(conf, line)) out << "# " << line << "\n";
  for (std::size_t i = 0; i < s.columns.size(); ++i) out << (i ? "," : "") << s.columns[i];
  out << "\n";
  for (const auto& r : s.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << cell_text(r[i]);
    out << "\n";
  }
}

/// JSON object {"config": {...}, "columns": [...], "data": {column: [...]}}.
inline void emit_json(const Series& s, const Config& cfg, std::ostream& out) {
  if (s.columns.empty()) throw std::invalid_argument("emit_json: empty series");
  // Numbers go out as 17-digit text so the bytes do not depend on the JSON
  // library's float printer.
  out << "{\n  \"config\": {";
  bool first = true;
  for (const auto& [k, v] : cfg.values()) {
    out << (first ? "\n" : ",\n") << "    " << nlohmann::json(k).dump() << ": " << nlohmann::json(v).dump();
    first = false;
  }
  out << "\n  },\n  \"columns\": [";
  for (std::size_t i = 0; i < s.columns.size(); ++i) out << (i ? ", " : "") << nlohmann::json(s.columns[i]).dump();
  out << "],\n  \"data\": {";
  for (std::size_t c = 0; c < s.columns.size(); ++c) {
    out << (c ? ",\n" : "\n") << "    " << nlohmann::json(s.columns[c]).dump() << ": [";
    for (std::size_t r = 0; r < s.rows.size(); ++r) {
      const Cell& cell = s.rows[r][c];
      out << (r ? ", " : "");
      if (const double* d = std::get_if<double>(&cell)) {
        if (std::isfinite(*d)) out << format_double(*d);
        else out << "null";
      } else {
        out << nlohmann::json(std::get<std::string>(cell)).dump();
      }
    }
    out << "]";
  }
  out << "\n  }\n}\n";
}

inline void emit(const Series& s, const Config& cfg, const std::string& format, std::ostream& out) {
  if (format == "csv") emit_csv(s, cfg, out);
  else if (format == "json") emit_json(s, cfg, out);
  else throw ConfigError("unknown output format '" + format + "'");
}

/// Reads an emitted CSV back: the embedded config and the table.  Cells that
/// parse completely as numbers come back as doubles.
inline std::pair<Config, Series> read_csv(std::istream& in) {
  Config cfg;
  Series s;
  std::string line, conf;
  bool header = false;
  while (std::getline(in, line)) {
    if (!header && line.rfind("# ", 0) == 0) {
      conf += line.substr(2) + "\n";
      continue;
    }
    if (!header) {
      s.columns = split(line, ',');
      header = true;
      continue;
    }
    std::vector<Cell> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (!cell.empty() && end == cell.c_str() + cell.size()) row.emplace_back(v);
      else row.emplace_back(cell);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    s.add(std::move(row));
  }
  apply_config_text(cfg, conf);
  return {cfg, s};
}

} // namespace cavity::io
