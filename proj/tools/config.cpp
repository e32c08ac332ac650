#include "config.hpp"

#include <cctype>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace kfbias::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    fail(line, "key '" + key + "': expected a number, got '" + v + "'");
  }
}

long long parse_int(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    fail(line, "key '" + key + "': expected an integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail(line, "key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> items;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    items.push_back(trim(item));
  }
  return items;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ScenarioConfig parse_config_text(const std::string& text) {
  ScenarioConfig c;
  bool kind_seen = false, theta0_seen = false, q_seen = false, r_seen = false;
  bool horizon_seen = false, seed_seen = false, check_times_seen = false;

  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;

    if (s.front() == '[') {
      if (s.back() != ']') fail(line, "malformed section header '" + s + "'");
      section = s.substr(1, s.size() - 2);
      if (section != "model" && section != "bias" && section != "run" &&
          section != "output") {
        fail(line, "unknown section [" + section + "]");
      }
      continue;
    }

    const std::size_t eq = s.find('=');
    if (eq == std::string::npos) fail(line, "expected 'key = value', got '" + s + "'");
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    if (key.empty() || val.empty()) fail(line, "empty key or value");

    if (section == "model") {
      if (key == "kind") {
        if (kind_seen) fail(line, "duplicate key 'kind'");
        if (val != "ar1" && val != "tanh") {
          fail(line, "key 'kind': unknown model kind '" + val + "'");
        }
        c.kind = val;
        kind_seen = true;
      } else if (key == "phi0" || key == "theta0") {
        if (theta0_seen) fail(line, "duplicate true-parameter key");
        c.theta0 = parse_double(val, line, key);
        theta0_seen = true;
        // the key name must match the model kind; checked after the parse
        if (kind_seen && ((c.kind == "ar1" && key != "phi0") ||
                          (c.kind == "tanh" && key != "theta0"))) {
          fail(line, "key '" + key + "' does not belong to model kind '" +
                         c.kind + "'");
        }
      } else if (key == "q") {
        if (q_seen) fail(line, "duplicate key 'q'");
        c.q = parse_double(val, line, key);
        q_seen = true;
      } else if (key == "r") {
        if (r_seen) fail(line, "duplicate key 'r'");
        c.r = parse_double(val, line, key);
        r_seen = true;
      } else {
        fail(line, "unknown key '" + key + "' in [model]");
      }
    } else if (section == "bias") {
      if (key == "epsilon") {
        if (c.epsilon) fail(line, "duplicate key 'epsilon'");
        c.epsilon = parse_double(val, line, key);
      } else if (key == "theta") {
        if (c.theta) fail(line, "duplicate key 'theta'");
        c.theta = parse_double(val, line, key);
      } else {
        fail(line, "unknown key '" + key + "' in [bias]");
      }
    } else if (section == "run") {
      if (key == "horizon") {
        if (horizon_seen) fail(line, "duplicate key 'horizon'");
        const long long T = parse_int(val, line, key);
        if (T < 1) fail(line, "key 'horizon': must be >= 1");
        c.horizon = static_cast<int>(T);
        horizon_seen = true;
      } else if (key == "seed") {
        if (seed_seen) fail(line, "duplicate key 'seed'");
        const long long sd = parse_int(val, line, key);
        if (sd < 0) fail(line, "key 'seed': must be >= 0");
        c.seed = static_cast<std::uint64_t>(sd);
        seed_seen = true;
      } else if (key == "replications") {
        if (c.replications) fail(line, "duplicate key 'replications'");
        const long long n = parse_int(val, line, key);
        if (n < 2) fail(line, "key 'replications': must be >= 2");
        c.replications = static_cast<int>(n);
      } else if (key == "scales") {
        if (c.scales) fail(line, "duplicate key 'scales'");
        std::vector<double> sc;
        for (const std::string& item : split_list(val)) {
          sc.push_back(parse_double(item, line, key));
        }
        c.scales = std::move(sc);
      } else if (key == "check_times") {
        if (check_times_seen) fail(line, "duplicate key 'check_times'");
        std::vector<int> ct;
        for (const std::string& item : split_list(val)) {
          const long long t = parse_int(item, line, key);
          if (t < 1) fail(line, "key 'check_times': entries must be >= 1");
          ct.push_back(static_cast<int>(t));
        }
        if (ct.empty()) fail(line, "key 'check_times': empty list");
        c.check_times = std::move(ct);
        check_times_seen = true;
      } else if (key == "order_threshold") {
        if (c.order_threshold) fail(line, "duplicate key 'order_threshold'");
        c.order_threshold = parse_double(val, line, key);
      } else {
        fail(line, "unknown key '" + key + "' in [run]");
      }
    } else if (section == "output") {
      if (key == "directory") {
        c.directory = val;
      } else if (key == "scale_by_100") {
        c.scale_by_100 = parse_bool(val, line, key);
      } else {
        fail(line, "unknown key '" + key + "' in [output]");
      }
    } else {
      fail(line, "key '" + key + "' before any [section]");
    }
  }

  if (!kind_seen) throw ConfigError("config: [model] kind is required");
  if (!theta0_seen) {
    throw ConfigError(std::string("config: [model] ") +
                      (c.kind == "ar1" ? "phi0" : "theta0") + " is required");
  }
  if (!q_seen || !r_seen) throw ConfigError("config: [model] q and r are required");
  if (c.q < 0 || c.r < 0) throw ConfigError("config: noise variances must be >= 0");
  if (!horizon_seen) throw ConfigError("config: [run] horizon is required");
  if (!seed_seen) throw ConfigError("config: [run] seed is required");
  if (c.epsilon.has_value() == c.theta.has_value()) {
    throw ConfigError(
        "config: [bias] exactly one of epsilon / theta must be given");
  }
  return c;
}

ScenarioConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config: cannot open '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const ScenarioConfig& c) {
  std::ostringstream out;
  out << "[model]\n";
  out << "kind = " << c.kind << "\n";
  out << (c.kind == "ar1" ? "phi0 = " : "theta0 = ") << format_double(c.theta0)
      << "\n";
  out << "q = " << format_double(c.q) << "\n";
  out << "r = " << format_double(c.r) << "\n";
  out << "\n[bias]\n";
  if (c.epsilon) out << "epsilon = " << format_double(*c.epsilon) << "\n";
  if (c.theta) out << "theta = " << format_double(*c.theta) << "\n";
  out << "\n[run]\n";
  out << "horizon = " << c.horizon << "\n";
  out << "seed = " << c.seed << "\n";
  if (c.replications) out << "replications = " << *c.replications << "\n";
  if (c.scales) {
    out << "scales = ";
    for (std::size_t i = 0; i < c.scales->size(); ++i) {
      out << (i ? ", " : "") << format_double((*c.scales)[i]);
    }
    out << "\n";
  }
  out << "check_times = ";
  for (std::size_t i = 0; i < c.check_times.size(); ++i) {
    out << (i ? ", " : "") << c.check_times[i];
  }
  out << "\n";
  if (c.order_threshold) {
    out << "order_threshold = " << format_double(*c.order_threshold) << "\n";
  }
  out << "\n[output]\n";
  out << "directory = " << c.directory << "\n";
  out << "scale_by_100 = " << (c.scale_by_100 ? "true" : "false") << "\n";
  return out.str();
}

}  // namespace kfbias::cli
