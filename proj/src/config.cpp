#include "kgbench/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <ostream>

#include "kgbench/errors.hpp"

namespace kgbench {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse(std::istream& in, std::string_view filename) {
  Config cfg;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(std::string(filename) + ":" + std::to_string(line_no) +
                        ": expected key=value");
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError(std::string(filename) + ":" + std::to_string(line_no) + ": empty key");
    if (cfg.values_.count(key))
      throw ConfigError(std::string(filename) + ":" + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");
    cfg.values_[key] = value;
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse(in, path);
}

std::optional<std::string> Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_or(const std::string& key, std::string def) const {
  auto v = get(key);
  return v ? *v : std::move(def);
}

double Config::get_double(const std::string& key, double def) const {
  auto v = get(key);
  if (!v) return def;
  char* end = nullptr;
  double d = std::strtod(v->c_str(), &end);
  if (end != v->c_str() + v->size())
    throw ConfigError("config key '" + key + "': '" + *v + "' is not a number");
  return d;
}

int Config::get_int(const std::string& key, int def) const {
  auto v = get(key);
  if (!v) return def;
  char* end = nullptr;
  long n = std::strtol(v->c_str(), &end, 10);
  if (end != v->c_str() + v->size())
    throw ConfigError("config key '" + key + "': '" + *v + "' is not an integer");
  return static_cast<int>(n);
}

uint64_t Config::get_uint64(const std::string& key, uint64_t def) const {
  auto v = get(key);
  if (!v) return def;
  char* end = nullptr;
  unsigned long long n = std::strtoull(v->c_str(), &end, 10);
  if (end != v->c_str() + v->size())
    throw ConfigError("config key '" + key + "': '" + *v + "' is not an unsigned integer");
  return n;
}

bool Config::get_bool(const std::string& key, bool def) const {
  auto v = get(key);
  if (!v) return def;
  if (*v == "true" || *v == "1") return true;
  if (*v == "false" || *v == "0") return false;
  throw ConfigError("config key '" + key + "': '" + *v + "' is not a boolean");
}

void Config::set(const std::string& key, std::string value) { values_[key] = std::move(value); }

std::map<std::string, std::string> Config::with_prefix(const std::string& prefix) const {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : values_)
    if (k.rfind(prefix, 0) == 0) out[k.substr(prefix.size())] = v;
  return out;
}

void Config::check_known(const std::vector<std::string>& exact,
                         const std::vector<std::string>& prefixes) const {
  for (const auto& [k, v] : values_) {
    if (std::find(exact.begin(), exact.end(), k) != exact.end()) continue;
    bool matched = false;
    for (const auto& p : prefixes)
      if (k.rfind(p, 0) == 0) {
        matched = true;
        break;
      }
    if (!matched) throw ConfigError("unknown config key '" + k + "'");
  }
}

void write_config(std::ostream& out, const std::map<std::string, std::string>& values) {
  for (const auto& [k, v] : values) out << k << " = " << v << '\n';
}

}  // namespace kgbench
