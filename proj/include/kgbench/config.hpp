#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kgbench {

// Flat key=value configuration: one pair per line, "#" comments, whitespace
// around key and value trimmed. Unknown keys are errors, checked against the
// documented key list (plus dotted prefixes for per-type/per-relation
// synthetic overrides).
class Config {
 public:
  static Config parse(std::istream& in, std::string_view filename = "<config>");
  static Config load(const std::string& path);

  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, std::string def) const;
  double get_double(const std::string& key, double def) const;
  int get_int(const std::string& key, int def) const;
  uint64_t get_uint64(const std::string& key, uint64_t def) const;
  bool get_bool(const std::string& key, bool def) const;

  void set(const std::string& key, std::string value);  // CLI flag overrides
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  // Entries whose key starts with `prefix`; returned keys have it stripped.
  std::map<std::string, std::string> with_prefix(const std::string& prefix) const;

  // Throws ConfigError on any present key not in `exact` and not starting
  // with one of `prefixes`.
  void check_known(const std::vector<std::string>& exact,
                   const std::vector<std::string>& prefixes) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Sorted key=value dump, used for the resolved-config echo.
void write_config(std::ostream& out, const std::map<std::string, std::string>& values);

}  // namespace kgbench
