#pragma once

#include <map>
#include <optional>
#include <string>

namespace smagdi::harness {

// Plain-text key-value configuration with [sections] mirroring module names:
//
//   [debate]
//   max_rounds = 3
//   base_temperature = 0.7
//
// CLI flags override file values.
class Config {
 public:
  Config() = default;
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text);

  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;

  void set(const std::string& section, const std::string& key, const std::string& value);

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace smagdi::harness
