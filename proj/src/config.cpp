#include "smagdi/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "smagdi/error.hpp"

namespace smagdi::harness {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

Config Config::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BackendError("cannot open config: " + path, false);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_string(buffer.str());
}

Config Config::from_string(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw ValidationError("config line " + std::to_string(line_no) + ": unclosed section");
      }
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    cfg.sections_[section][trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return cfg;
}

std::optional<std::string> Config::get(const std::string& section,
                                       const std::string& key) const {
  const auto s = sections_.find(section);
  if (s == sections_.end()) return std::nullopt;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

std::string Config::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  return get(section, key).value_or(fallback);
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  const auto v = get(section, key);
  if (!v.has_value()) return fallback;
  try {
    return std::stod(*v);
  } catch (const std::exception&) {
    throw ValidationError("config [" + section + "] " + key + ": not a number: " + *v);
  }
}

int Config::get_int(const std::string& section, const std::string& key, int fallback) const {
  const auto v = get(section, key);
  if (!v.has_value()) return fallback;
  try {
    return std::stoi(*v);
  } catch (const std::exception&) {
    throw ValidationError("config [" + section + "] " + key + ": not an integer: " + *v);
  }
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  sections_[section][key] = value;
}

}  // namespace smagdi::harness
