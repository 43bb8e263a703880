#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dwre {

/// Parse or lookup failure; `line` is 1-based, 0 when not tied to a line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& msg, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// INI-style document: `[section]` headers, `key = value` lines, repeated
/// keys kept in order, `#` and `;` start comments.
class Config {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has_section(const std::string& section) const { return sections_.count(section) != 0; }
  bool has(const std::string& section, const std::string& key) const;

  const std::vector<Entry>& all(const std::string& section, const std::string& key) const;
  std::optional<Entry> get(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key) const;
  std::int64_t get_int(const std::string& section, const std::string& key, std::int64_t fallback) const;

  const std::string& text() const { return text_; }

 private:
  std::map<std::string, std::map<std::string, std::vector<Entry>>> sections_;
  std::string text_;
};

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);
std::vector<std::string> split_ws(const std::string& s);
double parse_double(const std::string& s, int line = 0);
std::int64_t parse_int(const std::string& s, int line = 0);
std::vector<double> parse_doubles(const std::string& s, int line = 0);

}  // namespace dwre
