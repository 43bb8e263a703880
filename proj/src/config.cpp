#include "dwre/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace dwre {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& s, int line) {
  const std::string t = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("expected a number, got '" + t + "'", line);
  }
  return v;
}

std::int64_t parse_int(const std::string& s, int line) {
  const std::string t = trim(s);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("expected an integer, got '" + t + "'", line);
  }
  return v;
}

std::vector<double> parse_doubles(const std::string& s, int line) {
  std::vector<double> out;
  for (const auto& tok : split_ws(s)) out.push_back(parse_double(tok, line));
  if (out.empty()) throw ConfigError("expected at least one number", line);
  return out;
}

Config Config::parse(const std::string& text) {
  Config cfg;
  cfg.text_ = text;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (auto pos = line.find_first_of("#;"); pos != std::string::npos) line.erase(pos);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw ConfigError("malformed section header '" + line + "'", line_no);
      section = trim(line.substr(1, line.size() - 2));
      cfg.sections_[section];
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + line + "'", line_no);
    if (section.empty()) throw ConfigError("key outside of any [section]", line_no);
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("empty key", line_no);
    cfg.sections_[section][key].push_back({trim(line.substr(eq + 1)), line_no});
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) != 0;
}

const std::vector<Config::Entry>& Config::all(const std::string& section, const std::string& key) const {
  static const std::vector<Entry> empty;
  auto s = sections_.find(section);
  if (s == sections_.end()) return empty;
  auto k = s->second.find(key);
  return k == s->second.end() ? empty : k->second;
}

std::optional<Config::Entry> Config::get(const std::string& section, const std::string& key) const {
  const auto& v = all(section, key);
  if (v.empty()) return std::nullopt;
  if (v.size() > 1) throw ConfigError("key '" + key + "' given more than once in [" + section + "]", v[1].line);
  return v.front();
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
  auto e = get(section, key);
  if (!e) throw ConfigError("missing key '" + key + "' in [" + section + "]");
  return e->value;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  auto e = get(section, key);
  return e ? e->value : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
  auto e = get(section, key);
  if (!e) throw ConfigError("missing key '" + key + "' in [" + section + "]");
  return parse_double(e->value, e->line);
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) const {
  auto e = get(section, key);
  return e ? parse_double(e->value, e->line) : fallback;
}

std::int64_t Config::get_int(const std::string& section, const std::string& key) const {
  auto e = get(section, key);
  if (!e) throw ConfigError("missing key '" + key + "' in [" + section + "]");
  return parse_int(e->value, e->line);
}

std::int64_t Config::get_int(const std::string& section, const std::string& key, std::int64_t fallback) const {
  auto e = get(section, key);
  return e ? parse_int(e->value, e->line) : fallback;
}

}  // namespace dwre
