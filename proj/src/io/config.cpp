#include "kramers/io/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kramers/errors.hpp"
#include "kramers/physics/units.hpp"

namespace kramers::io {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view text, int line) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t[0] == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ParseError(line, "malformed number '" + t + "'");
  if (!std::isfinite(v)) throw ParseError(line, "non-finite value");
  return v;
}

double parse_si_value(std::string_view text, int line) {
  const std::string t = trim(text);
  const auto space = t.find_first_of(" \t");
  if (space == std::string::npos) return parse_number(t, line);
  const double v = parse_number(t.substr(0, space), line);
  const std::string unit = trim(std::string_view(t).substr(space));
  const auto u = try_parse_unit(unit);
  if (!u) throw ParseError(line, "unknown unit '" + unit + "'");
  return to_si(Quantity(v, *u));
}

bool ConfigSection::has(std::string_view key) const {
  for (const auto& e : entries)
    if (e.key == key) return true;
  return false;
}

const ConfigEntry& ConfigSection::entry(std::string_view key) const {
  for (const auto& e : entries) {
    if (e.key == key) {
      used_.insert(e.key);
      return e;
    }
  }
  throw ParseError(line, "section [" + name + "] is missing key '" + std::string(key) + "'");
}

std::string ConfigSection::text(std::string_view key) const { return entry(key).value; }
std::string ConfigSection::text_or(std::string_view key, std::string fallback) const {
  return has(key) ? text(key) : fallback;
}

double ConfigSection::number(std::string_view key) const {
  const auto& e = entry(key);
  return parse_number(e.value, e.line);
}
double ConfigSection::number_or(std::string_view key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

double ConfigSection::si(std::string_view key) const {
  const auto& e = entry(key);
  return parse_si_value(e.value, e.line);
}
double ConfigSection::si_or(std::string_view key, double fallback) const {
  return has(key) ? si(key) : fallback;
}

long ConfigSection::integer(std::string_view key) const {
  const auto& e = entry(key);
  const double v = parse_number(e.value, e.line);
  if (v != std::floor(v) || std::abs(v) > 9e15) throw ParseError(e.line, "'" + e.key + "' must be an integer");
  return static_cast<long>(v);
}
long ConfigSection::integer_or(std::string_view key, long fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::vector<double> ConfigSection::numbers(std::string_view key) const {
  const auto& e = entry(key);
  std::vector<double> out;
  for (const auto& item : split_list(e.value)) out.push_back(parse_number(item, e.line));
  return out;
}

std::vector<double> ConfigSection::si_list(std::string_view key) const {
  const auto& e = entry(key);
  auto items = split_list(e.value);
  if (items.empty()) return {};
  // A unit after the last number applies to the whole list.
  double scale = 1.0;
  std::string& last = items.back();
  const auto space = last.find_first_of(" \t");
  if (space != std::string::npos) {
    const std::string unit = trim(std::string_view(last).substr(space));
    const auto u = try_parse_unit(unit);
    if (!u) throw ParseError(e.line, "unknown unit '" + unit + "'");
    scale = to_si(Quantity(1.0, *u));
    last = last.substr(0, space);
  }
  std::vector<double> out;
  for (const auto& item : items) out.push_back(parse_number(item, e.line) * scale);
  return out;
}

std::vector<std::string> ConfigSection::list(std::string_view key) const { return split_list(entry(key).value); }

bool ConfigSection::flag_or(std::string_view key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto& e = entry(key);
  if (e.value == "true" || e.value == "yes" || e.value == "1") return true;
  if (e.value == "false" || e.value == "no" || e.value == "0") return false;
  throw ParseError(e.line, "'" + e.key + "' must be true or false");
}

std::vector<const ConfigEntry*> ConfigSection::unused() const {
  std::vector<const ConfigEntry*> out;
  for (const auto& e : entries)
    if (!used_.count(e.key)) out.push_back(&e);
  return out;
}

Config Config::parse(std::string_view text) {
  Config cfg;
  cfg.sections.emplace_back();
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string l = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (l.empty()) continue;
    if (l.front() == '[') {
      if (l.back() != ']') throw ParseError(line, "unterminated section header");
      ConfigSection s;
      s.name = trim(std::string_view(l).substr(1, l.size() - 2));
      s.line = line;
      if (s.name.empty()) throw ParseError(line, "empty section name");
      for (const auto& other : cfg.sections)
        if (other.name == s.name) throw ParseError(line, "duplicate section [" + s.name + "]");
      cfg.sections.push_back(std::move(s));
      continue;
    }
    const auto eq = l.find('=');
    if (eq == std::string::npos) throw ParseError(line, "expected 'key = value'");
    ConfigEntry e{trim(std::string_view(l).substr(0, eq)), trim(std::string_view(l).substr(eq + 1)), line};
    if (e.key.empty()) throw ParseError(line, "empty key");
    auto& sec = cfg.sections.back();
    if (sec.has(e.key)) throw ParseError(line, "duplicate key '" + e.key + "'");
    sec.entries.push_back(std::move(e));
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

const ConfigSection* Config::find(std::string_view name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

}  // namespace kramers::io
