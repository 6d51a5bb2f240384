#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

// Line-oriented configuration: `[section]` headers, `key = value` pairs,
// `#` comments, comma-separated lists. Keys before the first header land
// in an unnamed section.
namespace kramers::io {

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

class ConfigSection {
 public:
  std::string name;
  int line = 0;
  std::vector<ConfigEntry> entries;

  bool has(std::string_view key) const;
  const ConfigEntry& entry(std::string_view key) const;  // ParseError if missing
  std::string text(std::string_view key) const;
  std::string text_or(std::string_view key, std::string fallback) const;
  double number(std::string_view key) const;
  double number_or(std::string_view key, double fallback) const;
  /// Number with an optional trailing unit ("720 ns"), returned in SI.
  double si(std::string_view key) const;
  double si_or(std::string_view key, double fallback) const;
  long integer(std::string_view key) const;
  long integer_or(std::string_view key, long fallback) const;
  std::vector<double> numbers(std::string_view key) const;
  /// Comma list of numbers with one optional trailing unit, in SI.
  std::vector<double> si_list(std::string_view key) const;
  std::vector<std::string> list(std::string_view key) const;
  bool flag_or(std::string_view key, bool fallback) const;

  /// Keys never read through the accessors above.
  std::vector<const ConfigEntry*> unused() const;

 private:
  mutable std::set<std::string, std::less<>> used_;
};

struct Config {
  std::vector<ConfigSection> sections;

  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);
  const ConfigSection* find(std::string_view name) const;
};

/// Parses "1.5", "720 ns", "2.57 mT" into an SI value. `line` is used in
/// error messages.
double parse_si_value(std::string_view text, int line);
double parse_number(std::string_view text, int line);
std::string trim(std::string_view s);
std::vector<std::string> split_list(std::string_view s, char sep = ',');

}  // namespace kramers::io
