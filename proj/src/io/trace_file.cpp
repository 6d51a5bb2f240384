#include "kramers/io/trace_file.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kramers/errors.hpp"
#include "kramers/io/config.hpp"

namespace kramers::io {

Column parse_column(std::string_view header) {
  Column c;
  c.header = trim(header);
  c.quantity = c.header;
  const auto us = c.header.rfind('_');
  if (us != std::string::npos && us > 0) {
    if (auto u = try_parse_unit(std::string_view(c.header).substr(us + 1)); u && us + 1 < c.header.size()) {
      c.unit = u;
      c.quantity = c.header.substr(0, us);
    }
  }
  return c;
}

std::vector<double> TraceFile::si(std::size_t column) const {
  if (column >= data.size()) throw DomainError("trace has no column " + std::to_string(column));
  std::vector<double> out = data[column];
  if (const auto& u = columns[column].unit) {
    const double scale = to_si(Quantity(1.0, *u));
    for (double& v : out) v *= scale;
  }
  return out;
}

TraceFile parse_trace(std::string_view text, TraceKind kind) {
  TraceFile t;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  bool header = false;
  while (std::getline(in, raw)) {
    ++line;
    const std::string l = trim(raw);
    if (l.empty() || l.front() == '#') continue;
    const auto cells = split_list(l);
    if (!header) {
      if (cells.size() < 2 || cells.size() > 3)
        throw ParseError(line, "header must name 2 or 3 columns (x, y[, sigma])");
      for (const auto& c : cells) {
        if (c.empty()) throw ParseError(line, "empty column name");
        t.columns.push_back(parse_column(c));
      }
      t.data.resize(cells.size());
      header = true;
      continue;
    }
    if (cells.size() != t.columns.size())
      throw ParseError(line, "expected " + std::to_string(t.columns.size()) + " columns, found " +
                                 std::to_string(cells.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) t.data[c].push_back(parse_number(cells[c], line));
    if (t.has_sigma() && !(t.data[2].back() > 0.0)) throw ParseError(line, "sigma must be positive");
  }
  if (!header) throw ValidationError("trace has no header row");
  if (t.rows() < 2) throw ValidationError("trace needs at least 2 data rows");
  if (kind == TraceKind::Decay) {
    for (std::size_t i = 1; i < t.rows(); ++i)
      if (!(t.data[0][i] > t.data[0][i - 1]))
        throw ValidationError("x column '" + t.columns[0].header + "' is not strictly increasing at row " +
                              std::to_string(i + 1));
  }
  return t;
}

TraceFile ingest_trace(const std::filesystem::path& path, TraceKind kind) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_trace(ss.str(), kind);
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw DomainError("cannot format number");
  return std::string(buf, ptr);
}

std::string format_trace(const TraceFile& trace) {
  std::string out;
  for (std::size_t c = 0; c < trace.columns.size(); ++c) {
    if (c) out += ',';
    out += trace.columns[c].header;
  }
  out += '\n';
  for (std::size_t r = 0; r < trace.rows(); ++r) {
    for (std::size_t c = 0; c < trace.columns.size(); ++c) {
      if (c) out += ',';
      out += format_number(trace.data[c][r]);
    }
    out += '\n';
  }
  return out;
}

void write_trace(const std::filesystem::path& path, const TraceFile& trace) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + path.string());
  f << format_trace(trace);
}

}  // namespace kramers::io
