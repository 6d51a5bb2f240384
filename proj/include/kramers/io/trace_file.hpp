#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kramers/physics/units.hpp"

namespace kramers::io {

/// Header cell "tau_ns" becomes quantity "tau" with unit ns. A cell whose
/// last underscore-separated token is not a unit symbol is unitless.
struct Column {
  std::string header;
  std::string quantity;
  std::optional<Unit> unit;
};

enum class TraceKind { Generic, Decay };

/// Columns are x, y and an optional sigma, stored as written.
struct TraceFile {
  std::vector<Column> columns;
  std::vector<std::vector<double>> data;  // data[column][row]

  std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }
  bool has_sigma() const { return columns.size() >= 3; }
  /// Column values converted to SI when the header carries a unit.
  std::vector<double> si(std::size_t column) const;
};

Column parse_column(std::string_view header);

/// Parses CSV text. Errors name the offending line ("line 3: non-finite
/// value"); fewer than two rows or a non-increasing x for decay traces
/// raise ValidationError.
TraceFile parse_trace(std::string_view text, TraceKind kind = TraceKind::Generic);
TraceFile ingest_trace(const std::filesystem::path& path, TraceKind kind = TraceKind::Generic);

std::string format_trace(const TraceFile& trace);
void write_trace(const std::filesystem::path& path, const TraceFile& trace);

/// Shortest text that reads back to the same double.
std::string format_number(double v);

}  // namespace kramers::io
