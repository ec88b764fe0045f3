#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace defensibility::cli {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Throws Error(kSchemaMismatch) when the column is absent.
  std::size_t column(std::string_view name) const;
};

/// Quotes a field when it holds a comma, quote or newline.
std::string csv_field(std::string_view field);
std::string csv_line(const std::vector<std::string>& fields);

/// RFC 4180 subset: quoted fields with doubled quotes, LF or CRLF rows.
/// Throws Error(kSchemaMismatch) on ragged rows or an unterminated quote.
CsvTable parse_csv(std::string_view text);

/// Empty cells map to nullopt; anything unparsable throws kSchemaMismatch.
std::optional<double> parse_optional_number(std::string_view cell);

}  // namespace defensibility::cli
