#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace claimaudit::csv {

/// Header row plus data rows. Rows are kept in file order.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
};

/// RFC 4180 style parsing: quoted fields may contain the delimiter,
/// doubled quotes, and embedded newlines. Accepts LF and CRLF endings.
Table parse(std::string_view text, char delimiter = ',');

Table read_file(const std::filesystem::path& path, char delimiter = ',');

std::string escape_field(std::string_view field, char delimiter = ',');

std::string to_string(const Table& table, char delimiter = ',');

void write_file(const std::filesystem::path& path, const Table& table,
                char delimiter = ',');

}  // namespace claimaudit::csv
