#pragma once

// Column-oriented result tables with a metadata block, written as CSV
// (RFC 4180 quoting, '#'-prefixed metadata lines) or as a JSON mirror.
//
// Numbers are printed in the shortest form that round-trips, so the same
// data always produces the same bytes.

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace opengossip::cli {

using Cell = std::variant<double, std::int64_t, std::string>;

std::string format_cell(const Cell& cell);
std::string format_double(double v);
/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(const std::string& field);

struct ResultTable {
    std::string name;
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_meta(std::string key, std::string value) { metadata.emplace_back(std::move(key), std::move(value)); }
    void add_meta(std::string key, double value) { add_meta(std::move(key), format_double(value)); }
    /// Throws std::logic_error when the row width does not match.
    void add_row(std::vector<Cell> row);

    std::size_t column_index(const std::string& column) const;
    double number(std::size_t row, const std::string& column) const;

    std::string to_csv() const;
    nlohmann::json to_json() const;
};

/// Several tables as one CSV stream (tables separated by a blank line).
std::string to_csv(const std::vector<ResultTable>& tables);
nlohmann::json to_json(const std::vector<ResultTable>& tables);

/// Lines of a CSV stream that are neither metadata nor blank.
std::vector<std::string> data_rows(const std::string& csv);

}  // namespace opengossip::cli
