#include "opengossip/cli/table.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace opengossip::cli {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_cell(const Cell& cell) {
    if (const auto* d = std::get_if<double>(&cell)) return format_double(*d);
    if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
    return std::get<std::string>(cell);
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void ResultTable::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size())
        throw std::logic_error("table '" + name + "': row has " + std::to_string(row.size()) + " cells, expected " +
                               std::to_string(columns.size()));
    rows.push_back(std::move(row));
}

std::size_t ResultTable::column_index(const std::string& column) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == column) return i;
    throw std::out_of_range("table '" + name + "' has no column '" + column + "'");
}

double ResultTable::number(std::size_t row, const std::string& column) const {
    const Cell& c = rows.at(row).at(column_index(column));
    if (const auto* d = std::get_if<double>(&c)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
    throw std::invalid_argument("column '" + column + "' is not numeric");
}

std::string ResultTable::to_csv() const {
    std::ostringstream out;
    out << "# table: " << name << '\n';
    for (const auto& [k, v] : metadata) out << "# " << k << ": " << v << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << csv_escape(columns[i]);
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_escape(format_cell(row[i]));
        out << '\n';
    }
    return out.str();
}

nlohmann::json ResultTable::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["metadata"] = nlohmann::json::object();
    for (const auto& [k, v] : metadata) j["metadata"][k] = v;
    j["columns"] = columns;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : rows) {
        auto r = nlohmann::json::array();
        for (const auto& cell : row) {
            if (const auto* d = std::get_if<double>(&cell)) {
                // JSON has no NaN / inf; keep them as strings.
                if (std::isfinite(*d))
                    r.push_back(*d);
                else
                    r.push_back(format_double(*d));
            } else if (const auto* i = std::get_if<std::int64_t>(&cell)) {
                r.push_back(*i);
            } else {
                r.push_back(std::get<std::string>(cell));
            }
        }
        j["rows"].push_back(std::move(r));
    }
    return j;
}

std::string to_csv(const std::vector<ResultTable>& tables) {
    std::string out;
    for (std::size_t i = 0; i < tables.size(); ++i) {
        if (i) out += '\n';
        out += tables[i].to_csv();
    }
    return out;
}

nlohmann::json to_json(const std::vector<ResultTable>& tables) {
    nlohmann::json j;
    j["tables"] = nlohmann::json::array();
    for (const auto& t : tables) j["tables"].push_back(t.to_json());
    return j;
}

std::vector<std::string> data_rows(const std::string& csv) {
    std::vector<std::string> rows;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') rows.push_back(line);
    return rows;
}

}  // namespace opengossip::cli
