#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace bistab::cli {

/// Empty cells hold std::monostate.
using Cell = std::variant<std::monostate, double, std::string>;

/// Shortest round-trip decimal form.
std::string format_number(double v);

/// Column-named rows, serialized as CSV or as a JSON array of row objects.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row);

    std::string to_csv() const;
    static Table from_csv(const std::string& text);

    nlohmann::ordered_json to_json() const;
    static Table from_json(const nlohmann::ordered_json& doc);

    /// Index of a column; throws std::out_of_range naming the column.
    std::size_t column(const std::string& name) const;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

/// Pretty JSON with a trailing newline.
std::string dump(const nlohmann::ordered_json& doc);

}  // namespace bistab::cli
