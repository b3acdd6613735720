#include "bistab/cli/table.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace bistab::cli {

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw std::invalid_argument("table: row width does not match header");
    rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw std::out_of_range("table: missing column '" + name + "'");
}

namespace {

std::string cell_text(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
    if (const auto* s = std::get_if<std::string>(&c)) {
        if (s->find_first_of(",\"\n") != std::string::npos) throw std::invalid_argument("table: unquotable cell");
        return *s;
    }
    return {};
}

Cell parse_cell(const std::string& field) {
    if (field.empty()) return std::monostate{};
    double v = 0.0;
    const auto* end = field.data() + field.size();
    const auto res = std::from_chars(field.data(), end, v);
    if (res.ec == std::errc() && res.ptr == end) return v;
    return field;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::string Table::to_csv() const {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell_text(row[i]);
        out += '\n';
    }
    return out;
}

Table Table::from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    Table t;
    if (!std::getline(in, line) || line.empty()) throw std::invalid_argument("csv: missing header");
    t.columns = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split(line);
        if (fields.size() != t.columns.size()) throw std::invalid_argument("csv: ragged row");
        std::vector<Cell> row;
        for (const auto& f : fields) row.push_back(parse_cell(f));
        t.rows.push_back(std::move(row));
    }
    return t;
}

nlohmann::ordered_json Table::to_json() const {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (const auto* d = std::get_if<double>(&row[i]))
                obj[columns[i]] = *d;
            else if (const auto* s = std::get_if<std::string>(&row[i]))
                obj[columns[i]] = *s;
            else
                obj[columns[i]] = nullptr;
        }
        arr.push_back(std::move(obj));
    }
    return {{"columns", columns}, {"rows", arr}};
}

Table Table::from_json(const nlohmann::ordered_json& doc) {
    Table t;
    t.columns = doc.at("columns").get<std::vector<std::string>>();
    for (const auto& obj : doc.at("rows")) {
        std::vector<Cell> row;
        for (const auto& name : t.columns) {
            const auto& v = obj.at(name);
            if (v.is_number())
                row.emplace_back(v.get<double>());
            else if (v.is_string())
                row.emplace_back(v.get<std::string>());
            else
                row.emplace_back(std::monostate{});
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string dump(const nlohmann::ordered_json& doc) { return doc.dump(2) + "\n"; }

}  // namespace bistab::cli
