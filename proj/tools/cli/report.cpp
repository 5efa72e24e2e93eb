#include "report.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace smallscat::cli {

namespace {

const char* type_name(Table::Type t)
{
    switch (t) {
    case Table::Type::real: return "real";
    case Table::Type::complex: return "complex";
    case Table::Type::integer: return "integer";
    case Table::Type::text: return "text";
    }
    return "?";
}

Table::Type type_from(const std::string& s)
{
    if (s == "real") {
        return Table::Type::real;
    }
    if (s == "complex") {
        return Table::Type::complex;
    }
    if (s == "integer") {
        return Table::Type::integer;
    }
    if (s == "text") {
        return Table::Type::text;
    }
    throw std::runtime_error("report: unknown column type '" + s + "'");
}

bool matches(const Table::Cell& c, Table::Type t)
{
    switch (t) {
    case Table::Type::real: return std::holds_alternative<double>(c);
    case Table::Type::complex: return std::holds_alternative<cplx>(c);
    case Table::Type::integer: return std::holds_alternative<long long>(c);
    case Table::Type::text: return std::holds_alternative<std::string>(c);
    }
    return false;
}

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string quote(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + '"';
}

std::vector<std::vector<std::string>> split_csv(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(cell));
            cell.clear();
            any = true;
        } else if (c == '\n') {
            row.push_back(std::move(cell));
            rows.push_back(std::move(row));
            cell.clear();
            row.clear();
            any = false;
        } else if (c != '\r') {
            cell += c;
            any = true;
        }
    }
    if (any) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

double parse_double(const std::string& s)
{
    // strtod rather than stod: subnormals set ERANGE but parse exactly.
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) {
        throw std::runtime_error("csv: bad number '" + s + "'");
    }
    return v;
}

void flatten(const Json& j, const std::string& key, Table& t)
{
    const bool complex_leaf =
        j.is_object() && j.size() == 2 && j.contains("re") && j.contains("im");
    if (complex_leaf) {
        t.add_row({key, cplx(j["re"].get<double>(), j["im"].get<double>()), std::string()});
    } else if (j.is_object()) {
        for (const auto& [k, v] : j.items()) {
            flatten(v, key.empty() ? k : key + "." + k, t);
        }
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) {
            flatten(j[i], key + "[" + std::to_string(i) + "]", t);
        }
    } else if (j.is_boolean()) {
        t.add_row({key, cplx(j.get<bool>() ? 1.0 : 0.0), std::string(j.get<bool>() ? "true" : "false")});
    } else if (j.is_number()) {
        t.add_row({key, cplx(j.get<double>()), std::string()});
    } else if (j.is_string()) {
        t.add_row({key, cplx(0.0), j.get<std::string>()});
    } else {
        t.add_row({key, cplx(0.0), std::string("null")});
    }
}

Table key_value_table(const std::string& name, const Json& j)
{
    Table t{name,
            {{"key", Table::Type::text}, {"value", Table::Type::complex}, {"text", Table::Type::text}},
            {}};
    flatten(j, "", t);
    return t;
}

} // namespace

void Table::add_row(std::vector<Cell> row)
{
    if (row.size() != columns.size()) {
        throw std::logic_error("table " + name + ": row width does not match the columns");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (!matches(row[i], columns[i].type)) {
            throw std::logic_error("table " + name + ": column " + columns[i].name +
                                   " has the wrong cell type");
        }
    }
    rows.push_back(std::move(row));
}

const Table* RunReport::table(const std::string& name) const
{
    for (const auto& t : tables) {
        if (t.name == name) {
            return &t;
        }
    }
    return nullptr;
}

Json cjson(cplx z) { return Json{{"re", z.real()}, {"im", z.imag()}}; }
Json cjson(const CVec3& v) { return Json::array({cjson(v.x), cjson(v.y), cjson(v.z)}); }
Json vjson(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

Json report_json(const RunReport& report)
{
    Json tables = Json::array();
    for (const auto& t : report.tables) {
        Json cols = Json::array();
        for (const auto& c : t.columns) {
            cols.push_back({{"name", c.name}, {"type", type_name(c.type)}});
        }
        Json rows = Json::array();
        for (const auto& r : t.rows) {
            Json row = Json::array();
            for (const auto& cell : r) {
                std::visit(
                    [&](const auto& v) {
                        using V = std::decay_t<decltype(v)>;
                        if constexpr (std::is_same_v<V, cplx>) {
                            row.push_back(cjson(v));
                        } else {
                            row.push_back(v);
                        }
                    },
                    cell);
            }
            rows.push_back(std::move(row));
        }
        tables.push_back({{"name", t.name}, {"columns", cols}, {"rows", rows}});
    }
    return Json{{"config", report.config},
                {"results", report.results},
                {"tables", tables},
                {"warnings", report.warnings}};
}

RunReport report_from_json(const Json& j)
{
    RunReport r;
    r.config = j.at("config");
    r.results = j.at("results");
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& tj : j.at("tables")) {
        Table t;
        t.name = tj.at("name").get<std::string>();
        for (const auto& c : tj.at("columns")) {
            t.columns.push_back({c.at("name").get<std::string>(),
                                 type_from(c.at("type").get<std::string>())});
        }
        for (const auto& rj : tj.at("rows")) {
            std::vector<Table::Cell> row;
            for (std::size_t i = 0; i < t.columns.size(); ++i) {
                const Json& v = rj.at(i);
                switch (t.columns[i].type) {
                case Table::Type::real: row.emplace_back(v.get<double>()); break;
                case Table::Type::complex:
                    row.emplace_back(cplx(v.at("re").get<double>(), v.at("im").get<double>()));
                    break;
                case Table::Type::integer: row.emplace_back(v.get<long long>()); break;
                case Table::Type::text: row.emplace_back(v.get<std::string>()); break;
                }
            }
            t.add_row(std::move(row));
        }
        r.tables.push_back(std::move(t));
    }
    return r;
}

std::string csv_text(const Table& table)
{
    std::ostringstream os;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        const auto& c = table.columns[i];
        os << (i ? "," : "");
        if (c.type == Table::Type::complex) {
            os << quote(c.name + "_re") << ',' << quote(c.name + "_im");
        } else {
            os << quote(c.name);
        }
    }
    os << '\n';
    for (const auto& r : table.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            os << (i ? "," : "");
            std::visit(
                [&](const auto& v) {
                    using V = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<V, double>) {
                        os << num(v);
                    } else if constexpr (std::is_same_v<V, cplx>) {
                        os << num(v.real()) << ',' << num(v.imag());
                    } else if constexpr (std::is_same_v<V, long long>) {
                        os << v;
                    } else {
                        os << quote(v);
                    }
                },
                r[i]);
        }
        os << '\n';
    }
    return os.str();
}

Table parse_csv(const std::string& text, const std::string& name,
                const std::vector<Table::Column>& columns)
{
    const auto rows = split_csv(text);
    Table t{name, columns, {}};
    std::vector<std::string> header;
    for (const auto& c : columns) {
        if (c.type == Table::Type::complex) {
            header.push_back(c.name + "_re");
            header.push_back(c.name + "_im");
        } else {
            header.push_back(c.name);
        }
    }
    if (rows.empty() || rows[0] != header) {
        throw std::runtime_error("csv " + name + ": header does not match the columns");
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != header.size()) {
            throw std::runtime_error("csv " + name + ": ragged row " + std::to_string(r));
        }
        std::vector<Table::Cell> row;
        std::size_t k = 0;
        for (const auto& c : columns) {
            switch (c.type) {
            case Table::Type::real: row.emplace_back(parse_double(rows[r][k++])); break;
            case Table::Type::complex: {
                const double re = parse_double(rows[r][k++]);
                row.emplace_back(cplx(re, parse_double(rows[r][k++])));
                break;
            }
            case Table::Type::integer: row.emplace_back(std::stoll(rows[r][k++])); break;
            case Table::Type::text: row.emplace_back(rows[r][k++]); break;
            }
        }
        t.add_row(std::move(row));
    }
    return t;
}

std::vector<Table> csv_tables(const RunReport& report)
{
    std::vector<Table> out = report.tables;
    out.push_back(key_value_table("results", report.results));
    out.push_back(key_value_table("config", report.config));
    Table w{"warnings", {{"message", Table::Type::text}}, {}};
    for (const auto& s : report.warnings) {
        w.add_row({s});
    }
    out.push_back(std::move(w));
    return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
    out.close();
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
}

} // namespace

std::vector<std::filesystem::path> emit(const RunReport& report, OutputFormat format,
                                        const std::filesystem::path& dir, const std::string& name)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw std::runtime_error("cannot create output directory " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    if (format == OutputFormat::json) {
        files.push_back(dir / (name + ".json"));
        write_file(files.back(), report_json(report).dump(2) + "\n");
    } else {
        for (const auto& t : csv_tables(report)) {
            files.push_back(dir / (name + "_" + t.name + ".csv"));
            write_file(files.back(), csv_text(t));
        }
    }
    files.push_back(dir / (name + ".timing.json"));
    write_file(files.back(), report.timing.dump(2) + "\n");
    return files;
}

} // namespace smallscat::cli
