#pragma once

// Run report and its JSON / CSV emitters.
//
// JSON: one document <name>.json holding config, results, tables and
// warnings; complex numbers are {"re": x, "im": y}. CSV: one file per table
// (<name>_<table>.csv), complex columns split into <col>_re and <col>_im,
// numbers printed with %.17g. Results and the config echo are flattened
// into key/value tables. Timing always goes to <name>.timing.json so the
// report itself is byte-identical across runs.

#include "config.hpp"

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace smallscat::cli {

struct Table {
    enum class Type { real, complex, integer, text };
    struct Column {
        std::string name;
        Type type = Type::real;
        bool operator==(const Column&) const = default;
    };
    using Cell = std::variant<double, cplx, long long, std::string>;

    std::string name;
    std::vector<Column> columns;
    std::vector<std::vector<Cell>> rows;

    /// Throws std::logic_error when the row does not match the columns.
    void add_row(std::vector<Cell> row);
    bool operator==(const Table&) const = default;
};

struct RunReport {
    Json config;
    Json results = Json::object();
    std::vector<Table> tables;
    std::vector<std::string> warnings;
    Json timing = Json::object(); ///< written separately

    const Table* table(const std::string& name) const;
};

Json cjson(cplx z);
Json cjson(const CVec3& v);
Json vjson(const Vec3& v);

/// The report document (everything except timing).
Json report_json(const RunReport& report);
/// Inverse of report_json.
RunReport report_from_json(const Json& j);

/// CSV text of a table: header row, then one line per row.
std::string csv_text(const Table& table);
/// Parses csv_text output back against the given column schema.
Table parse_csv(const std::string& text, const std::string& name,
                const std::vector<Table::Column>& columns);

/// Tables written in CSV mode, including the flattened results, config
/// and warnings.
std::vector<Table> csv_tables(const RunReport& report);

/// Writes the report; returns the files written. Throws std::runtime_error
/// when the directory or a file cannot be written.
std::vector<std::filesystem::path> emit(const RunReport& report, OutputFormat format,
                                        const std::filesystem::path& dir, const std::string& name);

} // namespace smallscat::cli
