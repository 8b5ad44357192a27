#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "synthwave/errors.hpp"

namespace synthwave::io {

using Cell = std::variant<double, long, std::string>;

/// One named column set. Rows are flat value lists in column order.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row) {
        if (row.size() != columns.size())
            throw InternalError("row width does not match the columns of table '" + name + "'");
        rows.push_back(std::move(row));
    }
};

/// Result bundle of one command invocation.
struct RunReport {
    std::string command;
    std::string scenario_digest;   // git-style content hash of the canonical scenario
    std::string scenario_echo;     // canonical scenario with all defaults applied
    std::vector<Table> tables;
    std::map<std::string, std::string> diagnostics;
    double wall_seconds = 0.0;
};

/// CSV rendering: '#'-prefixed metadata lines, then a header row, then data.
std::string table_to_csv(const Table& table, const RunReport& report);
std::string report_to_json(const RunReport& report);

/// write-then-rename so readers never observe partial output
void write_file_atomic(const std::string& path, const std::string& content);

/// Write report.json plus one CSV per table into `directory`; returns the
/// paths written. With format "json" the CSVs are skipped.
std::vector<std::string> write_report(const RunReport& report, const std::string& directory,
                                      const std::string& format = "csv");

}  // namespace synthwave::io
