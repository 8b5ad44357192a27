#include "synthwave/report.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace synthwave::io {

namespace {

// shortest representation that round-trips a double, stable on one platform
std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    double parsed = 0.0;
    std::sscanf(buf, "%lf", &parsed);
    if (parsed == v) {
        for (int precision = 1; precision < 17; ++precision) {
            char shorter[40];
            std::snprintf(shorter, sizeof shorter, "%.*g", precision, v);
            std::sscanf(shorter, "%lf", &parsed);
            if (parsed == v) return shorter;
        }
    }
    return buf;
}

std::string cell_to_string(const Cell& cell) {
    if (std::holds_alternative<double>(cell)) return format_double(std::get<double>(cell));
    if (std::holds_alternative<long>(cell)) return std::to_string(std::get<long>(cell));
    const std::string& s = std::get<std::string>(cell);
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"') quoted += "\"\"";
        else quoted += c;
    }
    return quoted + "\"";
}

nlohmann::json cell_to_json(const Cell& cell) {
    if (std::holds_alternative<double>(cell)) return std::get<double>(cell);
    if (std::holds_alternative<long>(cell)) return std::get<long>(cell);
    return std::get<std::string>(cell);
}

}  // namespace

std::string table_to_csv(const Table& table, const RunReport& report) {
    std::string out;
    out += "# table: " + table.name + "\n";
    out += "# command: " + report.command + "\n";
    out += "# scenario: " + report.scenario_digest + "\n";
    for (size_t i = 0; i < table.columns.size(); ++i)
        out += (i ? "," : "") + table.columns[i];
    out += "\n";
    if (table.rows.empty()) out += "# (empty)\n";
    for (const auto& row : table.rows) {
        for (size_t i = 0; i < row.size(); ++i)
            out += (i ? "," : "") + cell_to_string(row[i]);
        out += "\n";
    }
    return out;
}

std::string report_to_json(const RunReport& report) {
    nlohmann::json root;
    root["command"] = report.command;
    root["scenario_digest"] = report.scenario_digest;
    root["scenario"] = nlohmann::json::parse(report.scenario_echo);
    root["wall_seconds"] = report.wall_seconds;
    root["diagnostics"] = report.diagnostics;
    root["tables"] = nlohmann::json::object();
    for (const Table& t : report.tables) {
        nlohmann::json jt;
        jt["columns"] = t.columns;
        jt["rows"] = nlohmann::json::array();
        for (const auto& row : t.rows) {
            nlohmann::json jr = nlohmann::json::array();
            for (const Cell& c : row) jr.push_back(cell_to_json(c));
            jt["rows"].push_back(jr);
        }
        root["tables"][t.name] = jt;
    }
    return root.dump(2) + "\n";
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw InternalError("cannot write '" + tmp + "'");
        out.write(content.data(), long(content.size()));
        if (!out)
            throw InternalError("short write on '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

std::vector<std::string> write_report(const RunReport& report, const std::string& directory,
                                      const std::string& format) {
    std::filesystem::create_directories(directory);
    std::vector<std::string> written;

    const std::string json_path = directory + "/" + report.command + "_report.json";
    write_file_atomic(json_path, report_to_json(report));
    written.push_back(json_path);

    if (format != "json") {
        for (const Table& t : report.tables) {
            const std::string path = directory + "/" + t.name + ".csv";
            write_file_atomic(path, table_to_csv(t, report));
            written.push_back(path);
        }
    }
    return written;
}

}  // namespace synthwave::io
