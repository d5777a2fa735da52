#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace restore_sim {

enum class OutputFormat { Csv, Jsonl };

/// Writes one table either as CSV with a fixed header or as JSON lines.
/// Rows are ordered_json objects keyed by column name; columns absent from
/// a row stay empty in CSV and are omitted in JSONL.
class TableWriter {
public:
    TableWriter(std::ostream& out, OutputFormat format, std::vector<std::string> columns);

    void row(const nlohmann::ordered_json& values);

private:
    std::ostream& out_;
    OutputFormat format_;
    std::vector<std::string> columns_;
};

}  // namespace restore_sim
