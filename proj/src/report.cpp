#include "restore_sim/report.hpp"

namespace restore_sim {

TableWriter::TableWriter(std::ostream& out, OutputFormat format,
                         std::vector<std::string> columns)
    : out_(out), format_(format), columns_(std::move(columns)) {
    if (format_ == OutputFormat::Csv) {
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            out_ << (i == 0 ? "" : ",") << columns_[i];
        }
        out_ << '\n';
    }
}

void TableWriter::row(const nlohmann::ordered_json& values) {
    if (format_ == OutputFormat::Jsonl) {
        out_ << values.dump() << '\n';
        return;
    }
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        out_ << (i == 0 ? "" : ",");
        const auto it = values.find(columns_[i]);
        if (it == values.end() || it->is_null()) {
            continue;
        }
        if (it->is_string()) {
            out_ << it->get<std::string>();
        } else {
            out_ << it->dump();
        }
    }
    out_ << '\n';
}

}  // namespace restore_sim
