#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "restore_sim/types.hpp"

namespace restore_sim {

/// Argument outside its documented domain (e.g. block id >= n).
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Inconsistent or unsupported configuration.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Malformed payloads or requests.
struct DataError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Operation not permitted in the current cluster or store state,
/// e.g. messaging a dead rank or killing a rank twice.
struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Every copy of the listed block intervals resides on a failed rank.
class IrrecoverableDataLoss : public std::runtime_error {
public:
    explicit IrrecoverableDataLoss(std::vector<BlockRange> lost)
        : std::runtime_error(describe(lost)), lost_(std::move(lost)) {}

    [[nodiscard]] const std::vector<BlockRange>& lost_ranges() const noexcept { return lost_; }

private:
    static std::string describe(const std::vector<BlockRange>& lost) {
        std::string msg = "irrecoverable data loss:";
        for (const BlockRange& range : lost) {
            msg += " [" + std::to_string(range.begin) + "," + std::to_string(range.end) + ")";
        }
        return msg;
    }

    std::vector<BlockRange> lost_;
};

}  // namespace restore_sim
