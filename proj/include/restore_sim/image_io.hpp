#pragma once

#include <iosfwd>

#include "restore_sim/store.hpp"

namespace restore_sim {

/// Binary dump of a StoreImage, little-endian. Layout: magic "RSTR",
/// version u32, p u32, n u64, r u32, blocks-per-range u64, block-size u32,
/// permute u8, seed u64, alive flags u8[p], then per rank a u64 interval
/// count followed by (begin u64, end u64, payload bytes) records.
void save_store(const StoreImage& store, std::ostream& out);

/// Inverse of save_store. Throws DataError on malformed input.
StoreImage load_store(std::istream& in);

}  // namespace restore_sim
