#include "restore_sim/image_io.hpp"

#include <array>
#include <cstring>
#include <istream>
#include <ostream>

#include "restore_sim/errors.hpp"

namespace restore_sim {

namespace {

constexpr std::array<char, 4> kMagic = {'R', 'S', 'T', 'R'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
    std::array<char, sizeof(T)> bytes;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
    }
    out.write(bytes.data(), bytes.size());
}

template <typename T>
T read_le(std::istream& in) {
    std::array<char, sizeof(T)> bytes;
    in.read(bytes.data(), bytes.size());
    if (!in) {
        throw DataError("truncated store image");
    }
    std::uint64_t value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        value |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
    }
    return static_cast<T>(value);
}

}  // namespace

void save_store(const StoreImage& store, std::ostream& out) {
    const DistributionConfig& cfg = store.config();
    out.write(kMagic.data(), kMagic.size());
    write_le<std::uint32_t>(out, kVersion);
    write_le<std::uint32_t>(out, cfg.ranks);
    write_le<std::uint64_t>(out, cfg.blocks);
    write_le<std::uint32_t>(out, cfg.replication);
    write_le<std::uint64_t>(out, cfg.blocks_per_range);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.block_size()));
    write_le<std::uint8_t>(out, cfg.permute ? 1 : 0);
    write_le<std::uint64_t>(out, cfg.seed);
    for (rank_t rank = 0; rank < cfg.ranks; ++rank) {
        write_le<std::uint8_t>(out, store.is_alive(rank) ? 1 : 0);
    }
    std::vector<std::byte> buffer;
    for (rank_t rank = 0; rank < cfg.ranks; ++rank) {
        const std::vector<BlockRange> ranges = store.stored_ranges(rank);
        write_le<std::uint64_t>(out, ranges.size());
        for (const BlockRange& range : ranges) {
            write_le<std::uint64_t>(out, range.begin);
            write_le<std::uint64_t>(out, range.end);
            buffer.resize(range.size() * store.block_size());
            store.read_blocks(rank, range, buffer);
            out.write(reinterpret_cast<const char*>(buffer.data()),
                      static_cast<std::streamsize>(buffer.size()));
        }
    }
}

StoreImage load_store(std::istream& in) {
    std::array<char, 4> magic;
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) {
        throw DataError("not a store image (bad magic)");
    }
    if (read_le<std::uint32_t>(in) != kVersion) {
        throw DataError("unsupported store image version");
    }
    DistributionConfig cfg;
    cfg.ranks = read_le<std::uint32_t>(in);
    cfg.blocks = read_le<std::uint64_t>(in);
    cfg.replication = read_le<std::uint32_t>(in);
    cfg.blocks_per_range = read_le<std::uint64_t>(in);
    const auto block_size = read_le<std::uint32_t>(in);
    cfg.permute = read_le<std::uint8_t>(in) != 0;
    cfg.seed = read_le<std::uint64_t>(in);
    cfg.validate();

    std::vector<rank_t> dead;
    for (rank_t rank = 0; rank < cfg.ranks; ++rank) {
        if (read_le<std::uint8_t>(in) == 0) {
            dead.push_back(rank);
        }
    }

    StoreImage image(cfg, block_size);
    std::vector<std::byte> buffer;
    for (rank_t rank = 0; rank < cfg.ranks; ++rank) {
        const auto count = read_le<std::uint64_t>(in);
        for (std::uint64_t i = 0; i < count; ++i) {
            BlockRange range;
            range.begin = read_le<std::uint64_t>(in);
            range.end = read_le<std::uint64_t>(in);
            if (range.empty() || range.end > cfg.blocks) {
                throw DataError("stored interval outside [0, n)");
            }
            buffer.resize(range.size() * block_size);
            in.read(reinterpret_cast<char*>(buffer.data()),
                    static_cast<std::streamsize>(buffer.size()));
            if (!in) {
                throw DataError("truncated store image payload");
            }
            image.store_blocks(rank, range, buffer);
        }
    }
    image.coalesce();
    image.mark_failed(dead);
    return image;
}

}  // namespace restore_sim
