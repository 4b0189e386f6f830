#include "bnat/crc32.hpp"

#include <array>

namespace bnat {

namespace {

std::array<std::uint32_t, 256> build_table() {
    std::array<std::uint32_t, 256> table{};
    for (std::uint32_t i = 0; i < 256; ++i) {
        std::uint32_t c = i;
        for (int bit = 0; bit < 8; ++bit)
            c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        table[i] = c;
    }
    return table;
}

const std::array<std::uint32_t, 256> kTable = build_table();

} // namespace

std::uint32_t crc32_update(std::uint32_t state, std::span<const std::uint8_t> data) {
    std::uint32_t c = state ^ 0xFFFFFFFFu;
    for (std::uint8_t byte : data) c = kTable[(c ^ byte) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

std::uint32_t crc32(std::span<const std::uint8_t> data) {
    return crc32_update(0, data);
}

} // namespace bnat
