#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace bnat {

/// CRC-32, IEEE 802.3 polynomial (reflected 0xEDB88320), init and final
/// xor 0xFFFFFFFF. Table-driven; matches zlib's crc32.
std::uint32_t crc32(std::span<const std::uint8_t> data);

/// Incremental form: feed the previous return value back in as `state`.
/// Start with state = 0.
std::uint32_t crc32_update(std::uint32_t state, std::span<const std::uint8_t> data);

} // namespace bnat
