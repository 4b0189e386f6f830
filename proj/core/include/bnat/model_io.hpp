#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bnat/dbn.hpp"

namespace bnat {

// Model file layout (little-endian throughout):
//   magic "BNDM" | version 0x01 | u32 dim count | count x u32 dims
//   | param count x f64 (canonical flat order) | u32 CRC-32 of all
//   preceding bytes.
// The dim chain is [input, hidden..., classes]; the parameter count is
// implied by it.

std::vector<std::uint8_t> serialize_model(const DbnModel& model);
DbnModel parse_model(std::span<const std::uint8_t> bytes);

void save_model(const std::string& path, const DbnModel& model);
DbnModel load_model(const std::string& path);

} // namespace bnat
