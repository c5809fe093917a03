#pragma once

#include "adaptids/learn.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace adaptids {

inline constexpr std::uint16_t kModelFormatVersion = 1;

/// Model file layout (little-endian):
///   "SADM" | version u16 | algorithm u8 | schema_hash u64 | trained_at f64 |
///   payload_len u32 | payload | crc32 u32 (over every preceding byte)
std::vector<std::byte> serialize_model(const DetectionModel& m);

/// Throws Error with BadMagic, UnsupportedVersion, CorruptPayload, or
/// SchemaMismatch (only when expected_schema is given and differs).
DetectionModel deserialize_model(std::span<const std::byte> bytes,
                                 std::optional<std::uint64_t> expected_schema = std::nullopt);

void save_model(const std::filesystem::path& path, const DetectionModel& m);
DetectionModel load_model(const std::filesystem::path& path,
                          std::optional<std::uint64_t> expected_schema = std::nullopt);

} // namespace adaptids
