#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace yprov {

/// Milliseconds since the Unix epoch, UTC.
using TimestampMs = std::int64_t;

/// Renders `2024-05-01T12:00:00.123Z`.
std::string format_rfc3339(TimestampMs ms);

/// Accepts `YYYY-MM-DDTHH:MM:SS[.fraction](Z|+hh:mm|-hh:mm)`; fractions beyond
/// milliseconds are truncated. Throws Error(InvalidArgument) on malformed input.
TimestampMs parse_rfc3339(std::string_view text);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_file(const std::filesystem::path& path);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::string read_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename so readers never see partial output.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Shortest decimal text that parses back to the same double ("nan", "inf", "-inf" for non-finite).
std::string format_double(double value);

}  // namespace yprov
