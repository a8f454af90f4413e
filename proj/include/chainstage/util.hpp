#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace chainstage {

using Timestamp = std::chrono::sys_seconds;
using Clock = std::function<Timestamp()>;

// Wall clock truncated to whole seconds (UTC).
Timestamp system_now();

// Clock that starts at `origin` and advances one second per call.
// Used wherever byte-reproducible output is required.
Clock stepping_clock(Timestamp origin);

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_timestamp(Timestamp t);
std::optional<Timestamp> parse_timestamp(std::string_view text);

// 26-character Crockford base32 ULID: 48-bit millisecond time + 80 random bits.
// Lexicographic order follows creation time.
std::string new_ulid();

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
bool is_blank(std::string_view s);

// Number of whitespace-separated words.
std::size_t word_count(std::string_view s);

// Number of Unicode code points in a UTF-8 string (invalid bytes count once).
std::size_t utf8_length(std::string_view s);

// Whole-file helpers; both throw IO_ERROR. The write goes to a temporary
// sibling, is flushed to disk, then renamed over the target.
std::string read_text_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace chainstage
