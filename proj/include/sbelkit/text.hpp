#pragma once

// UTF-8 helpers. Corpus offsets count Unicode scalar values, not bytes.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace sbelkit::text {

// Byte offset of every code point, plus a final entry equal to s.size().
// Throws DataError on malformed UTF-8.
std::vector<std::size_t> codepoint_offsets(std::string_view s);

std::size_t codepoint_length(std::string_view s);

// Substring by code point indices [start, end).
std::string codepoint_substr(std::string_view s, std::size_t start, std::size_t end);

}  // namespace sbelkit::text
