#include "sbelkit/text.hpp"

#include "sbelkit/error.hpp"

namespace sbelkit::text {

std::vector<std::size_t> codepoint_offsets(std::string_view s) {
  std::vector<std::size_t> offs;
  offs.reserve(s.size() + 1);
  std::size_t i = 0;
  while (i < s.size()) {
    offs.push_back(i);
    const auto lead = static_cast<unsigned char>(s[i]);
    std::size_t len = lead < 0x80 ? 1 : (lead >> 5) == 0x6 ? 2 : (lead >> 4) == 0xE ? 3
                                      : (lead >> 3) == 0x1E ? 4 : 0;
    if (len == 0 || i + len > s.size())
      throw DataError("malformed UTF-8 at byte " + std::to_string(i));
    for (std::size_t k = 1; k < len; ++k)
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2)
        throw DataError("malformed UTF-8 at byte " + std::to_string(i + k));
    i += len;
  }
  offs.push_back(s.size());
  return offs;
}

std::size_t codepoint_length(std::string_view s) { return codepoint_offsets(s).size() - 1; }

std::string codepoint_substr(std::string_view s, std::size_t start, std::size_t end) {
  auto offs = codepoint_offsets(s);
  const std::size_t n = offs.size() - 1;
  if (start > end || end > n) throw DataError("code point range out of bounds");
  return std::string(s.substr(offs[start], offs[end] - offs[start]));
}

}  // namespace sbelkit::text
