#ifndef NBPUF_GRAY_CODE_HPP
#define NBPUF_GRAY_CODE_HPP

#include <cstdint>
#include <string>
#include <string_view>

#include "nbpuf/error.hpp"

namespace nbpuf {

inline constexpr int kMaxGrayWidth = 16;

/// Reflected Gray codeword of fixed width. Bits are indexed most-significant
/// first, matching the "0"/"1" text rendering used in files.
class GrayWord {
 public:
  GrayWord(std::uint32_t code, int width) : code_(code), width_(width) {
    if (width < 1 || width > kMaxGrayWidth) throw DomainError("Gray width must be in [1, 16]: " + std::to_string(width));
    if (code >> width) throw DomainError("Gray codeword does not fit in " + std::to_string(width) + " bits");
  }

  /// Parses an MSB-first string of '0'/'1'.
  static GrayWord parse(std::string_view bits) {
    if (bits.empty() || bits.size() > kMaxGrayWidth) throw DataError("bad bit pattern length: '" + std::string(bits) + "'");
    std::uint32_t code = 0;
    for (char c : bits) {
      if (c != '0' && c != '1') throw DataError("bad bit pattern: '" + std::string(bits) + "'");
      code = (code << 1) | static_cast<std::uint32_t>(c == '1');
    }
    return GrayWord(code, static_cast<int>(bits.size()));
  }

  [[nodiscard]] std::uint32_t code() const noexcept { return code_; }
  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] bool bit(int i) const noexcept { return (code_ >> (width_ - 1 - i)) & 1u; }

  [[nodiscard]] std::string to_string() const {
    std::string s(static_cast<std::size_t>(width_), '0');
    for (int i = 0; i < width_; ++i) s[static_cast<std::size_t>(i)] = bit(i) ? '1' : '0';
    return s;
  }

  friend bool operator==(const GrayWord&, const GrayWord&) = default;

 private:
  std::uint32_t code_;
  int width_;
};

inline GrayWord gray_encode(std::uint32_t symbol, int width) {
  if (width < 1 || width > kMaxGrayWidth) throw DomainError("Gray width must be in [1, 16]: " + std::to_string(width));
  if (symbol >> width) {
    throw DomainError("symbol " + std::to_string(symbol) + " out of range for width " + std::to_string(width));
  }
  return GrayWord(symbol ^ (symbol >> 1), width);
}

inline std::uint32_t gray_decode(const GrayWord& word) noexcept {
  std::uint32_t s = word.code();
  for (int shift = 1; shift < word.width(); shift <<= 1) s ^= s >> shift;
  return s;
}

}  // namespace nbpuf

#endif  // NBPUF_GRAY_CODE_HPP
