#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "brwlab/errors.hpp"

namespace brw {

// A site is identified by its coordinate word: {i} on the half-line or in a
// finite list, a path word from the root on trees, a component tag followed
// by local coordinates on pasted graphs. Ordering is by length, then
// lexicographic, so breadth-first ties resolve by coordinate order.
struct Site {
  std::vector<std::int64_t> coord;

  Site() = default;
  explicit Site(std::vector<std::int64_t> c) : coord(std::move(c)) {}
  static Site at(std::int64_t i) { return Site({i}); }

  bool operator==(const Site&) const = default;
  std::strong_ordering operator<=>(const Site& other) const {
    if (auto c = coord.size() <=> other.coord.size(); c != 0) return c;
    for (std::size_t i = 0; i < coord.size(); ++i) {
      if (auto c = coord[i] <=> other.coord[i]; c != 0) return c;
    }
    return std::strong_ordering::equal;
  }

  Site child(std::int64_t k) const {
    Site s = *this;
    s.coord.push_back(k);
    return s;
  }

  // Dotted form; the empty word prints as "o".
  std::string str() const {
    if (coord.empty()) return "o";
    std::string out;
    for (std::size_t i = 0; i < coord.size(); ++i) {
      if (i) out += '.';
      out += std::to_string(coord[i]);
    }
    return out;
  }

  static Site parse(std::string_view text) {
    if (text == "o") return Site{};
    Site s;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto dot = text.find('.', pos);
      auto piece = text.substr(pos, dot == std::string_view::npos ? std::string_view::npos : dot - pos);
      if (piece.empty()) throw ValidationError("malformed site key '" + std::string(text) + "'");
      std::int64_t v = 0;
      bool neg = false;
      std::size_t i = 0;
      if (piece[0] == '-') {
        neg = true;
        i = 1;
      }
      if (i == piece.size()) throw ValidationError("malformed site key '" + std::string(text) + "'");
      for (; i < piece.size(); ++i) {
        if (piece[i] < '0' || piece[i] > '9')
          throw ValidationError("malformed site key '" + std::string(text) + "'");
        v = v * 10 + (piece[i] - '0');
      }
      s.coord.push_back(neg ? -v : v);
      if (dot == std::string_view::npos) break;
      pos = dot + 1;
    }
    return s;
  }
};

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ s.coord.size();
    for (auto v : s.coord) {
      h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace brw
