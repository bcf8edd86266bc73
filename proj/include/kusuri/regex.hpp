#pragma once

#include <bitset>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "kusuri/error.hpp"

namespace kusuri {

class RegexError : public Error {
 public:
  RegexError(std::size_t offset, const std::string& what)
      : Error("offset " + std::to_string(offset) + ": " + what), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Restricted regular-expression dialect, compiled to a Thompson NFA and
// matched by state-set simulation (no backtracking, linear in text length).
//
// Supported: literals, '.', classes [...] with ranges and '^' negation,
// '|', '(...)', quantifiers * + ? {m} {m,} {m,n}, \b, \w, \s, and
// backslash-escaped punctuation. Anchors, backreferences, lookaround and
// other escapes are rejected. Matching is byte-wise; letters in the pattern
// are folded to lowercase. \w is [a-z0-9_] plus every byte >= 0x80, so UTF-8
// letters from other scripts count as word characters.
class Regex {
 public:
  static constexpr int kMaxRepeat = 50;

  static Regex compile(std::string_view pattern);

  // True iff the pattern matches some substring of `text`.
  bool search(std::string_view text) const;

  const std::string& source() const { return source_; }
  std::size_t state_count() const { return states_.size(); }

  enum class Kind { kByte, kSplit, kWordBoundary, kMatch };

  struct State {
    Kind kind = Kind::kMatch;
    std::bitset<256> bytes;
    int out = -1;
    int out1 = -1;
  };

 private:
  friend class RegexCompiler;

  void add_to_set(std::vector<int>& set, std::vector<std::size_t>& mark, std::size_t gen,
                  int state, int prev, int next, std::vector<int>& stack) const;

  std::string source_;
  std::vector<State> states_;
  int start_ = -1;
};

}  // namespace kusuri
