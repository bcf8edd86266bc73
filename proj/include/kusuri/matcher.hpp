#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kusuri {

using Phrase = std::vector<std::string>;

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept {
    return std::hash<std::string_view>{}(s);
  }
};

template <class V>
using StringMap = std::unordered_map<std::string, V, StringHash, std::equal_to<>>;

struct MatchSpan {
  std::size_t start_token = 0;
  std::size_t end_token = 0;  // inclusive
  Phrase phrase;

  bool operator==(const MatchSpan&) const = default;
};

// Aho-Corasick automaton over token ids. After construction a scan costs
// O(tokens + matches) regardless of the number of phrases.
class PhraseMatcher {
 public:
  PhraseMatcher() : PhraseMatcher(std::vector<Phrase>{}) {}
  explicit PhraseMatcher(const std::vector<Phrase>& phrases);

  // Every occurrence of every phrase; overlapping matches are all reported,
  // ordered by end position then by decreasing length.
  std::vector<MatchSpan> find_all(const std::vector<std::string_view>& tokens) const;

  bool contains_any(const std::vector<std::string_view>& tokens) const;

  bool knows_token(std::string_view token) const;

 private:
  struct Node {
    std::unordered_map<int, int> next;
    int fail = 0;
    int output_link = -1;  // nearest proper suffix state that ends a phrase
    int phrase = -1;
  };

  int token_id(std::string_view token) const;

  template <class OnMatch>
  void scan(const std::vector<std::string_view>& tokens, OnMatch&& on_match) const;

  StringMap<int> vocab_;
  std::vector<Node> nodes_;
  std::vector<Phrase> phrases_;
};

}  // namespace kusuri
