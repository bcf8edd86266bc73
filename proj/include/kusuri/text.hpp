#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace kusuri {

inline constexpr std::size_t kMaxTokens = 64;
inline constexpr std::size_t kMaxTokenChars = 25;

inline constexpr std::string_view kUserPlaceholder = "<user>";
inline constexpr std::string_view kUrlPlaceholder = "<url>";

struct Token {
  std::string text;
  std::vector<char32_t> chars;  // Unicode code points of `text`

  bool operator==(const Token&) const = default;
};

struct Tweet {
  std::string id;
  std::string raw;
  std::string norm;
  std::vector<Token> tokens;

  // Normalizes and tokenizes `raw`.
  static Tweet make(std::string id, std::string raw);

  bool operator==(const Tweet&) const = default;
};

struct LabeledTweet {
  Tweet tweet;
  int label = 0;  // 1 = mentions a medication

  bool operator==(const LabeledTweet&) const = default;
};

struct CorpusEntry {
  Tweet tweet;
  std::optional<int> label;

  bool operator==(const CorpusEntry&) const = default;
};

struct Corpus {
  std::vector<CorpusEntry> items;
  std::string provenance;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }

  bool operator==(const Corpus&) const = default;
};

// UTF-8 helpers. Invalid sequences decode to U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view cps);

// Lowercase; URLs -> "<url>"; @-mentions -> "<user>"; whitespace collapsed
// to single spaces and trimmed.
std::string normalize(std::string_view raw);

// Whitespace split, punctuation split off into single-character tokens
// (placeholders stay atomic, intra-word '-' and '\'' and digit-internal '.'
// and ',' are kept). At most kMaxTokens tokens, each truncated to
// kMaxTokenChars code points.
std::vector<Token> tokenize(std::string_view norm);

std::string join_tokens(const std::vector<Token>& tokens);

// Line-delimited JSON records {"id", "text", optional "label"}.
Corpus load_corpus(std::istream& in, std::string provenance = {});
void write_corpus(const Corpus& corpus, std::ostream& out);

// Incremental reader over the same format; rejects duplicate ids across
// the whole stream.
class CorpusReader {
 public:
  explicit CorpusReader(std::istream& in);

  std::optional<CorpusEntry> next();
  // Replaces out.items with up to max_items entries; returns the count.
  std::size_t next_batch(std::size_t max_items, Corpus& out);
  std::size_t line() const { return lineno_; }

 private:
  std::istream& in_;
  std::size_t lineno_ = 0;
  std::unordered_set<std::string> seen_;
};

// Keeps the first occurrence of each distinct normalized text.
Corpus dedup(const Corpus& corpus);

// Pluggable language-identification hook; the default accepts everything.
using LanguagePredicate = std::function<bool(const Tweet&)>;
Corpus filter_language(const Corpus& corpus, const LanguagePredicate& keep);

// Random partition; |train| = round(|corpus| * train_fraction), clamped so
// both sides are non-empty. Each side keeps the corpus order.
std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double train_fraction,
                                       std::uint64_t rng_seed);

}  // namespace kusuri
