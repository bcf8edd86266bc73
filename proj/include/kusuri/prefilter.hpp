#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kusuri/matcher.hpp"
#include "kusuri/regex.hpp"
#include "kusuri/text.hpp"

namespace kusuri {

inline constexpr std::size_t kMaxPhraseTokens = 5;

// Set of normalized token sequences with a prebuilt matcher. Immutable
// after construction and safe to share between threads.
class Lexicon {
 public:
  Lexicon();

  // Each entry is normalized and tokenized; duplicates collapse. Entries
  // that tokenize to nothing are skipped; more than kMaxPhraseTokens
  // tokens is an error.
  static Lexicon from_entries(const std::vector<std::string>& entries, std::string source = {});
  static Lexicon from_phrases(std::set<Phrase> phrases, std::string source = {});

  const std::set<Phrase>& phrases() const { return phrases_; }
  const std::string& source() const { return source_; }
  std::size_t size() const { return phrases_.size(); }
  bool empty() const { return phrases_.empty(); }
  bool contains(const Phrase& p) const { return phrases_.count(p) > 0; }

  const PhraseMatcher& matcher() const { return *matcher_; }

 private:
  std::set<Phrase> phrases_;
  std::string source_;
  std::shared_ptr<const PhraseMatcher> matcher_;
};

// One phrase per line, '#' comments, blank lines ignored.
Lexicon load_lexicon(std::istream& in, std::string source = {});
// Like load_lexicon but an empty file yields an empty lexicon.
Lexicon load_word_list(std::istream& in, std::string source = {});
void write_lexicon(const Lexicon& lexicon, std::ostream& out);

struct LexiconMatch {
  bool hit = false;
  std::vector<MatchSpan> spans;
};

struct MatchOptions {
  // Strip one trailing 's' from a token the lexicon does not know when the
  // stripped form is known. Off by default.
  bool plural_folding = false;
};

LexiconMatch lexicon_classify(const Lexicon& lexicon, const Tweet& tweet, MatchOptions opts = {});
LexiconMatch variant_classify(const Lexicon& variants, const Tweet& tweet, MatchOptions opts = {});

struct CompiledPattern {
  std::string source;
  std::size_t line = 0;
  Regex regex;
};

struct PatternSet {
  std::vector<CompiledPattern> patterns;

  std::size_t size() const { return patterns.size(); }
  bool empty() const { return patterns.empty(); }
};

// One pattern per line; blank lines ignored. Dialect violations raise a
// ParseError naming the line and construct.
PatternSet compile_patterns(std::istream& in);

bool pattern_classify(const PatternSet& patterns, const Tweet& tweet);

enum class Side { kLeft, kRight };

struct NgramCount {
  std::string ngram;
  Side side = Side::kLeft;
  std::size_t count = 0;

  bool operator==(const NgramCount&) const = default;
};

std::string_view side_name(Side s);

// Counts the n tokens immediately left and right of every seed occurrence;
// returns the top_k by descending count, ties broken by ngram then side.
std::vector<NgramCount> mine_context_ngrams(const Corpus& corpus, const Lexicon& seeds,
                                            std::size_t n, std::size_t top_k);

struct FilterVerdict {
  bool lex = false;
  bool var = false;
  bool pat = false;
  bool weak = false;

  int fired_count() const { return int(lex) + int(var) + int(pat) + int(weak); }
  bool operator==(const FilterVerdict&) const = default;
};

// The weakly supervised classifier seen through the probability it assigns.
class WeakClassifier {
 public:
  virtual ~WeakClassifier() = default;
  virtual double probability(const Tweet& tweet) const = 0;
};

inline constexpr double kDefaultWeakThreshold = 0.5;

FilterVerdict run_filters(const Tweet& tweet, const Lexicon& lexicon, const Lexicon& variants,
                          const PatternSet& patterns, const WeakClassifier& weak,
                          double weak_threshold = kDefaultWeakThreshold, MatchOptions opts = {});

std::vector<std::string_view> token_views(const Tweet& tweet);

}  // namespace kusuri
