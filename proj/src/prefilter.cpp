#include "kusuri/prefilter.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <utility>

#include "kusuri/error.hpp"

namespace kusuri {
namespace {

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

bool is_blank(const std::string& s) { return s.find_first_not_of(" \t") == std::string::npos; }

Phrase phrase_of(std::string_view entry) {
  Phrase p;
  for (auto& t : tokenize(normalize(entry))) p.push_back(std::move(t.text));
  return p;
}

Lexicon read_lexicon(std::istream& in, std::string source, bool allow_empty) {
  std::set<Phrase> phrases;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(std::move(line));
    if (is_blank(line)) continue;
    if (line[line.find_first_not_of(" \t")] == '#') continue;
    Phrase p = phrase_of(line);
    if (p.empty()) continue;
    if (p.size() > kMaxPhraseTokens)
      throw ParseError(lineno, "phrase has " + std::to_string(p.size()) + " tokens (max " +
                                   std::to_string(kMaxPhraseTokens) + ")");
    phrases.insert(std::move(p));
  }
  if (phrases.empty() && !allow_empty) throw Error("empty lexicon");
  return Lexicon::from_phrases(std::move(phrases), std::move(source));
}

std::vector<std::string_view> folded_views(const Lexicon& lexicon, const Tweet& tweet,
                                           const MatchOptions& opts) {
  std::vector<std::string_view> views = token_views(tweet);
  if (!opts.plural_folding) return views;
  const PhraseMatcher& m = lexicon.matcher();
  for (auto& v : views) {
    if (v.size() > 1 && v.back() == 's' && !m.knows_token(v) &&
        m.knows_token(v.substr(0, v.size() - 1)))
      v.remove_suffix(1);
  }
  return views;
}

}  // namespace

Lexicon::Lexicon() : matcher_(std::make_shared<const PhraseMatcher>()) {}

Lexicon Lexicon::from_phrases(std::set<Phrase> phrases, std::string source) {
  Lexicon lex;
  for (const auto& p : phrases) {
    if (p.empty()) throw Error("empty phrase in lexicon");
    if (p.size() > kMaxPhraseTokens) throw Error("phrase exceeds " + std::to_string(kMaxPhraseTokens) + " tokens");
  }
  lex.phrases_ = std::move(phrases);
  lex.source_ = std::move(source);
  lex.matcher_ = std::make_shared<const PhraseMatcher>(
      std::vector<Phrase>(lex.phrases_.begin(), lex.phrases_.end()));
  return lex;
}

Lexicon Lexicon::from_entries(const std::vector<std::string>& entries, std::string source) {
  std::set<Phrase> phrases;
  for (const auto& e : entries) {
    Phrase p = phrase_of(e);
    if (p.empty()) continue;
    phrases.insert(std::move(p));
  }
  return from_phrases(std::move(phrases), std::move(source));
}

Lexicon load_lexicon(std::istream& in, std::string source) {
  return read_lexicon(in, std::move(source), false);
}

Lexicon load_word_list(std::istream& in, std::string source) {
  return read_lexicon(in, std::move(source), true);
}

void write_lexicon(const Lexicon& lexicon, std::ostream& out) {
  if (!lexicon.source().empty()) out << "# " << lexicon.source() << '\n';
  for (const auto& p : lexicon.phrases()) {
    for (std::size_t i = 0; i < p.size(); ++i) out << (i ? " " : "") << p[i];
    out << '\n';
  }
}

std::vector<std::string_view> token_views(const Tweet& tweet) {
  std::vector<std::string_view> v;
  v.reserve(tweet.tokens.size());
  for (const auto& t : tweet.tokens) v.emplace_back(t.text);
  return v;
}

LexiconMatch lexicon_classify(const Lexicon& lexicon, const Tweet& tweet, MatchOptions opts) {
  LexiconMatch m;
  m.spans = lexicon.matcher().find_all(folded_views(lexicon, tweet, opts));
  m.hit = !m.spans.empty();
  return m;
}

LexiconMatch variant_classify(const Lexicon& variants, const Tweet& tweet, MatchOptions opts) {
  return lexicon_classify(variants, tweet, opts);
}

PatternSet compile_patterns(std::istream& in) {
  PatternSet set;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(std::move(line));
    if (is_blank(line)) continue;
    try {
      set.patterns.push_back({line, lineno, Regex::compile(line)});
    } catch (const RegexError& e) {
      throw ParseError(lineno, "invalid pattern '" + line + "': " + e.what());
    }
  }
  return set;
}

bool pattern_classify(const PatternSet& patterns, const Tweet& tweet) {
  return std::any_of(patterns.patterns.begin(), patterns.patterns.end(),
                     [&](const CompiledPattern& p) { return p.regex.search(tweet.norm); });
}

std::string_view side_name(Side s) { return s == Side::kLeft ? "left" : "right"; }

std::vector<NgramCount> mine_context_ngrams(const Corpus& corpus, const Lexicon& seeds,
                                            std::size_t n, std::size_t top_k) {
  if (n < 1 || n > 3) throw Error("n-gram size must be 1, 2 or 3");
  std::map<std::pair<std::string, Side>, std::size_t> counts;
  auto join = [](const Tweet& t, std::size_t from, std::size_t len) {
    std::string s;
    for (std::size_t i = from; i < from + len; ++i) {
      if (i > from) s.push_back(' ');
      s += t.tokens[i].text;
    }
    return s;
  };
  for (const auto& e : corpus.items) {
    const Tweet& t = e.tweet;
    for (const auto& span : seeds.matcher().find_all(token_views(t))) {
      if (span.start_token >= n) ++counts[{join(t, span.start_token - n, n), Side::kLeft}];
      if (span.end_token + n < t.tokens.size())
        ++counts[{join(t, span.end_token + 1, n), Side::kRight}];
    }
  }
  std::vector<NgramCount> ranked;
  ranked.reserve(counts.size());
  for (auto& [key, count] : counts) ranked.push_back({key.first, key.second, count});
  std::stable_sort(ranked.begin(), ranked.end(), [](const NgramCount& a, const NgramCount& b) {
    return a.count > b.count;  // map order already gives ngram, then side
  });
  if (ranked.size() > top_k) ranked.resize(top_k);
  return ranked;
}

FilterVerdict run_filters(const Tweet& tweet, const Lexicon& lexicon, const Lexicon& variants,
                          const PatternSet& patterns, const WeakClassifier& weak,
                          double weak_threshold, MatchOptions opts) {
  FilterVerdict v;
  v.lex = lexicon_classify(lexicon, tweet, opts).hit;
  v.var = variant_classify(variants, tweet, opts).hit;
  v.pat = pattern_classify(patterns, tweet);
  v.weak = weak.probability(tweet) >= weak_threshold;
  return v;
}

}  // namespace kusuri
