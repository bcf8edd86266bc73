#include <doctest.h>

#include <regex>
#include <sstream>

#include "kusuri/error.hpp"
#include "kusuri/prefilter.hpp"
#include "kusuri/random.hpp"
#include "kusuri/regex.hpp"
#include "oracles.hpp"

using namespace kusuri;

namespace {

Lexicon lex(std::vector<std::string> entries) { return Lexicon::from_entries(entries); }

PatternSet patterns(const std::string& text) {
  std::istringstream in(text);
  return compile_patterns(in);
}

struct FixedWeak : WeakClassifier {
  double p;
  explicit FixedWeak(double p) : p(p) {}
  double probability(const Tweet&) const override { return p; }
};

Corpus corpus_of(const std::vector<std::string>& texts) {
  Corpus c;
  for (std::size_t i = 0; i < texts.size(); ++i) c.items.push_back({Tweet::make(std::to_string(i), texts[i]), std::nullopt});
  return c;
}

}  // namespace

TEST_CASE("load_lexicon: normalization, comments, duplicates, empty") {
  std::istringstream in("# drugs\nNyQuil\n\nnyquil\n  Tylenol PM \nlyrica\n");
  Lexicon l = load_lexicon(in, "test");
  CHECK(l.size() == 3);
  CHECK(l.contains({"nyquil"}));
  CHECK(l.contains({"tylenol", "pm"}));
  CHECK(l.source() == "test");

  std::istringstream empty("# only a comment\n\n");
  try {
    load_lexicon(empty);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("empty lexicon") != std::string::npos);
  }
  std::istringstream empty2("");
  CHECK(load_word_list(empty2).empty());

  CHECK_THROWS_AS(lex({"a b c d e f"}), Error);
  CHECK(lex({"a b c d e"}).size() == 1);
}

TEST_CASE("write_lexicon round trips") {
  Lexicon l = lex({"xanax", "tylenol pm", "st. john's wort"});
  std::stringstream ss;
  write_lexicon(l, ss);
  Lexicon back = load_lexicon(ss);
  CHECK(back.phrases() == l.phrases());
}

TEST_CASE("lexicon_classify: examples") {
  auto r = lexicon_classify(lex({"nyquil"}), Tweet::make("1", "nyquil is my friend"));
  CHECK(r.hit);
  REQUIRE(r.spans.size() == 1);
  CHECK(r.spans[0].start_token == 0);
  CHECK(r.spans[0].end_token == 0);

  CHECK(lexicon_classify(lex({"lyrica"}), Tweet::make("2", "I actually really like Lyrica")).hit);
  CHECK_FALSE(lexicon_classify(lex({"hall"}), Tweet::make("3", "the halls were empty")).hit);
  CHECK_FALSE(lexicon_classify(lex({"percocet"}), Tweet::make("4", "the percocet-thief")).hit);
}

TEST_CASE("lexicon_classify: multi-token phrases and overlaps") {
  Lexicon l = lex({"tylenol", "tylenol pm", "pm"});
  auto r = lexicon_classify(l, Tweet::make("1", "took tylenol pm"));
  CHECK(r.spans.size() == 3);
  auto spans = r.spans;
  oracle::sort_spans(spans);
  CHECK(spans[0].start_token == 1);
  CHECK(spans[0].end_token == 1);
  CHECK(spans[1].start_token == 1);
  CHECK(spans[1].end_token == 2);
  CHECK(spans[2].start_token == 2);
}

TEST_CASE("plural folding is off by default") {
  Lexicon l = lex({"hall"});
  Tweet t = Tweet::make("1", "the halls were empty");
  CHECK_FALSE(lexicon_classify(l, t).hit);
  CHECK(lexicon_classify(l, t, MatchOptions{true}).hit);
}

TEST_CASE("variant_classify: examples") {
  CHECK(variant_classify(lex({"benadril"}), Tweet::make("1", "took benadril last night")).hit);
  CHECK_FALSE(variant_classify(Lexicon::from_phrases({}), Tweet::make("2", "anything at all")).hit);
  CHECK_FALSE(variant_classify(lex({"xanaxx"}), Tweet::make("3", "xanax helps")).hit);
}

TEST_CASE("matcher agrees with the sliding-window oracle and is monotone") {
  Rng rng(2024);
  const std::vector<std::string> alphabet = {"a", "b", "c", "d", "e", "f", "g", "h"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Phrase> phrases;
    const int np = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < np; ++i) {
      Phrase p;
      const int len = 1 + static_cast<int>(rng.below(3));
      for (int k = 0; k < len; ++k) p.push_back(alphabet[rng.below(4)]);
      phrases.push_back(p);
    }
    std::vector<std::string> toks;
    const int nt = static_cast<int>(rng.below(12));
    for (int k = 0; k < nt; ++k) toks.push_back(alphabet[rng.below(5)]);

    PhraseMatcher m(phrases);
    std::vector<std::string_view> views(toks.begin(), toks.end());
    auto got = m.find_all(views);
    oracle::sort_spans(got);
    std::vector<Phrase> unique_phrases(phrases);
    std::sort(unique_phrases.begin(), unique_phrases.end());
    unique_phrases.erase(std::unique(unique_phrases.begin(), unique_phrases.end()), unique_phrases.end());
    auto want = oracle::naive_find_all(unique_phrases, toks);
    oracle::sort_spans(want);
    CHECK(got == want);
    CHECK(m.contains_any(views) == !want.empty());

    // adding a phrase never removes a hit
    auto more = phrases;
    more.push_back({alphabet[rng.below(8)]});
    if (!want.empty()) CHECK(PhraseMatcher(more).contains_any(views));
  }
}

TEST_CASE("pattern_classify: examples") {
  auto ps = patterns("\\bi took (a|an|some) \\w+\n");
  CHECK(pattern_classify(ps, Tweet::make("1", "i took a xanax")));
  CHECK_FALSE(pattern_classify(ps, Tweet::make("2", "good game")));
  CHECK_FALSE(pattern_classify(PatternSet{}, Tweet::make("3", "i took a xanax")));
  // patterns see the normalized text
  CHECK(pattern_classify(ps, Tweet::make("4", "@Doc I TOOK SOME advil")));
  CHECK_FALSE(pattern_classify(ps, Tweet::make("5", "hi took a nap")));
}

TEST_CASE("pattern_classify is the disjunction of its patterns") {
  const std::vector<std::string> srcs = {"took \\w+", "\\bpills?\\b", "[0-9]+ ?mg", "side effects"};
  const std::vector<std::string> texts = {"took it", "2 pills", "500mg", "the pillow", "side effects suck",
                                          "nothing", "10 mg now", "pill"};
  std::string all;
  for (const auto& s : srcs) all += s + "\n";
  auto ps = patterns(all);
  CHECK(ps.size() == srcs.size());
  for (const auto& t : texts) {
    Tweet tw = Tweet::make("x", t);
    bool any = false;
    for (const auto& s : srcs) any = any || Regex::compile(s).search(tw.norm);
    CHECK(pattern_classify(ps, tw) == any);
  }
}

TEST_CASE("compile_patterns: dialect violations cite the line") {
  struct Case {
    const char* text;
    std::size_t line;
  };
  const Case cases[] = {
      {"ok\n^anchored\n", 2},   {"(open\n", 1},          {"a**\n", 1},        {"ok\nok\n(?:x)\n", 3},
      {"(a)\\1\n", 1},          {"a{2,100}\n", 1},       {"a{3,2}\n", 1},     {"[unclosed\n", 1},
      {"ok\nend$\n", 2},        {"a+?\n", 1},            {"x\\d\n", 1},       {"*a\n", 1},
  };
  for (const auto& c : cases) {
    std::istringstream in(c.text);
    try {
      compile_patterns(in);
      FAIL("expected ParseError for " << c.text);
    } catch (const ParseError& e) {
      CHECK_MESSAGE(e.line() == c.line, c.text);
    }
  }
  std::istringstream fine("a{2}\n\nb{1,}\n[a-c]{0,3}x\n\\.\\(\n");
  CHECK(compile_patterns(fine).size() == 4);
}

namespace {

// Random patterns inside the subset where ECMAScript and our dialect agree
// on lowercase ASCII text.
std::string random_pattern(Rng& rng, int depth) {
  auto atom = [&]() -> std::string {
    switch (rng.below(depth > 0 ? 9 : 7)) {
      case 0: return "a";
      case 1: return "b";
      case 2: return " ";
      case 3: return ".";
      case 4: return "[ab]";
      case 5: return "[^a ]";
      case 6: return rng.below(2) ? "\\w" : "\\s";
      case 7: return "(" + random_pattern(rng, depth - 1) + ")";
      default: return "(" + random_pattern(rng, depth - 1) + "|" + random_pattern(rng, depth - 1) + ")";
    }
  };
  std::string out;
  const int n = 1 + static_cast<int>(rng.below(4));
  for (int i = 0; i < n; ++i) {
    if (rng.below(6) == 0) out += "\\b";
    out += atom();
    switch (rng.below(8)) {
      case 0: out += "*"; break;
      case 1: out += "+"; break;
      case 2: out += "?"; break;
      case 3: out += "{1,2}"; break;
      case 4: out += "{2}"; break;
      default: break;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("regex search agrees with std::regex on random ASCII cases") {
  Rng rng(77);
  const char chars[] = {'a', 'b', 'c', ' '};
  for (int trial = 0; trial < 1500; ++trial) {
    const std::string pat = random_pattern(rng, 2);
    Regex ours = Regex::compile(pat);
    std::regex ref(pat, std::regex::ECMAScript);
    for (int k = 0; k < 6; ++k) {
      std::string text;
      const int len = static_cast<int>(rng.below(9));
      for (int i = 0; i < len; ++i) text += chars[rng.below(4)];
      CHECK_MESSAGE(ours.search(text) == std::regex_search(text, ref), "pattern '" << pat << "' text '" << text << "'");
    }
  }
}

TEST_CASE("regex: non-ASCII bytes count as word characters") {
  CHECK(Regex::compile("\\bcafé\\b").search("un café noir"));
  CHECK(Regex::compile("\\w+").search("ωω"));
  CHECK_FALSE(Regex::compile("\\bfé\\b").search("café"));
}

TEST_CASE("regex: search is linear in text length") {
  Regex r = Regex::compile("(a|aa)*b");
  std::string text(200000, 'a');
  CHECK_FALSE(r.search(text));  // would explode under backtracking
}

TEST_CASE("mine_context_ngrams: examples") {
  auto r = mine_context_ngrams(corpus_of({"i took a xanax"}), lex({"xanax"}), 2, 10);
  REQUIRE(r.size() == 1);
  CHECK(r[0] == NgramCount{"took a", Side::kLeft, 1});

  CHECK(mine_context_ngrams(corpus_of({"nothing here"}), lex({"xanax"}), 2, 10).empty());

  auto two = mine_context_ngrams(corpus_of({"took a xanax", "took a advil"}), lex({"xanax", "advil"}), 2, 10);
  REQUIRE_FALSE(two.empty());
  CHECK(two[0] == NgramCount{"took a", Side::kLeft, 2});
}

TEST_CASE("mine_context_ngrams: both sides, ranking and ties") {
  auto c = corpus_of({"i took xanax today", "i took xanax and slept", "we love advil today"});
  auto r = mine_context_ngrams(c, lex({"xanax", "advil"}), 1, 10);
  // hand count: left {took:2, love:1}; right {today:2, and:1}
  REQUIRE(r.size() == 4);
  CHECK(r[0] == NgramCount{"today", Side::kRight, 2});
  CHECK(r[1] == NgramCount{"took", Side::kLeft, 2});
  CHECK(r[2] == NgramCount{"and", Side::kRight, 1});
  CHECK(r[3] == NgramCount{"love", Side::kLeft, 1});
  CHECK(mine_context_ngrams(c, lex({"xanax", "advil"}), 1, 2).size() == 2);
  CHECK_THROWS_AS(mine_context_ngrams(c, lex({"xanax"}), 4, 2), Error);
  CHECK_THROWS_AS(mine_context_ngrams(c, lex({"xanax"}), 0, 2), Error);
}

TEST_CASE("run_filters assembles the verdict") {
  Lexicon l = lex({"xanax"});
  Lexicon v = lex({"xanx"});
  auto ps = patterns("\\bi took \\w+\n");
  FixedWeak hi(0.7), lo(0.2), edge(0.5);
  auto v1 = run_filters(Tweet::make("1", "i took xanx"), l, v, ps, hi);
  CHECK(v1 == FilterVerdict{false, true, true, true});
  auto v2 = run_filters(Tweet::make("2", "xanax"), l, v, ps, lo);
  CHECK(v2 == FilterVerdict{true, false, false, false});
  CHECK(run_filters(Tweet::make("3", "x"), l, v, ps, edge).weak);  // threshold is inclusive
  CHECK_FALSE(run_filters(Tweet::make("3", "x"), l, v, ps, hi, 0.8).weak);
  CHECK(v1.fired_count() == 3);
}
