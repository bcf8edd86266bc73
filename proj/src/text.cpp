#include "kusuri/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "kusuri/error.hpp"
#include "kusuri/random.hpp"

namespace kusuri {
namespace {

constexpr char32_t kReplacement = 0xFFFD;

char32_t to_lower(char32_t c) {
  if (c < 0x80) return (c >= 'A' && c <= 'Z') ? c + 32 : c;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;      // Latin-1
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;   // Greek
  if (c >= 0x410 && c <= 0x42F) return c + 32;                 // Cyrillic
  if (c >= 0x400 && c <= 0x40F) return c + 80;
  return c;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_alnum(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_ascii_word(char c) { return is_alnum(c) || c == '_'; }

// Letters/digits, plus any non-ASCII byte (letters in other scripts).
bool is_token_word(char c) {
  return is_alnum(c) || c == '_' || static_cast<unsigned char>(c) >= 0x80;
}

bool is_punct(char c) {
  auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u) && c != '#' && c != '_';
}

bool starts_with_at(std::string_view s, std::size_t pos, std::string_view prefix) {
  return s.substr(pos, prefix.size()) == prefix;
}

std::vector<std::string_view> split_spaces(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string lowercase(std::string_view s) {
  bool ascii = std::all_of(s.begin(), s.end(),
                           [](char c) { return static_cast<unsigned char>(c) < 0x80; });
  if (ascii) {
    std::string out(s);
    for (char& c : out) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
    }
    return out;
  }
  std::u32string cps;
  for (char32_t c : decode_utf8(s)) cps.push_back(to_lower(c));
  return encode_utf8(cps);
}

Token make_token(std::string text) {
  Token t;
  t.chars = decode_utf8(text);
  if (t.chars.size() > kMaxTokenChars) {
    t.chars.resize(kMaxTokenChars);
    t.text = encode_utf8(std::u32string(t.chars.begin(), t.chars.end()));
  } else {
    t.text = std::move(text);
  }
  return t;
}

}  // namespace

std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    auto b0 = static_cast<unsigned char>(s[i]);
    int extra = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      extra = 1;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      extra = 2;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      extra = 3;
      cp = b0 & 0x07;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + extra >= s.size()) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string encode_utf8(std::u32string_view cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t c : cps) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

std::string normalize(std::string_view raw) {
  const std::string lowered = lowercase(raw);
  std::string out;
  out.reserve(lowered.size());
  for (std::string_view chunk : split_spaces(lowered)) {
    if (!out.empty()) out.push_back(' ');
    // Context checks look at what has been emitted, so that a second pass
    // over the output sees the same neighbours and normalize is idempotent.
    std::size_t i = 0;
    while (i < chunk.size()) {
      const bool boundary = out.empty() || !is_ascii_word(out.back());
      if (boundary && (starts_with_at(chunk, i, "http://") ||
                       starts_with_at(chunk, i, "https://") ||
                       starts_with_at(chunk, i, "www."))) {
        out.append(kUrlPlaceholder);
        break;  // a URL runs to the next whitespace
      }
      if (chunk[i] == '@' && boundary && i + 1 < chunk.size() &&
          is_ascii_word(chunk[i + 1])) {
        out.append(kUserPlaceholder);
        ++i;
        while (i < chunk.size() && is_ascii_word(chunk[i])) ++i;
        continue;
      }
      out.push_back(chunk[i]);
      ++i;
    }
  }
  return out;
}

std::vector<Token> tokenize(std::string_view norm) {
  std::vector<Token> tokens;
  auto emit = [&tokens](std::string text) {
    if (!text.empty() && tokens.size() < kMaxTokens) tokens.push_back(make_token(std::move(text)));
  };
  for (std::string_view chunk : split_spaces(norm)) {
    std::string word;
    std::size_t i = 0;
    while (i < chunk.size()) {
      if (starts_with_at(chunk, i, kUserPlaceholder) || starts_with_at(chunk, i, kUrlPlaceholder)) {
        emit(std::exchange(word, {}));
        std::string_view ph =
            starts_with_at(chunk, i, kUserPlaceholder) ? kUserPlaceholder : kUrlPlaceholder;
        emit(std::string(ph));
        i += ph.size();
        continue;
      }
      const char c = chunk[i];
      if (is_punct(c)) {
        const bool has_next = i + 1 < chunk.size();
        const bool joiner = (c == '-' || c == '\'') && !word.empty() &&
                            is_token_word(word.back()) && has_next && is_token_word(chunk[i + 1]);
        const bool decimal = (c == '.' || c == ',') && !word.empty() && is_digit(word.back()) &&
                             has_next && is_digit(chunk[i + 1]);
        if (joiner || decimal) {
          word.push_back(c);
        } else {
          emit(std::exchange(word, {}));
          emit(std::string(1, c));
        }
      } else {
        word.push_back(c);
      }
      ++i;
    }
    emit(std::move(word));
  }
  return tokens;
}

std::string join_tokens(const std::vector<Token>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t.text;
  }
  return out;
}

Tweet Tweet::make(std::string id, std::string raw) {
  Tweet t;
  t.id = std::move(id);
  t.norm = normalize(raw);
  t.raw = std::move(raw);
  t.tokens = tokenize(t.norm);
  return t;
}

CorpusReader::CorpusReader(std::istream& in) : in_(in) {}

std::optional<CorpusEntry> CorpusReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++lineno_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(lineno_, std::string("malformed record: ") + e.what());
    }
    if (!rec.is_object()) throw ParseError(lineno_, "record is not an object");
    auto id = rec.find("id");
    auto text = rec.find("text");
    if (id == rec.end() || !id->is_string()) throw ParseError(lineno_, "missing string field 'id'");
    if (text == rec.end() || !text->is_string())
      throw ParseError(lineno_, "missing string field 'text'");
    std::optional<int> label;
    if (auto l = rec.find("label"); l != rec.end() && !l->is_null()) {
      if (!l->is_number_integer() || (l->get<int>() != 0 && l->get<int>() != 1))
        throw ParseError(lineno_, "label must be 0 or 1");
      label = l->get<int>();
    }
    auto sid = id->get<std::string>();
    if (!seen_.insert(sid).second) throw ParseError(lineno_, "duplicate id '" + sid + "'");
    return CorpusEntry{Tweet::make(std::move(sid), text->get<std::string>()), label};
  }
  return std::nullopt;
}

std::size_t CorpusReader::next_batch(std::size_t max_items, Corpus& out) {
  out.items.clear();
  while (out.items.size() < max_items) {
    auto e = next();
    if (!e) break;
    out.items.push_back(std::move(*e));
  }
  return out.items.size();
}

Corpus load_corpus(std::istream& in, std::string provenance) {
  Corpus corpus;
  corpus.provenance = std::move(provenance);
  CorpusReader reader(in);
  while (auto e = reader.next()) corpus.items.push_back(std::move(*e));
  return corpus;
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& e : corpus.items) {
    nlohmann::ordered_json rec;
    rec["id"] = e.tweet.id;
    rec["text"] = e.tweet.raw;
    if (e.label) rec["label"] = *e.label;
    try {
      out << rec.dump() << '\n';
    } catch (const nlohmann::json::exception& ex) {
      throw Error("cannot encode tweet '" + e.tweet.id + "': " + ex.what());
    }
  }
}

Corpus dedup(const Corpus& corpus) {
  Corpus out;
  out.provenance = corpus.provenance;
  std::unordered_set<std::string_view> seen;
  for (const auto& e : corpus.items) {
    if (seen.insert(e.tweet.norm).second) out.items.push_back(e);
  }
  return out;
}

Corpus filter_language(const Corpus& corpus, const LanguagePredicate& keep) {
  Corpus out;
  out.provenance = corpus.provenance;
  for (const auto& e : corpus.items) {
    if (!keep || keep(e.tweet)) out.items.push_back(e);
  }
  return out;
}

std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double train_fraction,
                                       std::uint64_t rng_seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error("train_fraction must be in (0, 1)");
  const std::size_t n = corpus.size();
  if (n < 2) throw Error("cannot split a corpus with fewer than 2 items");
  auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(rng_seed);
  rng.shuffle(order);
  std::vector<char> in_train(n, 0);
  for (std::size_t k = 0; k < n_train; ++k) in_train[order[k]] = 1;

  Corpus train, test;
  train.provenance = corpus.provenance + " [train]";
  test.provenance = corpus.provenance + " [test]";
  for (std::size_t i = 0; i < n; ++i) (in_train[i] ? train : test).items.push_back(corpus.items[i]);
  return {std::move(train), std::move(test)};
}

}  // namespace kusuri
