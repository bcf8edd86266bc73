#include "kusuri/variants.hpp"

#include <algorithm>
#include <utility>
#include <vector>

#include "kusuri/error.hpp"

namespace kusuri {
namespace {

using Word = std::u32string;

void single_edits(const Word& w, const VariantConfig& cfg, std::set<Word>& out) {
  const std::size_t n = w.size();
  if (cfg.ops.deletion) {
    for (std::size_t i = 0; i < n; ++i) out.insert(w.substr(0, i) + w.substr(i + 1));
  }
  if (cfg.ops.insertion) {
    for (std::size_t i = 0; i <= n; ++i) {
      for (char32_t c : cfg.alphabet) {
        Word v = w;
        v.insert(v.begin() + static_cast<std::ptrdiff_t>(i), c);
        out.insert(std::move(v));
      }
    }
  }
  if (cfg.ops.substitution) {
    for (std::size_t i = 0; i < n; ++i) {
      for (char32_t c : cfg.alphabet) {
        if (c == w[i]) continue;
        Word v = w;
        v[i] = c;
        out.insert(std::move(v));
      }
    }
  }
  if (cfg.ops.transposition) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (w[i] == w[i + 1]) continue;
      Word v = w;
      std::swap(v[i], v[i + 1]);
      out.insert(std::move(v));
    }
  }
}

}  // namespace

void VariantConfig::validate() const {
  if (max_edit_distance < 1 || max_edit_distance > 2)
    throw Error("max_edit_distance must be 1 or 2");
  if (min_length < 1) throw Error("min_length must be at least 1");
  if (alphabet.empty() && (ops.insertion || ops.substitution))
    throw Error("alphabet is empty but insertions or substitutions are enabled");
}

std::set<std::string> generate_variants(std::string_view name, const VariantConfig& config) {
  config.validate();
  if (name.empty()) throw Error("cannot generate variants of an empty name");
  if (name.find_first_of(" \t\r\n\f\v") != std::string_view::npos)
    throw Error("name '" + std::string(name) + "' contains whitespace");

  const std::vector<char32_t> cps = decode_utf8(name);
  const Word original(cps.begin(), cps.end());
  std::set<Word> reached{original};
  std::set<Word> frontier{original};
  for (int d = 0; d < config.max_edit_distance; ++d) {
    std::set<Word> next;
    for (const Word& w : frontier) single_edits(w, config, next);
    std::set<Word> fresh;
    std::set_difference(next.begin(), next.end(), reached.begin(), reached.end(),
                        std::inserter(fresh, fresh.end()));
    reached.insert(fresh.begin(), fresh.end());
    frontier = std::move(fresh);
  }

  std::set<std::string> out;
  for (const Word& w : reached) {
    if (w == original || w.size() < config.min_length) continue;
    std::string s = encode_utf8(w);
    if (config.common_words.count(s)) continue;
    out.insert(std::move(s));
  }
  return out;
}

Lexicon build_variant_lexicon(const Lexicon& lexicon, const VariantConfig& config) {
  config.validate();
  std::set<Phrase> variants;
  for (const Phrase& p : lexicon.phrases()) {
    if (p.size() != 1) continue;
    for (auto& v : generate_variants(p.front(), config)) {
      Phrase vp{std::move(v)};
      if (!lexicon.contains(vp)) variants.insert(std::move(vp));
    }
  }
  std::string source = "variants of " + (lexicon.source().empty() ? "lexicon" : lexicon.source());
  return Lexicon::from_phrases(std::move(variants), std::move(source));
}

}  // namespace kusuri
