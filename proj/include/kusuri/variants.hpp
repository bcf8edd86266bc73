#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>

#include "kusuri/prefilter.hpp"

namespace kusuri {

struct EditOps {
  bool deletion = true;
  bool insertion = true;
  bool substitution = true;
  bool transposition = true;  // adjacent characters

  static EditOps only_deletions() { return {true, false, false, false}; }
  static EditOps only_substitutions() { return {false, false, true, false}; }
};

struct VariantConfig {
  int max_edit_distance = 1;  // 1 or 2
  std::size_t min_length = 4;
  EditOps ops;
  std::set<std::string> common_words;
  // Characters used for insertions and substitutions.
  std::u32string alphabet = U"abcdefghijklmnopqrstuvwxyz0123456789";

  void validate() const;
};

// Every string reachable from `name` by at most max_edit_distance enabled
// edit operations, minus the name itself, strings shorter than min_length
// code points, and common words.
std::set<std::string> generate_variants(std::string_view name, const VariantConfig& config);

// Union of generate_variants over single-token lexicon phrases; multi-token
// phrases produce no variants. Original lexicon phrases are excluded.
Lexicon build_variant_lexicon(const Lexicon& lexicon, const VariantConfig& config);

}  // namespace kusuri
