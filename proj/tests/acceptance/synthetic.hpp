#pragma once

// Synthetic tweet world for the end-to-end ordering check. Everything is
// generated from one seed.
//
//  - listed drugs appear in the lexicon; unlisted drugs do not, but their
//    embeddings sit in the same cluster
//  - homographs (lyrica, halls, airborne) are in the lexicon and also occur
//    in ordinary non-medical chatter
//  - misspellings are one random edit away from a listed name and have no
//    embedding of their own
//  - hard negatives reuse the medication contexts with an everyday object
//    in the drug slot

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "kusuri/models.hpp"
#include "kusuri/random.hpp"
#include "kusuri/text.hpp"

namespace synthetic {

using kusuri::Corpus;
using kusuri::LabeledTweet;
using kusuri::Rng;
using kusuri::Tweet;

inline const std::vector<std::string> kListed = {
    "xanax",    "advil",   "tylenol",  "benadryl", "zoloft",     "prozac",  "ambien",   "vicodin",
    "adderall", "lexapro", "valium",   "ativan",   "motrin",     "aleve",   "nyquil",   "zyrtec",
    "claritin", "percocet", "klonopin", "seroquel", "wellbutrin", "ibuprofen", "codeine", "tramadol"};
inline const std::vector<std::string> kUnlisted = {"paxil", "celexa", "lunesta", "restoril", "oxycodone", "sudafed"};
inline const std::vector<std::string> kHomographs = {"lyrica", "halls", "airborne"};
inline const std::vector<std::string> kSeeds = {"xanax", "advil", "tylenol", "zoloft", "ambien", "adderall", "valium", "nyquil"};
inline const std::vector<std::string> kObjects = {"coffee", "tea", "nap", "soup", "pizza", "water", "blanket", "music", "rest", "shower"};

// Medication contexts; "{}" is the slot.
inline const std::vector<std::string> kMedContexts = {
    "took my {} for this headache", "need {} so bad right now",    "{} kicked in finally",
    "this {} makes me so sleepy",   "ran out of {} again ugh",     "doctor prescribed {} today",
    "the side effects of {} are rough", "popped a {} before bed", "{} is not helping my back pain",
    "should i take {} or just sleep",  "took some {} and feel better", "my {} dose is too high"};

inline const std::vector<std::string> kHomographContexts = {
    "{} concert tonight was amazing", "walking down the {} at school", "listening to {} on repeat",
    "saw {} live last night",         "the {} crew is back",           "new {} video just dropped"};

inline const std::vector<std::string> kChatterWords = {
    "love",   "this",  "game",  "today", "great",  "song",    "weather", "nice",  "friends", "night",
    "party",  "work",  "hate",  "when",  "people", "traffic", "lunch",   "happy", "birthday", "team",
    "win",    "lost",  "movie", "watch", "best",   "worst",   "day",     "ever",  "omg",     "lol",
    "going",  "home",  "tired", "class", "school", "summer",  "beach",   "cat",   "dog",     "funny",
    "really", "want",  "go",    "out",   "with",   "my",      "the",     "a",     "so",      "is",
    "just",   "got",   "new",   "phone", "car",    "weekend", "cant",    "wait",  "for",     "at",
    "city",   "rain",  "snow",  "train", "bus",    "late",    "early",   "food",  "dinner",  "tonight",
    "walk",   "run",   "gym",   "show",  "album",  "vote",    "news",    "boss",  "meeting", "shop"};

inline const std::vector<std::string> kChatterTemplates = {"took my dog out for a walk", "took a nap after work",
                                                           "ran out of coffee at work", "the game kicked in late"};

inline std::string fill(const std::string& tmpl, const std::string& word) {
  std::string s = tmpl;
  s.replace(s.find("{}"), 2, word);
  return s;
}

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[static_cast<std::size_t>(rng.below(v.size()))];
}

// One random edit: deletion, substitution, insertion or adjacent swap.
inline std::string misspell(const std::string& name, Rng& rng) {
  static const std::string letters = "abcdefghijklmnopqrstuvwxyz";
  while (true) {
    std::string s = name;
    const std::size_t i = static_cast<std::size_t>(rng.below(s.size()));
    switch (rng.below(4)) {
      case 0: s.erase(i, 1); break;
      case 1: s[i] = letters[rng.below(26)]; break;
      case 2: s.insert(i, 1, letters[rng.below(26)]); break;
      default:
        if (i + 1 < s.size()) std::swap(s[i], s[i + 1]);
        break;
    }
    if (s != name) return s;
  }
}

enum class Kind { kListed, kMisspelled, kUnlisted, kHomographMedical, kHomographChatter, kHardNegative, kChatter };

struct Mix {
  double listed = 0, misspelled = 0, unlisted = 0, homograph_medical = 0;  // positives
  double homograph_chatter = 0, hard_negative = 0;                        // negatives; rest is chatter
};

class World {
 public:
  explicit World(std::uint64_t seed) : rng_(seed) {}

  std::string text(Kind k) {
    switch (k) {
      case Kind::kListed: return fill(pick(kMedContexts, rng_), pick(kListed, rng_));
      case Kind::kMisspelled: return fill(pick(kMedContexts, rng_), misspell(pick(kListed, rng_), rng_));
      case Kind::kUnlisted: return fill(pick(kMedContexts, rng_), pick(kUnlisted, rng_));
      case Kind::kHomographMedical: return fill(pick(kMedContexts, rng_), pick(kHomographs, rng_));
      case Kind::kHomographChatter: return fill(pick(kHomographContexts, rng_), pick(kHomographs, rng_));
      case Kind::kHardNegative: return fill(pick(kMedContexts, rng_), pick(kObjects, rng_));
      case Kind::kChatter: break;
    }
    if (rng_.below(20) == 0) return pick(kChatterTemplates, rng_);
    const std::size_t n = 4 + static_cast<std::size_t>(rng_.below(7));
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + pick(kChatterWords, rng_);
    return s;
  }

  static bool positive(Kind k) {
    return k == Kind::kListed || k == Kind::kMisspelled || k == Kind::kUnlisted || k == Kind::kHomographMedical;
  }

  Kind draw(const Mix& m) {
    double u = rng_.uniform();
    const std::pair<double, Kind> table[] = {{m.listed, Kind::kListed},
                                             {m.misspelled, Kind::kMisspelled},
                                             {m.unlisted, Kind::kUnlisted},
                                             {m.homograph_medical, Kind::kHomographMedical},
                                             {m.homograph_chatter, Kind::kHomographChatter},
                                             {m.hard_negative, Kind::kHardNegative}};
    for (const auto& [p, k] : table) {
      if (u < p) return k;
      u -= p;
    }
    return Kind::kChatter;
  }

  // Labeled corpus of n tweets drawn from the mix; ids are prefix + index.
  Corpus corpus(std::size_t n, const Mix& m, const std::string& prefix, bool with_labels = true) {
    Corpus c;
    c.items.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Kind k = draw(m);
      std::optional<int> label;
      if (with_labels) label = positive(k) ? 1 : 0;
      c.items.push_back({Tweet::make(prefix + std::to_string(i), text(k)), label});
    }
    return c;
  }

  // Balanced set: half positives (mostly listed), half negatives (chatter
  // and homograph chatter). Hard negatives are deliberately absent, as in a
  // curated balanced corpus.
  std::vector<LabeledTweet> balanced(std::size_t n_per_class, const std::string& prefix) {
    std::vector<LabeledTweet> out;
    for (std::size_t i = 0; i < n_per_class; ++i) {
      const double u = rng_.uniform();
      const Kind pk = u < 0.7 ? Kind::kListed : u < 0.85 ? Kind::kMisspelled : u < 0.93 ? Kind::kUnlisted : Kind::kHomographMedical;
      out.push_back({Tweet::make(prefix + "p" + std::to_string(i), text(pk)), 1});
      const Kind nk = rng_.uniform() < 0.25 ? Kind::kHomographChatter : Kind::kChatter;
      out.push_back({Tweet::make(prefix + "n" + std::to_string(i), text(nk)), 0});
    }
    return out;
  }

  // Drugs cluster together; homographs sit between the drug cluster and
  // ordinary words; everything else is spread out.
  kusuri::EmbeddingTable embeddings(int dim) {
    kusuri::EmbeddingTable t;
    t.dim = dim;
    auto random_vec = [&](double scale) {
      kusuri::nn::Vec v(dim);
      for (int i = 0; i < dim; ++i) v[i] = rng_.uniform(-scale, scale);
      return v;
    };
    const kusuri::nn::Vec drug_center = random_vec(1.0);
    std::set<std::string> words;
    auto add_words = [&](const std::string& s) {
      for (const auto& tok : kusuri::tokenize(kusuri::normalize(s))) words.insert(tok.text);
    };
    for (const auto& c : kMedContexts) add_words(fill(c, "x"));
    for (const auto& c : kHomographContexts) add_words(fill(c, "x"));
    for (const auto& c : kChatterTemplates) add_words(c);
    for (const auto& w : kChatterWords) words.insert(w);
    for (const auto& w : kObjects) words.insert(w);
    words.erase("x");
    for (const auto& w : words) t.entries.emplace(w, random_vec(1.0));
    for (const auto& d : kListed) t.entries[d] = drug_center + random_vec(0.25);
    for (const auto& d : kUnlisted) t.entries[d] = drug_center + random_vec(0.25);
    for (const auto& h : kHomographs) t.entries[h] = 0.5 * drug_center + random_vec(0.5);
    kusuri::nn::Vec sum = kusuri::nn::Vec::Zero(dim);
    for (const auto& [w, v] : t.entries) sum += v;
    t.unk = sum / static_cast<double>(t.entries.size());
    return t;
  }

  // Everyday vocabulary, used to keep misspelling variants from colliding
  // with real words.
  static std::set<std::string> common_words() {
    std::set<std::string> out(kChatterWords.begin(), kChatterWords.end());
    out.insert(kObjects.begin(), kObjects.end());
    for (const auto& c : kMedContexts)
      for (const auto& tok : kusuri::tokenize(fill(c, "x"))) out.insert(tok.text);
    for (const auto& c : kHomographContexts)
      for (const auto& tok : kusuri::tokenize(fill(c, "x"))) out.insert(tok.text);
    for (const auto& c : kChatterTemplates)
      for (const auto& tok : kusuri::tokenize(c)) out.insert(tok.text);
    out.insert({"hall", "calls", "balls", "walls", "falls", "malls", "tall", "lyric", "lyrics"});
    return out;
  }

  // The patterns a person would write after reading mined n-grams.
  static std::string patterns() {
    return "took (my|some|a) \\w+\n"
           "\\w+ kicked in\n"
           "prescribed \\w+\n"
           "ran out of \\w+\n"
           "popped a \\w+\n"
           "side effects of \\w+\n";
  }

 private:
  Rng rng_;
};

}  // namespace synthetic
