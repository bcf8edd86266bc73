#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kusuri/ensemble.hpp"
#include "kusuri/prefilter.hpp"

namespace kusuri {

// Candidates reaching the ensemble: lex OR var OR (pat AND weak).
bool select_candidate(const FilterVerdict& v);

enum class GoldLabel { kPositiveCandidate, kNegativeCandidate, kExcluded };

std::string_view gold_label_name(GoldLabel l);

// >= 2 classifiers fired -> positive candidate, exactly 1 -> negative
// candidate, 0 -> excluded.
GoldLabel gold_label_for(int fired_count);

struct GoldCandidate {
  Tweet tweet;
  int fired_count = 0;
  GoldLabel proposed_label = GoldLabel::kExcluded;
  FilterVerdict verdict;
};

std::vector<GoldCandidate> build_gold_candidates(const Corpus& corpus,
                                                 const std::vector<FilterVerdict>& verdicts);

void write_gold_candidates(const std::vector<GoldCandidate>& candidates, std::ostream& out);

// The four module-1 classifiers. Components are borrowed, not owned.
struct Prefilter {
  const Lexicon* lexicon = nullptr;
  const Lexicon* variants = nullptr;
  const PatternSet* patterns = nullptr;
  const WeakClassifier* weak = nullptr;
  double weak_threshold = kDefaultWeakThreshold;
  MatchOptions match;

  FilterVerdict run(const Tweet& tweet) const;
};

struct Classification {
  std::string id;
  int label = 0;
  std::optional<double> probability;  // absent when the ensemble was not consulted
  FilterVerdict verdict;

  bool operator==(const Classification&) const = default;
};

enum class PipelineMode {
  kFull,            // prefilter selection, then ensemble decision
  kEnsembleOnly,    // ensemble on every tweet
  kLexiconVariant,  // positive iff lex or var fired
};

std::string_view mode_name(PipelineMode m);
PipelineMode mode_from_name(std::string_view name);

using TweetScorer = std::function<double(const Tweet&)>;

// Core loop with an arbitrary probability model (single-threaded).
std::vector<Classification> classify_corpus(const Corpus& corpus, const Prefilter& prefilter,
                                            const TweetScorer& scorer, double threshold,
                                            PipelineMode mode = PipelineMode::kFull);

// Ensemble-backed classification; tweets are split across `threads`
// workers and the output is identical for any thread count.
std::vector<Classification> classify_corpus(const Corpus& corpus, const Prefilter& prefilter,
                                            const Ensemble& ensemble, const EmbeddingTable& emb,
                                            PipelineMode mode = PipelineMode::kFull,
                                            int threads = 1);

// Line-delimited {id, label, probability|null, lex, var, pat, weak}.
void write_classifications(const std::vector<Classification>& rows, std::ostream& out);
std::vector<Classification> load_classifications(std::istream& in);

}  // namespace kusuri
