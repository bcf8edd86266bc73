#include "kusuri/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

#include "kusuri/error.hpp"

namespace kusuri {

bool select_candidate(const FilterVerdict& v) { return v.lex || v.var || (v.pat && v.weak); }

std::string_view gold_label_name(GoldLabel l) {
  switch (l) {
    case GoldLabel::kPositiveCandidate: return "positive_candidate";
    case GoldLabel::kNegativeCandidate: return "negative_candidate";
    case GoldLabel::kExcluded: return "excluded";
  }
  return "excluded";
}

GoldLabel gold_label_for(int fired_count) {
  if (fired_count < 0 || fired_count > 4) throw Error("fired_count must be in 0..4");
  if (fired_count >= 2) return GoldLabel::kPositiveCandidate;
  if (fired_count == 1) return GoldLabel::kNegativeCandidate;
  return GoldLabel::kExcluded;
}

std::vector<GoldCandidate> build_gold_candidates(const Corpus& corpus,
                                                 const std::vector<FilterVerdict>& verdicts) {
  if (verdicts.size() != corpus.size())
    throw Error("verdict count " + std::to_string(verdicts.size()) + " != corpus size " +
                std::to_string(corpus.size()));
  std::vector<GoldCandidate> out;
  out.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const int fired = verdicts[i].fired_count();
    out.push_back({corpus.items[i].tweet, fired, gold_label_for(fired), verdicts[i]});
  }
  return out;
}

void write_gold_candidates(const std::vector<GoldCandidate>& candidates, std::ostream& out) {
  for (const auto& c : candidates) {
    Json j;
    j["id"] = c.tweet.id;
    j["text"] = c.tweet.raw;
    j["fired_count"] = c.fired_count;
    j["proposed_label"] = gold_label_name(c.proposed_label);
    j["lex"] = c.verdict.lex;
    j["var"] = c.verdict.var;
    j["pat"] = c.verdict.pat;
    j["weak"] = c.verdict.weak;
    out << j.dump() << '\n';
  }
}

FilterVerdict Prefilter::run(const Tweet& tweet) const {
  if (!lexicon || !variants || !patterns || !weak) throw Error("prefilter is missing a component");
  return run_filters(tweet, *lexicon, *variants, *patterns, *weak, weak_threshold, match);
}

std::string_view mode_name(PipelineMode m) {
  switch (m) {
    case PipelineMode::kFull: return "full";
    case PipelineMode::kEnsembleOnly: return "ensemble-only";
    case PipelineMode::kLexiconVariant: return "lexicon-variant";
  }
  return "full";
}

PipelineMode mode_from_name(std::string_view name) {
  if (name == "full") return PipelineMode::kFull;
  if (name == "ensemble-only") return PipelineMode::kEnsembleOnly;
  if (name == "lexicon-variant") return PipelineMode::kLexiconVariant;
  throw Error("unknown pipeline mode '" + std::string(name) + "'");
}

namespace {

Classification classify_one(const Tweet& tweet, const Prefilter& prefilter, const TweetScorer& scorer,
                            double threshold, PipelineMode mode) {
  try {
    Classification c;
    c.id = tweet.id;
    c.verdict = prefilter.run(tweet);
    bool consult = false;
    switch (mode) {
      case PipelineMode::kFull: consult = select_candidate(c.verdict); break;
      case PipelineMode::kEnsembleOnly: consult = true; break;
      case PipelineMode::kLexiconVariant:
        c.label = (c.verdict.lex || c.verdict.var) ? 1 : 0;
        return c;
    }
    if (consult) {
      c.probability = scorer(tweet);
      c.label = decide(*c.probability, threshold);
    }
    return c;
  } catch (const std::exception& e) {
    throw Error("tweet '" + tweet.id + "': " + e.what());
  }
}

}  // namespace

std::vector<Classification> classify_corpus(const Corpus& corpus, const Prefilter& prefilter,
                                            const TweetScorer& scorer, double threshold,
                                            PipelineMode mode) {
  std::vector<Classification> out;
  out.reserve(corpus.size());
  for (const auto& e : corpus.items) out.push_back(classify_one(e.tweet, prefilter, scorer, threshold, mode));
  return out;
}

std::vector<Classification> classify_corpus(const Corpus& corpus, const Prefilter& prefilter,
                                            const Ensemble& ensemble, const EmbeddingTable& emb,
                                            PipelineMode mode, int threads) {
  if (mode != PipelineMode::kLexiconVariant) ensemble.validate();
  const std::size_t n = corpus.size();
  std::vector<Classification> out(n);
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1,
                                                      std::max<std::size_t>(n, 1));
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<CharEncodingCache> caches(ensemble.size());
    TweetScorer scorer = [&](const Tweet& t) { return ensemble_predict(ensemble, emb, t, &caches); };
    try {
      for (std::size_t i = begin; i < end; ++i)
        out[i] = classify_one(corpus.items[i].tweet, prefilter, scorer, ensemble.threshold, mode);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t b = w * chunk, e = std::min(n, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

void write_classifications(const std::vector<Classification>& rows, std::ostream& out) {
  for (const auto& c : rows) {
    Json j;
    j["id"] = c.id;
    j["label"] = c.label;
    j["probability"] = c.probability ? Json(*c.probability) : Json(nullptr);
    j["lex"] = c.verdict.lex;
    j["var"] = c.verdict.var;
    j["pat"] = c.verdict.pat;
    j["weak"] = c.verdict.weak;
    out << j.dump() << '\n';
  }
}

std::vector<Classification> load_classifications(std::istream& in) {
  std::vector<Classification> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      Json j = Json::parse(line);
      Classification c;
      c.id = j.at("id").get<std::string>();
      c.label = j.at("label").get<int>();
      if (c.label != 0 && c.label != 1) throw Error("label must be 0 or 1");
      if (auto p = j.find("probability"); p != j.end() && !p->is_null()) c.probability = p->get<double>();
      c.verdict.lex = j.value("lex", false);
      c.verdict.var = j.value("var", false);
      c.verdict.pat = j.value("pat", false);
      c.verdict.weak = j.value("weak", false);
      rows.push_back(std::move(c));
    } catch (const std::exception& e) {
      throw ParseError(lineno, std::string("malformed classification record: ") + e.what());
    }
  }
  return rows;
}

}  // namespace kusuri
