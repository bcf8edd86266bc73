#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kusuri/checkpoint.hpp"
#include "kusuri/matcher.hpp"
#include "kusuri/nn.hpp"
#include "kusuri/prefilter.hpp"
#include "kusuri/text.hpp"

namespace kusuri {

// ------------------------------------------------------------ embeddings

// Pre-trained word vectors. Words missing from the table map to `unk`, the
// mean of all loaded vectors.
struct EmbeddingTable {
  int dim = 0;
  StringMap<nn::Vec> entries;
  nn::Vec unk;

  const nn::Vec& lookup(std::string_view word) const;
  bool contains(std::string_view word) const { return entries.find(word) != entries.end(); }
};

// Optional "count dim" header, then "word v1 ... vd". dim <= 0 takes the
// dimension from the header or the first vector.
EmbeddingTable load_embeddings(std::istream& in, int dim = 0);
void write_embeddings(const EmbeddingTable& table, std::ostream& out);

// ------------------------------------------------------- hyperparameters

struct ModelDims {
  int char_embedding = 25;    // d_c
  int char_hidden = 50;       // h_c
  int char_attention = 50;
  int morphology = 50;        // d_m
  int word_embedding = 100;   // d_w, must match the embedding table
  int word_hidden = 100;      // h, per direction
  int word_attention = 100;
  int weak_hidden = 100;
  int weak_attention = 100;

  void validate() const;
};

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t rng_seed = 1;
  double dev_fraction = 0.1;  // stratified by label
  int patience = 3;           // epochs without dev-loss improvement
  ModelDims dims;

  void validate() const;
};

Json to_json(const ModelDims& d);
ModelDims dims_from_json(const Json& j);
Json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j, TrainConfig base = {});

// ------------------------------------------------------ char vocabulary

// Characters seen in training data; index 0 is the reserved unknown char.
class CharVocab {
 public:
  static CharVocab from_tweets(const std::vector<const Tweet*>& tweets);
  static CharVocab from_chars(const std::vector<char32_t>& chars);

  int lookup(char32_t c) const;
  int size() const { return static_cast<int>(chars_.size()) + 1; }
  const std::vector<char32_t>& chars() const { return chars_; }

 private:
  std::vector<char32_t> chars_;  // sorted
  std::unordered_map<char32_t, int> index_;
};

// ------------------------------------------------------------ parameters

struct CharEncoderParams {
  nn::Mat char_embeddings;  // vocab x d_c
  nn::GruParams recurrent;
  nn::AttentionParams attn;
  nn::DenseParams proj;  // h_c -> d_m, tanh

  static CharEncoderParams zeros(int vocab, const ModelDims& d);

  template <class F>
  void for_each(F&& f) {
    f(std::string("char_embeddings"), char_embeddings);
    nn::for_each_prefixed(recurrent, "recurrent", f);
    nn::for_each_prefixed(attn, "attn", f);
    nn::for_each_prefixed(proj, "proj", f);
  }
  template <class F>
  void for_each(F&& f) const {
    const_cast<CharEncoderParams*>(this)->for_each(
        [&](const std::string& n, auto& t) { f(n, std::as_const(t)); });
  }
};

struct KusuriDnnParams {
  CharEncoderParams char_encoder;
  nn::GruParams bigru_fwd, bigru_bwd;  // input d_w + d_m
  nn::AttentionParams word_attn;       // over 2h states
  nn::DenseParams head;                // 2h -> 1, sigmoid

  static KusuriDnnParams zeros(int vocab, const ModelDims& d);

  template <class F>
  void for_each(F&& f) {
    nn::for_each_prefixed(char_encoder, "char_encoder", f);
    nn::for_each_prefixed(bigru_fwd, "bigru_fwd", f);
    nn::for_each_prefixed(bigru_bwd, "bigru_bwd", f);
    nn::for_each_prefixed(word_attn, "word_attn", f);
    nn::for_each_prefixed(head, "head", f);
  }
  template <class F>
  void for_each(F&& f) const {
    const_cast<KusuriDnnParams*>(this)->for_each(
        [&](const std::string& n, auto& t) { f(n, std::as_const(t)); });
  }
};

struct WeakLstmParams {
  nn::LstmParams lstm;  // input d_w
  nn::AttentionParams attn;
  nn::DenseParams head;  // hidden -> 1, sigmoid

  static WeakLstmParams zeros(const ModelDims& d);

  template <class F>
  void for_each(F&& f) {
    nn::for_each_prefixed(lstm, "lstm", f);
    nn::for_each_prefixed(attn, "attn", f);
    nn::for_each_prefixed(head, "head", f);
  }
  template <class F>
  void for_each(F&& f) const {
    const_cast<WeakLstmParams*>(this)->for_each(
        [&](const std::string& n, auto& t) { f(n, std::as_const(t)); });
  }
};

// Per-token morphology vectors memoized across calls. Not thread-safe; use
// one per worker.
using CharEncodingCache = std::unordered_map<std::string, nn::Vec>;

// ---------------------------------------------------------------- models

inline constexpr const char* kKusuriArchitecture = "kusuri-dnn";
inline constexpr const char* kWeakArchitecture = "weak-lstm";

// Character encoder + BiGRU + word attention + sigmoid head.
class KusuriDnn {
 public:
  using Params = KusuriDnnParams;
  static constexpr const char* kArchitecture = kKusuriArchitecture;

  KusuriDnn() = default;
  KusuriDnn(ModelDims dims, CharVocab chars, Params params)
      : dims_(dims), chars_(std::move(chars)), params_(std::move(params)) {}

  static KusuriDnn initialize(const ModelDims& dims, CharVocab chars, Rng& rng);

  // Morphology vector (d_m) for one token.
  nn::Vec char_encode(const Token& token) const;

  // Probability that the tweet mentions a medication; 0.0 for a tweet
  // without tokens.
  double predict(const EmbeddingTable& emb, const Tweet& tweet,
                 CharEncodingCache* cache = nullptr) const;

  // Adds dLoss/dParams for one example to `grads`; returns the loss.
  double accumulate_gradients(const EmbeddingTable& emb, const Tweet& tweet, int label,
                              Params& grads) const;

  const ModelDims& dims() const { return dims_; }
  const CharVocab& chars() const { return chars_; }
  const Params& params() const { return params_; }
  Params& params() { return params_; }

  Json to_checkpoint(const Json& extra = Json::object()) const;
  static KusuriDnn from_checkpoint(const Json& j);

 private:
  ModelDims dims_;
  CharVocab chars_;
  Params params_;
};

// Word-level LSTM + attention + sigmoid head over embeddings only.
class WeakLstm {
 public:
  using Params = WeakLstmParams;
  static constexpr const char* kArchitecture = kWeakArchitecture;

  WeakLstm() = default;
  WeakLstm(ModelDims dims, Params params) : dims_(dims), params_(std::move(params)) {}

  static WeakLstm initialize(const ModelDims& dims, CharVocab unused, Rng& rng);

  double predict(const EmbeddingTable& emb, const Tweet& tweet,
                 CharEncodingCache* cache = nullptr) const;
  double accumulate_gradients(const EmbeddingTable& emb, const Tweet& tweet, int label,
                              Params& grads) const;

  const ModelDims& dims() const { return dims_; }
  const Params& params() const { return params_; }
  Params& params() { return params_; }

  Json to_checkpoint(const Json& extra = Json::object()) const;
  static WeakLstm from_checkpoint(const Json& j);

 private:
  ModelDims dims_;
  Params params_;
};

// Adapts a trained weak model to the prefilter interface.
class WeakScorer : public WeakClassifier {
 public:
  WeakScorer(const WeakLstm& model, const EmbeddingTable& emb) : model_(model), emb_(emb) {}
  double probability(const Tweet& tweet) const override { return model_.predict(emb_, tweet); }

 private:
  const WeakLstm& model_;
  const EmbeddingTable& emb_;
};

// Mean loss and exact gradients over a batch.
template <class Model>
std::pair<double, typename Model::Params> batch_gradients(const Model& model,
                                                          const EmbeddingTable& emb,
                                                          const std::vector<LabeledTweet>& batch) {
  auto grads = nn::zeros_like(model.params());
  double loss = 0.0;
  for (const auto& ex : batch) loss += model.accumulate_gradients(emb, ex.tweet, ex.label, grads);
  if (!batch.empty()) {
    const double scale = 1.0 / static_cast<double>(batch.size());
    grads.for_each([&](const std::string&, auto& t) { t *= scale; });
    loss *= scale;
  }
  return {loss, std::move(grads)};
}

template <class Model>
double batch_loss(const Model& model, const EmbeddingTable& emb,
                  const std::vector<LabeledTweet>& batch) {
  double loss = 0.0;
  for (const auto& ex : batch) loss += nn::bce_loss(model.predict(emb, ex.tweet), ex.label);
  return batch.empty() ? 0.0 : loss / static_cast<double>(batch.size());
}

// --------------------------------------------------------- weak labels

// Positives: every tweet containing a seed name (token-bounded). Negatives:
// an equal-size uniform sample, without replacement, of the other tweets.
// Output keeps corpus order.
Corpus build_weak_training_set(const Corpus& corpus, const Lexicon& seeds, std::uint64_t rng_seed);

// ------------------------------------------------------------- training

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> dev_loss;
  std::optional<double> dev_accuracy;
};

template <class Model>
struct TrainResult {
  Model model;
  std::vector<EpochStats> history;
  int best_epoch = 0;  // 0 = initialization
};

std::vector<LabeledTweet> labeled_items(const Corpus& corpus);

TrainResult<KusuriDnn> train_kusuri(const std::vector<LabeledTweet>& data, const EmbeddingTable& emb,
                                    const TrainConfig& config);
TrainResult<WeakLstm> train_weak(const std::vector<LabeledTweet>& data, const EmbeddingTable& emb,
                                 const TrainConfig& config);

Json history_to_json(const std::vector<EpochStats>& history, int best_epoch);

}  // namespace kusuri

namespace kusuri {

// Reverse-mode vs central differences on a tiny randomly initialized model
// (tiny dims, random embeddings, two short tweets). architecture is
// "kusuri-dnn" or "weak-lstm".
nn::GradientComparison gradient_check(std::string_view architecture, std::uint64_t seed,
                                      double epsilon = 1e-5);

}  // namespace kusuri
