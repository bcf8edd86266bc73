#include "kusuri/models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "kusuri/error.hpp"
#include "kusuri/random.hpp"

namespace kusuri {

using nn::Mat;
using nn::Vec;

// ------------------------------------------------------------ embeddings

const Vec& EmbeddingTable::lookup(std::string_view word) const {
  auto it = entries.find(word);
  return it == entries.end() ? unk : it->second;
}

namespace {

std::vector<std::string_view> fields_of(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

EmbeddingTable load_embeddings(std::istream& in, int dim) {
  EmbeddingTable table;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  Vec sum;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto f = fields_of(line);
    if (f.empty()) continue;
    if (first) {
      first = false;
      long long n = 0, d = 0;
      if (f.size() == 2 && parse_number(f[0], n) && parse_number(f[1], d)) {
        if (d <= 0) throw ParseError(lineno, "header declares a non-positive dimension");
        if (dim > 0 && d != dim)
          throw ParseError(lineno, "header dimension " + std::to_string(d) + " != expected " +
                                       std::to_string(dim));
        dim = static_cast<int>(d);
        continue;
      }
      if (dim <= 0) dim = static_cast<int>(f.size()) - 1;
      if (dim <= 0) throw ParseError(lineno, "embedding line has no values");
    }
    if (static_cast<int>(f.size()) - 1 != dim)
      throw ParseError(lineno, "expected " + std::to_string(dim) + " values, found " +
                                   std::to_string(f.size() - 1));
    Vec v(dim);
    for (int k = 0; k < dim; ++k) {
      if (!parse_number(f[static_cast<std::size_t>(k) + 1], v(k)))
        throw ParseError(lineno, "malformed number '" + std::string(f[static_cast<std::size_t>(k) + 1]) + "'");
    }
    if (!v.allFinite()) throw ParseError(lineno, "non-finite embedding value");
    auto [it, inserted] = table.entries.try_emplace(std::string(f[0]), v);
    if (!inserted) continue;  // first occurrence wins
    if (count == 0) sum = Vec::Zero(dim);
    sum += v;
    ++count;
  }
  if (count == 0) throw Error("embedding file contains no vectors");
  table.dim = dim;
  table.unk = sum / static_cast<double>(count);
  return table;
}

void write_embeddings(const EmbeddingTable& table, std::ostream& out) {
  std::vector<std::string_view> words;
  words.reserve(table.entries.size());
  for (const auto& [w, v] : table.entries) words.emplace_back(w);
  std::sort(words.begin(), words.end());
  out << words.size() << ' ' << table.dim << '\n';
  char buf[64];
  for (auto w : words) {
    out << w;
    const Vec& v = table.entries.find(w)->second;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v(k));
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    out << '\n';
  }
}

// ------------------------------------------------------- hyperparameters

void ModelDims::validate() const {
  for (int v : {char_embedding, char_hidden, char_attention, morphology, word_embedding,
                word_hidden, word_attention, weak_hidden, weak_attention}) {
    if (v <= 0) throw Error("model dimensions must be positive");
  }
}

void TrainConfig::validate() const {
  if (epochs < 0) throw Error("epochs must be non-negative");
  if (batch_size <= 0) throw Error("batch_size must be positive");
  if (!(learning_rate > 0)) throw Error("learning_rate must be positive");
  if (!(dev_fraction >= 0.0 && dev_fraction <= 0.5)) throw Error("dev_fraction must be in [0, 0.5]");
  if (patience <= 0) throw Error("patience must be positive");
  dims.validate();
}

Json to_json(const ModelDims& d) {
  Json j;
  j["char_embedding"] = d.char_embedding;
  j["char_hidden"] = d.char_hidden;
  j["char_attention"] = d.char_attention;
  j["morphology"] = d.morphology;
  j["word_embedding"] = d.word_embedding;
  j["word_hidden"] = d.word_hidden;
  j["word_attention"] = d.word_attention;
  j["weak_hidden"] = d.weak_hidden;
  j["weak_attention"] = d.weak_attention;
  return j;
}

ModelDims dims_from_json(const Json& j) {
  ModelDims d;
  auto get = [&](const char* key, int& field) {
    if (auto it = j.find(key); it != j.end()) field = it->get<int>();
  };
  get("char_embedding", d.char_embedding);
  get("char_hidden", d.char_hidden);
  get("char_attention", d.char_attention);
  get("morphology", d.morphology);
  get("word_embedding", d.word_embedding);
  get("word_hidden", d.word_hidden);
  get("word_attention", d.word_attention);
  get("weak_hidden", d.weak_hidden);
  get("weak_attention", d.weak_attention);
  return d;
}

Json to_json(const TrainConfig& c) {
  Json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["rng_seed"] = c.rng_seed;
  j["dev_fraction"] = c.dev_fraction;
  j["patience"] = c.patience;
  j["dims"] = to_json(c.dims);
  return j;
}

TrainConfig train_config_from_json(const Json& j, TrainConfig c) {
  if (!j.is_object()) throw Error("train config must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "epochs") c.epochs = it->get<int>();
    else if (k == "batch_size") c.batch_size = it->get<int>();
    else if (k == "learning_rate") c.learning_rate = it->get<double>();
    else if (k == "rng_seed") c.rng_seed = it->get<std::uint64_t>();
    else if (k == "dev_fraction") c.dev_fraction = it->get<double>();
    else if (k == "patience") c.patience = it->get<int>();
    else if (k == "dims") c.dims = dims_from_json(*it);
    else throw Error("unknown train config key '" + k + "'");
  }
  return c;
}

// ------------------------------------------------------ char vocabulary

CharVocab CharVocab::from_chars(const std::vector<char32_t>& chars) {
  std::set<char32_t> unique(chars.begin(), chars.end());
  CharVocab v;
  v.chars_.assign(unique.begin(), unique.end());
  for (std::size_t i = 0; i < v.chars_.size(); ++i) v.index_[v.chars_[i]] = static_cast<int>(i) + 1;
  return v;
}

CharVocab CharVocab::from_tweets(const std::vector<const Tweet*>& tweets) {
  std::vector<char32_t> all;
  for (const Tweet* t : tweets)
    for (const auto& tok : t->tokens) all.insert(all.end(), tok.chars.begin(), tok.chars.end());
  return from_chars(all);
}

int CharVocab::lookup(char32_t c) const {
  auto it = index_.find(c);
  return it == index_.end() ? 0 : it->second;
}

// ------------------------------------------------------------ parameters

CharEncoderParams CharEncoderParams::zeros(int vocab, const ModelDims& d) {
  CharEncoderParams p;
  p.char_embeddings = Mat::Zero(vocab, d.char_embedding);
  p.recurrent = nn::GruParams::zeros(d.char_embedding, d.char_hidden);
  p.attn = nn::AttentionParams::zeros(d.char_hidden, d.char_attention);
  p.proj = nn::DenseParams::zeros(d.char_hidden, d.morphology, nn::Activation::kTanh);
  return p;
}

KusuriDnnParams KusuriDnnParams::zeros(int vocab, const ModelDims& d) {
  KusuriDnnParams p;
  p.char_encoder = CharEncoderParams::zeros(vocab, d);
  p.bigru_fwd = nn::GruParams::zeros(d.word_embedding + d.morphology, d.word_hidden);
  p.bigru_bwd = nn::GruParams::zeros(d.word_embedding + d.morphology, d.word_hidden);
  p.word_attn = nn::AttentionParams::zeros(2 * d.word_hidden, d.word_attention);
  p.head = nn::DenseParams::zeros(2 * d.word_hidden, 1, nn::Activation::kSigmoid);
  return p;
}

WeakLstmParams WeakLstmParams::zeros(const ModelDims& d) {
  WeakLstmParams p;
  p.lstm = nn::LstmParams::zeros(d.word_embedding, d.weak_hidden);
  p.attn = nn::AttentionParams::zeros(d.weak_hidden, d.weak_attention);
  p.head = nn::DenseParams::zeros(d.weak_hidden, 1, nn::Activation::kSigmoid);
  return p;
}

// ----------------------------------------------------------- Kusuri DNN

namespace {

struct TokenCache {
  std::vector<int> ids;
  nn::RunCache<nn::GruCell> run;
  nn::AttentionCache attn;
  nn::DenseCache proj;
};

struct KusuriCache {
  std::vector<TokenCache> tokens;
  nn::BiCache<nn::GruCell> bi;
  nn::AttentionCache attn;
  nn::DenseCache head;
};

Vec encode_chars(const CharEncoderParams& p, const CharVocab& vocab, const Token& token,
                 TokenCache* cache) {
  if (token.chars.empty()) throw Error("char_encode: empty token");
  std::vector<int> ids;
  ids.reserve(token.chars.size());
  std::vector<Vec> xs;
  xs.reserve(token.chars.size());
  for (char32_t c : token.chars) {
    const int id = vocab.lookup(c);
    if (id >= p.char_embeddings.rows()) throw Error("char vocabulary larger than embedding table");
    ids.push_back(id);
    xs.emplace_back(p.char_embeddings.row(id).transpose());
  }
  auto states = nn::run_sequence<nn::GruCell>(p.recurrent, xs, false, cache ? &cache->run : nullptr);
  nn::check_finite(states.back(), "char_encoder.recurrent");
  auto att = nn::attention(p.attn, states, cache ? &cache->attn : nullptr);
  nn::check_finite(att.context, "char_encoder.attn");
  Vec out = nn::dense(p.proj, att.context, cache ? &cache->proj : nullptr);
  nn::check_finite(out, "char_encoder.proj");
  if (cache) cache->ids = std::move(ids);
  return out;
}

void check_embedding_dim(const EmbeddingTable& emb, const ModelDims& d) {
  if (emb.dim != d.word_embedding)
    throw Error("embedding dimension " + std::to_string(emb.dim) + " does not match model (" +
                std::to_string(d.word_embedding) + ")");
}

double kusuri_forward(const KusuriDnnParams& p, const CharVocab& vocab, const ModelDims& d,
                      const EmbeddingTable& emb, const Tweet& tweet, KusuriCache* cache,
                      CharEncodingCache* memo) {
  if (tweet.tokens.empty()) return 0.0;
  check_embedding_dim(emb, d);
  const std::size_t n = tweet.tokens.size();
  if (cache) cache->tokens.assign(n, {});
  std::vector<Vec> xs(n);
  for (std::size_t t = 0; t < n; ++t) {
    const Token& tok = tweet.tokens[t];
    Vec morph;
    if (cache) {
      morph = encode_chars(p.char_encoder, vocab, tok, &cache->tokens[t]);
    } else if (memo) {
      auto it = memo->find(tok.text);
      if (it == memo->end()) it = memo->emplace(tok.text, encode_chars(p.char_encoder, vocab, tok, nullptr)).first;
      morph = it->second;
    } else {
      morph = encode_chars(p.char_encoder, vocab, tok, nullptr);
    }
    xs[t].resize(d.word_embedding + d.morphology);
    xs[t] << emb.lookup(tok.text), morph;
  }
  auto states = nn::bidirectional_run<nn::GruCell>(p.bigru_fwd, p.bigru_bwd, xs,
                                                   cache ? &cache->bi : nullptr);
  for (const auto& s : states) nn::check_finite(s, "bigru");
  auto att = nn::attention(p.word_attn, states, cache ? &cache->attn : nullptr);
  nn::check_finite(att.context, "word_attn");
  Vec y = nn::dense(p.head, att.context, cache ? &cache->head : nullptr);
  nn::check_finite(y, "head");
  return y(0);
}

}  // namespace

KusuriDnn KusuriDnn::initialize(const ModelDims& dims, CharVocab chars, Rng& rng) {
  dims.validate();
  auto params = KusuriDnnParams::zeros(chars.size(), dims);
  nn::glorot_init(params, rng);
  return KusuriDnn(dims, std::move(chars), std::move(params));
}

Vec KusuriDnn::char_encode(const Token& token) const {
  return encode_chars(params_.char_encoder, chars_, token, nullptr);
}

double KusuriDnn::predict(const EmbeddingTable& emb, const Tweet& tweet, CharEncodingCache* cache) const {
  return kusuri_forward(params_, chars_, dims_, emb, tweet, nullptr, cache);
}

double KusuriDnn::accumulate_gradients(const EmbeddingTable& emb, const Tweet& tweet, int label,
                                       Params& g) const {
  KusuriCache c;
  const double p = kusuri_forward(params_, chars_, dims_, emb, tweet, &c, nullptr);
  const double loss = nn::bce_loss(p, label);
  if (tweet.tokens.empty()) return loss;

  Vec dy = Vec::Constant(1, nn::bce_grad(p, label));
  Vec dctx = nn::dense_backward(params_.head, c.head, dy, g.head);
  auto dstates = nn::attention_backward(params_.word_attn, c.attn, dctx, g.word_attn);
  auto dxs = nn::bidirectional_backward<nn::GruCell>(params_.bigru_fwd, params_.bigru_bwd, c.bi,
                                                     dstates, g.bigru_fwd, g.bigru_bwd);
  const auto& ce = params_.char_encoder;
  auto& gce = g.char_encoder;
  for (std::size_t t = 0; t < dxs.size(); ++t) {
    nn::check_finite(dxs[t], "bigru.backward");
    const TokenCache& tc = c.tokens[t];
    Vec dmorph = dxs[t].tail(dims_.morphology);
    Vec dcc = nn::dense_backward(ce.proj, tc.proj, dmorph, gce.proj);
    auto dcs = nn::attention_backward(ce.attn, tc.attn, dcc, gce.attn);
    auto dchars = nn::run_sequence_backward<nn::GruCell>(ce.recurrent, tc.run, dcs, false, gce.recurrent);
    for (std::size_t k = 0; k < dchars.size(); ++k) gce.char_embeddings.row(tc.ids[k]) += dchars[k].transpose();
  }
  return loss;
}

namespace {

Json checkpoint_header(const char* arch, const ModelDims& dims) {
  Json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["architecture"] = arch;
  j["hyperparameters"] = to_json(dims);
  return j;
}

void check_header(const Json& j, const char* arch) {
  if (!j.is_object() || j.value("format", "") != kCheckpointFormat)
    throw Error("not a kusuri checkpoint");
  if (j.value("version", 0) != kCheckpointVersion)
    throw Error("unsupported checkpoint version");
  if (j.value("architecture", "") != arch)
    throw Error("checkpoint architecture is '" + j.value("architecture", "") + "', expected '" + arch + "'");
  if (!j.contains("hyperparameters") || !j.contains("parameters"))
    throw Error("checkpoint lacks hyperparameters or parameters");
}

}  // namespace

Json KusuriDnn::to_checkpoint(const Json& extra) const {
  Json j = checkpoint_header(kArchitecture, dims_);
  Json chars = Json::array();
  for (char32_t c : chars_.chars()) chars.push_back(static_cast<std::uint32_t>(c));
  j["char_vocabulary"] = std::move(chars);
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  j["parameters"] = parameters_to_json(params_);
  return j;
}

KusuriDnn KusuriDnn::from_checkpoint(const Json& j) {
  check_header(j, kArchitecture);
  ModelDims dims = dims_from_json(j["hyperparameters"]);
  dims.validate();
  std::vector<char32_t> chars;
  for (const auto& c : j.at("char_vocabulary")) chars.push_back(static_cast<char32_t>(c.get<std::uint32_t>()));
  CharVocab vocab = CharVocab::from_chars(chars);
  auto params = KusuriDnnParams::zeros(vocab.size(), dims);
  parameters_from_json(j["parameters"], params);
  return KusuriDnn(dims, std::move(vocab), std::move(params));
}

// ------------------------------------------------------------- weak LSTM

namespace {

struct WeakCache {
  nn::RunCache<nn::LstmCell> run;
  nn::AttentionCache attn;
  nn::DenseCache head;
};

double weak_forward(const WeakLstmParams& p, const ModelDims& d, const EmbeddingTable& emb,
                    const Tweet& tweet, WeakCache* cache) {
  if (tweet.tokens.empty()) return 0.0;
  check_embedding_dim(emb, d);
  std::vector<Vec> xs;
  xs.reserve(tweet.tokens.size());
  for (const auto& tok : tweet.tokens) xs.push_back(emb.lookup(tok.text));
  auto states = nn::run_sequence<nn::LstmCell>(p.lstm, xs, false, cache ? &cache->run : nullptr);
  for (const auto& s : states) nn::check_finite(s, "lstm");
  auto att = nn::attention(p.attn, states, cache ? &cache->attn : nullptr);
  nn::check_finite(att.context, "attn");
  Vec y = nn::dense(p.head, att.context, cache ? &cache->head : nullptr);
  nn::check_finite(y, "head");
  return y(0);
}

}  // namespace

WeakLstm WeakLstm::initialize(const ModelDims& dims, CharVocab, Rng& rng) {
  dims.validate();
  auto params = WeakLstmParams::zeros(dims);
  nn::glorot_init(params, rng);
  return WeakLstm(dims, std::move(params));
}

double WeakLstm::predict(const EmbeddingTable& emb, const Tweet& tweet, CharEncodingCache*) const {
  return weak_forward(params_, dims_, emb, tweet, nullptr);
}

double WeakLstm::accumulate_gradients(const EmbeddingTable& emb, const Tweet& tweet, int label,
                                      Params& g) const {
  WeakCache c;
  const double p = weak_forward(params_, dims_, emb, tweet, &c);
  const double loss = nn::bce_loss(p, label);
  if (tweet.tokens.empty()) return loss;
  Vec dy = Vec::Constant(1, nn::bce_grad(p, label));
  Vec dctx = nn::dense_backward(params_.head, c.head, dy, g.head);
  auto dstates = nn::attention_backward(params_.attn, c.attn, dctx, g.attn);
  nn::run_sequence_backward<nn::LstmCell>(params_.lstm, c.run, dstates, false, g.lstm);
  return loss;
}

Json WeakLstm::to_checkpoint(const Json& extra) const {
  Json j = checkpoint_header(kArchitecture, dims_);
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  j["parameters"] = parameters_to_json(params_);
  return j;
}

WeakLstm WeakLstm::from_checkpoint(const Json& j) {
  check_header(j, kArchitecture);
  ModelDims dims = dims_from_json(j["hyperparameters"]);
  dims.validate();
  auto params = WeakLstmParams::zeros(dims);
  parameters_from_json(j["parameters"], params);
  return WeakLstm(dims, std::move(params));
}

// --------------------------------------------------------- weak labels

Corpus build_weak_training_set(const Corpus& corpus, const Lexicon& seeds, std::uint64_t rng_seed) {
  std::vector<std::size_t> positives, others;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const bool hit = seeds.matcher().contains_any(token_views(corpus.items[i].tweet));
    (hit ? positives : others).push_back(i);
  }
  if (positives.empty()) throw Error("no positives: no tweet contains a seed name");
  if (others.size() < positives.size())
    throw Error("not enough non-seed tweets (" + std::to_string(others.size()) + ") to sample " +
                std::to_string(positives.size()) + " negatives");
  Rng rng(rng_seed);
  rng.shuffle(others);
  others.resize(positives.size());
  std::vector<std::pair<std::size_t, int>> chosen;
  for (auto i : positives) chosen.emplace_back(i, 1);
  for (auto i : others) chosen.emplace_back(i, 0);
  std::sort(chosen.begin(), chosen.end());

  Corpus out;
  out.provenance = "weak labels from " + (corpus.provenance.empty() ? "corpus" : corpus.provenance);
  for (auto [i, label] : chosen) out.items.push_back({corpus.items[i].tweet, label});
  return out;
}

// ------------------------------------------------------------- training

std::vector<LabeledTweet> labeled_items(const Corpus& corpus) {
  std::vector<LabeledTweet> out;
  out.reserve(corpus.size());
  for (const auto& e : corpus.items) {
    if (!e.label) throw Error("tweet '" + e.tweet.id + "' has no label");
    out.push_back({e.tweet, *e.label});
  }
  return out;
}

namespace {

template <class Model>
std::pair<double, double> evaluate(const Model& model, const EmbeddingTable& emb,
                                   const std::vector<LabeledTweet>& data) {
  double loss = 0.0;
  std::size_t correct = 0;
  CharEncodingCache memo;
  for (const auto& ex : data) {
    const double p = model.predict(emb, ex.tweet, &memo);
    loss += nn::bce_loss(p, ex.label);
    correct += static_cast<std::size_t>((p >= 0.5 ? 1 : 0) == ex.label);
  }
  const auto n = static_cast<double>(data.size());
  return {loss / n, static_cast<double>(correct) / n};
}

template <class Model>
TrainResult<Model> train_loop(const std::vector<LabeledTweet>& data, const EmbeddingTable& emb,
                              const TrainConfig& cfg) {
  cfg.validate();
  check_embedding_dim(emb, cfg.dims);
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < data.size(); ++i) (data[i].label ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) throw Error("training data must contain both classes");

  Rng rng(cfg.rng_seed);
  std::vector<char> is_dev(data.size(), 0);
  if (cfg.dev_fraction > 0) {
    for (auto* cls : {&pos, &neg}) {
      std::vector<std::size_t> idx = *cls;
      rng.shuffle(idx);
      auto n_dev = static_cast<std::size_t>(std::llround(static_cast<double>(idx.size()) * cfg.dev_fraction));
      n_dev = std::min(n_dev, idx.size() - 1);
      for (std::size_t k = 0; k < n_dev; ++k) is_dev[idx[k]] = 1;
    }
  }
  std::vector<LabeledTweet> train, dev;
  for (std::size_t i = 0; i < data.size(); ++i) (is_dev[i] ? dev : train).push_back(data[i]);

  std::vector<const Tweet*> all;
  for (const auto& ex : data) all.push_back(&ex.tweet);
  Model model = Model::initialize(cfg.dims, CharVocab::from_tweets(all), rng);

  TrainResult<Model> result{model, {}, 0};
  if (cfg.epochs == 0) return result;

  auto adam = nn::AdamState<typename Model::Params>::init(model.params());
  const nn::AdamConfig adam_cfg{cfg.learning_rate};
  double best_dev = std::numeric_limits<double>::infinity();
  int since_best = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      auto grads = nn::zeros_like(model.params());
      for (std::size_t k = start; k < end; ++k) {
        const auto& ex = train[order[k]];
        model.accumulate_gradients(emb, ex.tweet, ex.label, grads);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      grads.for_each([&](const std::string&, auto& t) { t *= scale; });
      nn::adam_step(model.params(), grads, adam, adam_cfg);
    }

    EpochStats stats;
    stats.epoch = epoch;
    std::tie(stats.train_loss, stats.train_accuracy) = evaluate(model, emb, train);
    if (!dev.empty()) {
      auto [dl, da] = evaluate(model, emb, dev);
      stats.dev_loss = dl;
      stats.dev_accuracy = da;
    }
    if (!std::isfinite(stats.train_loss)) throw NumericError("loss");
    result.history.push_back(stats);

    if (dev.empty()) {
      result.model = model;
      result.best_epoch = epoch;
      continue;
    }
    if (*stats.dev_loss < best_dev) {
      best_dev = *stats.dev_loss;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace

TrainResult<KusuriDnn> train_kusuri(const std::vector<LabeledTweet>& data, const EmbeddingTable& emb,
                                    const TrainConfig& config) {
  return train_loop<KusuriDnn>(data, emb, config);
}

TrainResult<WeakLstm> train_weak(const std::vector<LabeledTweet>& data, const EmbeddingTable& emb,
                                 const TrainConfig& config) {
  return train_loop<WeakLstm>(data, emb, config);
}

Json history_to_json(const std::vector<EpochStats>& history, int best_epoch) {
  Json epochs = Json::array();
  for (const auto& s : history) {
    Json e;
    e["epoch"] = s.epoch;
    e["train_loss"] = s.train_loss;
    e["train_accuracy"] = s.train_accuracy;
    e["dev_loss"] = s.dev_loss ? Json(*s.dev_loss) : Json(nullptr);
    e["dev_accuracy"] = s.dev_accuracy ? Json(*s.dev_accuracy) : Json(nullptr);
    epochs.push_back(std::move(e));
  }
  Json j;
  j["best_epoch"] = best_epoch;
  j["epochs"] = std::move(epochs);
  return j;
}

}  // namespace kusuri

// ------------------------------------------------------------ gradcheck

namespace kusuri {

namespace {

template <class Model>
nn::GradientComparison check_model(const Model& model, const EmbeddingTable& emb,
                                   const std::vector<LabeledTweet>& data, double epsilon) {
  auto analytic = nn::zeros_like(model.params());
  for (const auto& ex : data) model.accumulate_gradients(emb, ex.tweet, ex.label, analytic);
  std::function<double(const typename Model::Params&)> loss = [&](const typename Model::Params& p) {
    Model m = model;
    m.params() = p;
    double total = 0.0;
    for (const auto& ex : data) total += nn::bce_loss(m.predict(emb, ex.tweet), ex.label);
    return total;
  };
  auto numeric = nn::finite_diff_gradients(loss, model.params(), epsilon);
  return nn::compare_gradients(analytic, numeric);
}

}  // namespace

nn::GradientComparison gradient_check(std::string_view architecture, std::uint64_t seed, double epsilon) {
  Rng rng(seed);
  ModelDims d;
  d.char_embedding = 3;
  d.char_hidden = 4;
  d.char_attention = 4;
  d.morphology = 4;
  d.word_embedding = 5;
  d.word_hidden = 6;
  d.word_attention = 5;
  d.weak_hidden = 6;
  d.weak_attention = 5;

  std::vector<LabeledTweet> data = {
      {Tweet::make("g1", "took my tylenol"), 1},
      {Tweet::make("g2", "a long day, ok"), 0},
  };
  EmbeddingTable emb;
  emb.dim = d.word_embedding;
  for (const auto& ex : data)
    for (const auto& tok : ex.tweet.tokens) {
      if (tok.text == "day") continue;  // leave one word to the unk vector
      nn::Vec v(emb.dim);
      for (int i = 0; i < emb.dim; ++i) v[i] = rng.uniform(-1.0, 1.0);
      emb.entries.emplace(tok.text, std::move(v));
    }
  emb.unk = nn::Vec::Constant(emb.dim, 0.1);

  std::vector<const Tweet*> tweets;
  for (const auto& ex : data) tweets.push_back(&ex.tweet);
  CharVocab vocab = CharVocab::from_tweets(tweets);

  if (architecture == kKusuriArchitecture) {
    auto model = KusuriDnn::initialize(d, vocab, rng);
    // biases start at zero; perturb them so their gradients are exercised
    model.params().for_each([&](const std::string&, auto& t) {
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += rng.uniform(-0.1, 0.1);
    });
    return check_model(model, emb, data, epsilon);
  }
  if (architecture == kWeakArchitecture) {
    auto model = WeakLstm::initialize(d, vocab, rng);
    model.params().for_each([&](const std::string&, auto& t) {
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += rng.uniform(-0.1, 0.1);
    });
    return check_model(model, emb, data, epsilon);
  }
  throw Error("unknown architecture '" + std::string(architecture) + "'");
}

}  // namespace kusuri
