#include <doctest.h>

#include <cstring>
#include <set>
#include <sstream>

#include "kusuri/error.hpp"
#include "kusuri/models.hpp"

using namespace kusuri;

namespace {

ModelDims tiny_dims() {
  ModelDims d;
  d.char_embedding = 3;
  d.char_hidden = 4;
  d.char_attention = 3;
  d.morphology = 4;
  d.word_embedding = 5;
  d.word_hidden = 6;
  d.word_attention = 4;
  d.weak_hidden = 6;
  d.weak_attention = 4;
  return d;
}

EmbeddingTable random_table(const std::vector<std::string>& words, int dim, Rng& rng) {
  EmbeddingTable t;
  t.dim = dim;
  nn::Vec sum = nn::Vec::Zero(dim);
  for (const auto& w : words) {
    nn::Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = rng.uniform(-1, 1);
    sum += v;
    t.entries.emplace(w, v);
  }
  t.unk = sum / static_cast<double>(std::max<std::size_t>(words.size(), 1));
  return t;
}

template <class P>
void perturb(P& p, Rng& rng, double s) {
  p.for_each([&](const std::string&, auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += rng.uniform(-s, s);
  });
}

template <class P>
bool bit_equal(const P& a, const P& b) {
  bool same = true;
  auto ta = nn::tensors(const_cast<P&>(a));
  auto tb = nn::tensors(const_cast<P&>(b));
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i)
    same = same && ta[i].size == tb[i].size &&
           std::memcmp(ta[i].data, tb[i].data, sizeof(double) * static_cast<std::size_t>(ta[i].size)) == 0;
  return same;
}

CharVocab vocab_of(const std::vector<LabeledTweet>& data) {
  std::vector<const Tweet*> all;
  for (const auto& ex : data) all.push_back(&ex.tweet);
  return CharVocab::from_tweets(all);
}

// ten distinct characters: a c d e i k l o s t
std::vector<LabeledTweet> tiny_data() {
  return {{Tweet::make("1", "took a dose"), 1},
          {Tweet::make("2", "it is cold"), 0},
          {Tweet::make("3", "ice"), 0}};
}

// 20 examples with disjoint vocabularies per class.
std::vector<LabeledTweet> separable() {
  const char* pos[] = {"took xanax tonight", "my advil works", "need more tylenol", "xanax and advil",
                       "tylenol helps me", "advil for pain", "took tylenol again", "xanax kicked in",
                       "more advil please", "tylenol and xanax"};
  const char* neg[] = {"great game today", "love this song", "the weather is nice", "game night with friends",
                       "nice song tonight", "this weather though", "friends are great", "song of the day",
                       "nice day outside", "love the game"};
  std::vector<LabeledTweet> out;
  for (int i = 0; i < 10; ++i) {
    out.push_back({Tweet::make("p" + std::to_string(i), pos[i]), 1});
    out.push_back({Tweet::make("n" + std::to_string(i), neg[i]), 0});
  }
  return out;
}

EmbeddingTable table_for(const std::vector<LabeledTweet>& data, int dim, std::uint64_t seed) {
  std::set<std::string> words;
  for (const auto& ex : data)
    for (const auto& t : ex.tweet.tokens) words.insert(t.text);
  Rng rng(seed);
  return random_table({words.begin(), words.end()}, dim, rng);
}

}  // namespace

TEST_CASE("load_embeddings: formats and errors") {
  std::istringstream with_header("2 3\nfoo 1 2 3\nbar -1 0 0.5\n");
  auto t = load_embeddings(with_header);
  CHECK(t.dim == 3);
  CHECK(t.entries.size() == 2);
  CHECK(t.lookup("foo")[1] == 2.0);
  CHECK(t.unk[0] == 0.0);
  CHECK(t.unk[1] == 1.0);
  CHECK(t.unk[2] == 1.75);
  CHECK(t.lookup("missing") == t.unk);

  std::istringstream no_header("foo 1 2\nbar 3 4\n");
  CHECK(load_embeddings(no_header).dim == 2);

  std::istringstream bad("foo 1 2 3\nbar 1 2\n");
  try {
    load_embeddings(bad);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream declared("foo 1 2 3\n");
  CHECK_THROWS_AS(load_embeddings(declared, 4), ParseError);
  std::istringstream junk("foo 1 x 3\n");
  CHECK_THROWS_AS(load_embeddings(junk), ParseError);

  std::istringstream dup("foo 1 1\nfoo 2 2\n");
  CHECK(load_embeddings(dup).lookup("foo")[0] == 1.0);
}

TEST_CASE("write_embeddings round trips bit-exactly") {
  Rng rng(1);
  auto t = random_table({"b", "a", "c"}, 4, rng);
  std::stringstream ss;
  write_embeddings(t, ss);
  auto back = load_embeddings(ss);
  for (const auto& [w, v] : t.entries) CHECK(back.lookup(w) == v);
}

TEST_CASE("CharVocab") {
  auto v = CharVocab::from_chars({U'b', U'a', U'b', U'é'});
  CHECK(v.size() == 4);
  CHECK(v.lookup(U'a') == 1);
  CHECK(v.lookup(U'b') == 2);
  CHECK(v.lookup(U'z') == 0);
}

TEST_CASE("char_encode: examples") {
  Rng rng(2);
  auto data = tiny_data();
  const ModelDims d = tiny_dims();
  KusuriDnn zero(d, vocab_of(data), KusuriDnnParams::zeros(vocab_of(data).size(), d));
  CHECK(zero.char_encode(data[0].tweet.tokens[0]).isZero());

  KusuriDnn m = KusuriDnn::initialize(d, vocab_of(data), rng);
  perturb(m.params(), rng, 0.2);
  const Token& a = data[0].tweet.tokens[1];  // "a"
  REQUIRE(a.chars.size() == 1);
  const auto& ce = m.params().char_encoder;
  nn::Vec x = ce.char_embeddings.row(m.chars().lookup(U'a')).transpose();
  nn::Vec h = nn::gru_step(ce.recurrent, x, nn::Vec::Zero(d.char_hidden));
  nn::Vec expect = nn::dense(ce.proj, h);
  CHECK((m.char_encode(a) - expect).norm() < 1e-15);

  CHECK(m.char_encode(data[0].tweet.tokens[0]) == m.char_encode(Tweet::make("x", "took").tokens[0]));
  // unknown characters share the reserved embedding
  CHECK(m.char_encode(Tweet::make("x", "q").tokens[0]) == m.char_encode(Tweet::make("y", "z").tokens[0]));
}

TEST_CASE("forward: range, head short-circuit, empty tweet, isolation") {
  Rng rng(3);
  auto data = tiny_data();
  const ModelDims d = tiny_dims();
  auto emb = table_for(data, d.word_embedding, 4);
  KusuriDnn m = KusuriDnn::initialize(d, vocab_of(data), rng);
  perturb(m.params(), rng, 1.0);
  for (const auto& ex : data) {
    const double p = m.predict(emb, ex.tweet);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
  CHECK(m.predict(emb, Tweet::make("e", "   ")) == 0.0);

  KusuriDnn headless = m;
  headless.params().head.W.setZero();
  headless.params().head.b.setZero();
  for (const auto& ex : data) CHECK(headless.predict(emb, ex.tweet) == 0.5);

  WeakLstm w = WeakLstm::initialize(d, {}, rng);
  perturb(w.params(), rng, 1.0);
  const double before = m.predict(emb, data[0].tweet);
  KusuriDnn other = m;
  perturb(other.params(), rng, 1.0);
  CHECK(m.predict(emb, data[0].tweet) == before);
  const double pw = w.predict(emb, data[1].tweet);
  CHECK(pw > 0.0);
  CHECK(pw < 1.0);
  CHECK(w.predict(emb, Tweet::make("e", "")) == 0.0);
  WeakLstm whead = w;
  whead.params().head.W.setZero();
  whead.params().head.b.setZero();
  CHECK(whead.predict(emb, data[1].tweet) == 0.5);

  EmbeddingTable wrong = table_for(data, 3, 4);
  CHECK_THROWS_AS(m.predict(wrong, data[0].tweet), Error);
}

TEST_CASE("forward is invariant to embeddings of absent words; OOV uses unk") {
  Rng rng(5);
  auto data = tiny_data();
  const ModelDims d = tiny_dims();
  auto emb = table_for(data, d.word_embedding, 6);
  KusuriDnn m = KusuriDnn::initialize(d, vocab_of(data), rng);
  const Tweet& t = data[1].tweet;  // "it is cold"
  const double p = m.predict(emb, t);
  auto emb2 = emb;
  emb2.entries.at("took").setConstant(9.0);
  emb2.entries.emplace("zzz", nn::Vec::Constant(d.word_embedding, -3.0));
  CHECK(m.predict(emb2, t) == p);

  Tweet oov = Tweet::make("o", "unseen words");
  auto emb3 = emb;
  emb3.unk.setConstant(0.7);
  CHECK(m.predict(emb3, oov) != m.predict(emb, oov));
}

TEST_CASE("end-to-end gradients match central differences (tiny dims)") {
  // d_c=3, h_c=4, d_m=4, d_w=5, h=6 and a 10-symbol character vocabulary
  Rng rng(11);
  auto data = tiny_data();
  const ModelDims d = tiny_dims();
  auto emb = table_for(data, d.word_embedding, 12);
  emb.entries.erase("cold");  // one OOV word
  CharVocab vocab = vocab_of(data);
  CHECK(vocab.size() == 11);  // plus the reserved unknown slot

  KusuriDnn m = KusuriDnn::initialize(d, vocab, rng);
  perturb(m.params(), rng, 0.3);
  auto analytic = nn::zeros_like(m.params());
  for (const auto& ex : data) m.accumulate_gradients(emb, ex.tweet, ex.label, analytic);
  std::function<double(const KusuriDnnParams&)> loss = [&](const KusuriDnnParams& p) {
    KusuriDnn q(d, vocab, p);
    double s = 0;
    for (const auto& ex : data) s += nn::bce_loss(q.predict(emb, ex.tweet), ex.label);
    return s;
  };
  auto cmp = nn::compare_gradients(analytic, nn::finite_diff_gradients(loss, m.params(), 1e-5));
  CHECK(cmp.compared == nn::parameter_count(m.params()));
  CHECK_MESSAGE(cmp.max_relative_error < 1e-4, cmp.worst_parameter << " " << cmp.max_relative_error);

  WeakLstm w = WeakLstm::initialize(d, {}, rng);
  perturb(w.params(), rng, 0.3);
  auto wa = nn::zeros_like(w.params());
  for (const auto& ex : data) w.accumulate_gradients(emb, ex.tweet, ex.label, wa);
  std::function<double(const WeakLstmParams&)> wloss = [&](const WeakLstmParams& p) {
    WeakLstm q(d, p);
    double s = 0;
    for (const auto& ex : data) s += nn::bce_loss(q.predict(emb, ex.tweet), ex.label);
    return s;
  };
  auto wcmp = nn::compare_gradients(wa, nn::finite_diff_gradients(wloss, w.params(), 1e-5));
  CHECK_MESSAGE(wcmp.max_relative_error < 1e-4, wcmp.worst_parameter << " " << wcmp.max_relative_error);

  // empty tweets contribute nothing
  auto g = nn::zeros_like(m.params());
  CHECK(m.accumulate_gradients(emb, Tweet::make("e", ""), 1, g) == doctest::Approx(nn::bce_loss(0.0, 1)));
  CHECK(nn::tensors(g)[0].data[0] == 0.0);
}

TEST_CASE("gradient_check helper") {
  CHECK(gradient_check("kusuri-dnn", 3).max_relative_error < 1e-4);
  CHECK(gradient_check("weak-lstm", 3).max_relative_error < 1e-4);
  CHECK_THROWS_AS(gradient_check("cnn", 3), Error);
}

TEST_CASE("build_weak_training_set") {
  Corpus c;
  for (int i = 0; i < 10; ++i) {
    const std::string text = i < 3 ? "some xanax " + std::to_string(i) : "plain " + std::to_string(i);
    c.items.push_back({Tweet::make("t" + std::to_string(i), text), std::nullopt});
  }
  Lexicon seeds = Lexicon::from_entries({"xanax"});
  Corpus w = build_weak_training_set(c, seeds, 7);
  CHECK(w.size() == 6);
  int pos = 0;
  std::set<std::string> ids;
  for (const auto& e : w.items) {
    REQUIRE(e.label);
    pos += *e.label;
    CHECK(ids.insert(e.tweet.id).second);
    CHECK((*e.label == 1) == (e.tweet.norm.find("xanax") != std::string::npos));
  }
  CHECK(pos == 3);
  CHECK(build_weak_training_set(c, seeds, 7).items == w.items);

  CHECK_THROWS_WITH_AS(build_weak_training_set(c, Lexicon::from_entries({"advil"}), 1), doctest::Contains("no positives"), Error);

  Corpus mostly;
  for (int i = 0; i < 5; ++i)
    mostly.items.push_back({Tweet::make(std::to_string(i), i < 4 ? "xanax" : "no"), std::nullopt});
  CHECK_THROWS_AS(build_weak_training_set(mostly, seeds, 1), Error);
}

TEST_CASE("config json") {
  TrainConfig c;
  c.epochs = 3;
  c.dims.word_hidden = 7;
  TrainConfig back = train_config_from_json(to_json(c));
  CHECK(back.epochs == 3);
  CHECK(back.dims.word_hidden == 7);
  CHECK_THROWS_AS(train_config_from_json(Json{{"epoch", 1}}), Error);
  TrainConfig bad;
  bad.dev_fraction = 0.6;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("training: zero epochs, determinism, single class") {
  auto data = separable();
  TrainConfig cfg;
  cfg.dims = tiny_dims();
  cfg.dev_fraction = 0.0;
  cfg.epochs = 0;
  cfg.rng_seed = 21;
  auto emb = table_for(data, cfg.dims.word_embedding, 3);
  auto r0 = train_kusuri(data, emb, cfg);
  Rng rng(21);
  auto init = KusuriDnn::initialize(cfg.dims, vocab_of(data), rng);
  CHECK(bit_equal(r0.model.params(), init.params()));
  CHECK(r0.history.empty());
  CHECK(r0.best_epoch == 0);

  cfg.epochs = 3;
  cfg.dev_fraction = 0.2;
  cfg.batch_size = 4;
  auto a = train_kusuri(data, emb, cfg);
  auto b = train_kusuri(data, emb, cfg);
  CHECK(bit_equal(a.model.params(), b.model.params()));
  CHECK(a.model.to_checkpoint().dump() == b.model.to_checkpoint().dump());
  cfg.rng_seed = 22;
  auto c = train_kusuri(data, emb, cfg);
  CHECK_FALSE(bit_equal(a.model.params(), c.model.params()));

  std::vector<LabeledTweet> one_class(data.begin(), data.end());
  for (auto& ex : one_class) ex.label = 1;
  CHECK_THROWS_AS(train_kusuri(one_class, emb, cfg), Error);
}

TEST_CASE("training: history and dev-selected epoch") {
  auto data = separable();
  TrainConfig cfg;
  cfg.dims = tiny_dims();
  cfg.epochs = 12;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.02;
  cfg.dev_fraction = 0.2;
  cfg.patience = 100;
  auto emb = table_for(data, cfg.dims.word_embedding, 8);
  auto r = train_weak(data, emb, cfg);
  REQUIRE(r.history.size() == 12);
  double best = 1e300;
  int best_epoch = 0;
  for (const auto& s : r.history) {
    CHECK(std::isfinite(s.train_loss));
    REQUIRE(s.dev_loss);
    if (*s.dev_loss < best) {
      best = *s.dev_loss;
      best_epoch = s.epoch;
    }
  }
  CHECK(r.best_epoch == best_epoch);
  CHECK(r.history.back().train_loss < r.history.front().train_loss);

  auto j = history_to_json(r.history, r.best_epoch);
  CHECK(j["best_epoch"] == r.best_epoch);
  CHECK(j["epochs"].size() == 12);
}

TEST_CASE("early stopping honours patience") {
  auto data = separable();
  TrainConfig cfg;
  cfg.dims = tiny_dims();
  cfg.epochs = 60;
  cfg.batch_size = 2;
  cfg.learning_rate = 0.2;  // large steps: dev loss soon stops improving
  cfg.dev_fraction = 0.2;
  cfg.patience = 2;
  auto emb = table_for(data, cfg.dims.word_embedding, 8);
  auto r = train_weak(data, emb, cfg);
  CHECK(static_cast<int>(r.history.size()) <= r.best_epoch + cfg.patience);
}

TEST_CASE("small separable corpus is fitted") {
  auto data = separable();
  TrainConfig cfg;
  cfg.dims = tiny_dims();
  cfg.epochs = 60;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.01;
  cfg.dev_fraction = 0.0;
  auto emb = table_for(data, cfg.dims.word_embedding, 9);
  auto r = train_kusuri(data, emb, cfg);
  CHECK(r.history.back().train_accuracy == 1.0);
}

TEST_CASE("checkpoints reproduce predictions bit-exactly") {
  auto data = separable();
  TrainConfig cfg;
  cfg.dims = tiny_dims();
  cfg.epochs = 2;
  cfg.dev_fraction = 0.0;
  auto emb = table_for(data, cfg.dims.word_embedding, 9);
  auto r = train_kusuri(data, emb, cfg);
  Json ck = r.model.to_checkpoint({{"note", "x"}});
  CHECK(ck["format"] == "kusuri-checkpoint");
  CHECK(ck["architecture"] == "kusuri-dnn");
  KusuriDnn back = KusuriDnn::from_checkpoint(Json::parse(ck.dump()));
  for (const auto& ex : data) CHECK(back.predict(emb, ex.tweet) == r.model.predict(emb, ex.tweet));
  CHECK(back.to_checkpoint({{"note", "x"}}).dump() == ck.dump());
  CHECK_THROWS_AS(WeakLstm::from_checkpoint(ck), Error);

  auto w = train_weak(data, emb, cfg);
  WeakLstm wb = WeakLstm::from_checkpoint(Json::parse(w.model.to_checkpoint().dump()));
  for (const auto& ex : data) CHECK(wb.predict(emb, ex.tweet) == w.model.predict(emb, ex.tweet));

  Json bad = ck;
  bad["version"] = 99;
  CHECK_THROWS_AS(KusuriDnn::from_checkpoint(bad), Error);
}

TEST_CASE("char-encoding cache does not change predictions") {
  auto data = separable();
  Rng rng(4);
  const ModelDims d = tiny_dims();
  auto emb = table_for(data, d.word_embedding, 9);
  KusuriDnn m = KusuriDnn::initialize(d, vocab_of(data), rng);
  CharEncodingCache cache;
  for (const auto& ex : data) CHECK(m.predict(emb, ex.tweet, &cache) == m.predict(emb, ex.tweet));
  for (const auto& ex : data) CHECK(m.predict(emb, ex.tweet, &cache) == m.predict(emb, ex.tweet));
}
