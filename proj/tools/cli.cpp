#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "kusuri/config.hpp"
#include "kusuri/ensemble.hpp"
#include "kusuri/eval.hpp"
#include "kusuri/models.hpp"
#include "kusuri/pipeline.hpp"
#include "kusuri/prefilter.hpp"
#include "kusuri/text.hpp"
#include "kusuri/variants.hpp"

namespace kusuri::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kStreamBatch = 4096;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  int threads = 1;
};

// ---------------------------------------------------------------- io

void require_input(const std::string& path, const char* what) {
  std::error_code ec;
  if (path.empty() || !fs::is_regular_file(path, ec))
    throw ConfigError(std::string(what) + " not found: " + path);
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  return in;
}

// Writes through a temp file in the same directory, then renames.
void write_atomic(const fs::path& target, const std::function<void(std::ostream&)>& body) {
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    body(out);
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error("write failed for " + target.string());
    }
  }
  fs::rename(tmp, target);
}

void write_json(const fs::path& target, const Json& j) {
  write_atomic(target, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

// Line-delimited outputs carry their provenance in a sidecar file.
void write_meta(const fs::path& target, const std::string& command, const std::string& hash,
                const Json& extra = Json::object()) {
  Json j;
  j["command"] = command;
  j["config_hash"] = hash;
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = *it;
  fs::path meta = target;
  meta += ".meta.json";
  write_json(meta, j);
}

Corpus read_corpus_file(const std::string& path) {
  auto in = open_in(path);
  return load_corpus(in, path);
}

// ---------------------------------------------------------- context

struct Context {
  Globals g;
  RunConfig cfg;
  fs::path out_dir;

  std::string hash() const { return cfg.hash(); }

  void prepare_out() const {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir)) throw ConfigError("cannot create output directory " + out_dir.string());
  }
};

Context make_context(const Globals& g) {
  Context c;
  c.g = g;
  if (!g.config_path.empty()) {
    require_input(g.config_path, "config file");
    c.cfg = load_run_config(g.config_path);
  }
  if (!g.out_dir.empty()) {
    c.out_dir = g.out_dir;
  } else if (c.cfg.has_path("output_dir")) {
    c.out_dir = c.cfg.path("output_dir");
  } else {
    c.out_dir = ".";
  }
  if (g.threads < 1) throw ConfigError("--threads must be >= 1");
  if (g.seed) {
    c.cfg.train.rng_seed = *g.seed;
    c.cfg.weak_train.rng_seed = *g.seed;
    if (c.cfg.ensemble.seeds.empty()) {
      for (int i = 0; i < c.cfg.ensemble.k; ++i) c.cfg.ensemble.seeds.push_back(*g.seed + static_cast<std::uint64_t>(i));
    }
  }
  return c;
}

// ------------------------------------------------------- components

Lexicon read_lexicon_file(const RunConfig& cfg, const char* key) {
  auto in = open_in(cfg.path(key));
  return load_lexicon(in, cfg.path(key).filename().string());
}

VariantConfig variant_config_with_common_words(const RunConfig& cfg) {
  VariantConfig vc = cfg.variants;
  if (cfg.has_path("common_words")) {
    auto in = open_in(cfg.path("common_words"));
    Lexicon words = load_word_list(in);
    for (const auto& p : words.phrases())
      if (p.size() == 1) vc.common_words.insert(p[0]);
  }
  return vc;
}

struct Components {
  Lexicon lexicon;
  Lexicon variants;
  PatternSet patterns;
  EmbeddingTable embeddings;
  WeakLstm weak;
  std::unique_ptr<WeakScorer> scorer;

  Prefilter prefilter(const RunConfig& cfg) const {
    Prefilter p;
    p.lexicon = &lexicon;
    p.variants = &variants;
    p.patterns = &patterns;
    p.weak = scorer.get();
    p.weak_threshold = cfg.weak_threshold;
    p.match = cfg.match;
    return p;
  }
};

void require_components(const RunConfig& cfg) {
  cfg.require({"lexicon", "patterns", "weak_checkpoint", "embeddings"});
  if (cfg.has_path("variants")) cfg.require({"variants"});
  if (cfg.has_path("common_words")) cfg.require({"common_words"});
}

EmbeddingTable read_embeddings(const RunConfig& cfg) {
  auto in = open_in(cfg.path("embeddings"));
  return load_embeddings(in);
}

std::unique_ptr<Components> load_components(const RunConfig& cfg) {
  auto c = std::make_unique<Components>();
  c->lexicon = read_lexicon_file(cfg, "lexicon");
  if (cfg.has_path("variants")) {
    auto in = open_in(cfg.path("variants"));
    c->variants = load_word_list(in, "variants");
  } else {
    c->variants = build_variant_lexicon(c->lexicon, variant_config_with_common_words(cfg));
  }
  {
    auto in = open_in(cfg.path("patterns"));
    c->patterns = compile_patterns(in);
  }
  c->embeddings = read_embeddings(cfg);
  {
    auto in = open_in(cfg.path("weak_checkpoint"));
    try {
      c->weak = WeakLstm::from_checkpoint(Json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw Error("malformed weak checkpoint: " + std::string(e.what()));
    }
  }
  c->scorer = std::make_unique<WeakScorer>(c->weak, c->embeddings);
  return c;
}

// --------------------------------------------------------- commands

int cmd_variants_generate(const Context& ctx, const std::string& lexicon_arg, std::ostream& out) {
  RunConfig cfg = ctx.cfg;
  if (!lexicon_arg.empty()) {
    require_input(lexicon_arg, "lexicon");
    cfg.paths["lexicon"] = fs::absolute(lexicon_arg).string();
  }
  cfg.require({"lexicon"});
  if (cfg.has_path("common_words")) cfg.require({"common_words"});
  ctx.prepare_out();

  Lexicon lex = read_lexicon_file(cfg, "lexicon");
  Lexicon variants = build_variant_lexicon(lex, variant_config_with_common_words(cfg));
  const fs::path target = ctx.out_dir / "variants.txt";
  write_atomic(target, [&](std::ostream& o) {
    o << "# variants of " << lex.source() << '\n';
    o << "# config_hash " << ctx.hash() << '\n';
    write_lexicon(Lexicon::from_phrases(variants.phrases()), o);
  });
  out << "wrote " << variants.size() << " variants to " << target.string() << '\n';
  return 0;
}

int cmd_patterns_mine(const Context& ctx, const std::string& corpus_path, std::size_t n,
                      std::size_t top_k, std::ostream& out) {
  require_input(corpus_path, "corpus");
  ctx.cfg.require({"seeds"});
  if (n < 1 || n > 3) throw ConfigError("--n must be 1, 2 or 3");
  if (top_k < 1) throw ConfigError("--top-k must be >= 1");
  ctx.prepare_out();

  Corpus corpus = read_corpus_file(corpus_path);
  Lexicon seeds = read_lexicon_file(ctx.cfg, "seeds");
  auto ranked = mine_context_ngrams(corpus, seeds, n, top_k);
  Json j;
  j["config_hash"] = ctx.hash();
  j["n"] = n;
  j["top_k"] = top_k;
  Json rows = Json::array();
  for (const auto& r : ranked)
    rows.push_back({{"ngram", r.ngram}, {"side", side_name(r.side)}, {"count", r.count}});
  j["ngrams"] = rows;
  const fs::path target = ctx.out_dir / "ngrams.json";
  write_json(target, j);
  for (const auto& r : ranked) out << r.count << '\t' << side_name(r.side) << '\t' << r.ngram << '\n';
  return 0;
}

int cmd_weak_build(const Context& ctx, const std::string& corpus_path, std::ostream& out) {
  require_input(corpus_path, "corpus");
  ctx.cfg.require({"seeds"});
  ctx.prepare_out();

  Corpus corpus = read_corpus_file(corpus_path);
  Lexicon seeds = read_lexicon_file(ctx.cfg, "seeds");
  const std::uint64_t seed = ctx.cfg.weak_train.rng_seed;
  Corpus labeled = build_weak_training_set(corpus, seeds, seed);
  const fs::path target = ctx.out_dir / "weak_train.jsonl";
  write_atomic(target, [&](std::ostream& o) { write_corpus(labeled, o); });
  write_meta(target, "weak-build", ctx.hash(), {{"rng_seed", seed}});
  std::size_t pos = 0;
  for (const auto& e : labeled.items) pos += (e.label && *e.label == 1);
  out << "wrote " << labeled.size() << " examples (" << pos << " positive) to " << target.string() << '\n';
  return 0;
}

std::vector<LabeledTweet> read_labeled(const std::string& path) {
  Corpus c = read_corpus_file(path);
  return labeled_items(c);
}

int cmd_weak_train(const Context& ctx, const std::string& data_path, std::ostream& out) {
  require_input(data_path, "labeled corpus");
  ctx.cfg.require({"embeddings"});
  ctx.prepare_out();

  auto data = read_labeled(data_path);
  EmbeddingTable emb = read_embeddings(ctx.cfg);
  auto result = train_weak(data, emb, ctx.cfg.weak_train);
  Json extra;
  extra["config_hash"] = ctx.hash();
  extra["train"] = to_json(ctx.cfg.weak_train);
  extra["history"] = history_to_json(result.history, result.best_epoch);
  const fs::path target = ctx.out_dir / "weak.ckpt.json";
  write_json(target, result.model.to_checkpoint(extra));
  out << "trained weak model (best epoch " << result.best_epoch << ") -> " << target.string() << '\n';
  return 0;
}

int cmd_gold_build(const Context& ctx, const std::string& corpus_path, std::ostream& out) {
  require_input(corpus_path, "corpus");
  require_components(ctx.cfg);
  ctx.prepare_out();

  auto comp = load_components(ctx.cfg);
  const Prefilter pf = comp->prefilter(ctx.cfg);
  auto in = open_in(corpus_path);
  CorpusReader reader(in);
  Corpus batch;
  std::size_t counts[3] = {0, 0, 0};
  const fs::path target = ctx.out_dir / "gold_candidates.jsonl";
  write_atomic(target, [&](std::ostream& o) {
    while (reader.next_batch(kStreamBatch, batch) > 0) {
      std::vector<FilterVerdict> verdicts;
      verdicts.reserve(batch.size());
      for (const auto& e : batch.items) verdicts.push_back(pf.run(e.tweet));
      auto cands = build_gold_candidates(batch, verdicts);
      for (const auto& c : cands) ++counts[static_cast<int>(c.proposed_label)];
      write_gold_candidates(cands, o);
    }
  });
  write_meta(target, "gold-build", ctx.hash());
  out << "positive_candidate " << counts[0] << "\nnegative_candidate " << counts[1] << "\nexcluded "
      << counts[2] << '\n';
  return 0;
}

int cmd_train_ensemble(const Context& ctx, const std::string& data_path, std::ostream& out) {
  require_input(data_path, "labeled corpus");
  ctx.cfg.require({"embeddings"});
  ctx.prepare_out();

  auto data = read_labeled(data_path);
  EmbeddingTable emb = read_embeddings(ctx.cfg);
  const auto seeds = ctx.cfg.ensemble.resolved_seeds();
  std::vector<TrainResult<KusuriDnn>> results;
  Ensemble ens = train_ensemble(data, emb, ctx.cfg.train, seeds, ctx.cfg.ensemble.threshold, ctx.g.threads,
                                &results);

  const fs::path member_dir = ctx.out_dir / "ensemble";
  fs::create_directories(member_dir);
  EnsembleManifest m;
  m.threshold = ens.threshold;
  m.embeddings = ctx.cfg.paths.count("embeddings") ? ctx.cfg.paths.at("embeddings") : "";
  m.config_hash = ctx.hash();
  for (std::size_t i = 0; i < results.size(); ++i) {
    std::ostringstream name;
    name << "member-" << std::setw(2) << std::setfill('0') << (i + 1) << ".json";
    Json extra;
    extra["config_hash"] = m.config_hash;
    extra["seed"] = seeds[i];
    extra["history"] = history_to_json(results[i].history, results[i].best_epoch);
    write_json(member_dir / name.str(), results[i].model.to_checkpoint(extra));
    m.member_paths.push_back("ensemble/" + name.str());
  }
  const fs::path target = ctx.out_dir / "ensemble.json";
  write_json(target, to_json(m));
  out << "trained " << results.size() << " members -> " << target.string() << '\n';
  return 0;
}

int cmd_classify(const Context& ctx, const std::string& corpus_path, const std::string& mode_arg,
                 std::ostream& out) {
  require_input(corpus_path, "corpus");
  PipelineMode mode;
  try {
    mode = mode_from_name(mode_arg);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  require_components(ctx.cfg);
  if (mode != PipelineMode::kLexiconVariant) ctx.cfg.require({"ensemble"});
  ctx.prepare_out();

  auto comp = load_components(ctx.cfg);
  const Prefilter pf = comp->prefilter(ctx.cfg);
  Ensemble ens;
  ens.threshold = ctx.cfg.ensemble.threshold;
  if (mode != PipelineMode::kLexiconVariant) {
    ens = load_ensemble(ctx.cfg.path("ensemble"));
    ens.threshold = ctx.cfg.ensemble.threshold;
  }

  auto in = open_in(corpus_path);
  CorpusReader reader(in);
  Corpus batch;
  std::size_t n = 0, positive = 0;
  const fs::path target = ctx.out_dir / "classifications.jsonl";
  write_atomic(target, [&](std::ostream& o) {
    while (reader.next_batch(kStreamBatch, batch) > 0) {
      auto rows = classify_corpus(batch, pf, ens, comp->embeddings, mode, ctx.g.threads);
      for (const auto& r : rows) positive += r.label;
      n += rows.size();
      write_classifications(rows, o);
    }
  });
  write_meta(target, "classify", ctx.hash(), {{"mode", mode_name(mode)}});
  out << "classified " << n << " tweets, " << positive << " positive -> " << target.string() << '\n';
  return 0;
}

std::vector<Classification> read_classifications(const std::string& path) {
  auto in = open_in(path);
  return load_classifications(in);
}

int cmd_evaluate(const Context& ctx, const std::string& pred_path, const std::string& gold_path,
                 std::ostream& out) {
  require_input(pred_path, "classification output");
  require_input(gold_path, "gold corpus");
  ctx.prepare_out();

  auto rows = read_classifications(pred_path);
  Corpus gold_corpus = read_corpus_file(gold_path);
  auto gold = gold_labels(gold_corpus);
  ConfusionCounts counts = confusion(predicted_labels(rows), gold);
  Json report = metrics_report(counts);
  report["config_hash"] = ctx.hash();
  report["errors"] = to_json(error_report(rows, gold, gold_corpus));
  write_json(ctx.out_dir / "metrics.json", report);
  out << std::fixed << std::setprecision(1) << "precision = " << report["precision"].get<double>()
      << "\nrecall = " << report["recall"].get<double>() << "\nf1 = " << report["f1"].get<double>() << '\n';
  return 0;
}

std::vector<int> labels_of(const std::vector<Classification>& rows, const std::vector<IdLabel>& gold,
                           const std::string& which) {
  if (rows.size() != gold.size()) throw Error(which + ": row count differs from gold");
  std::vector<int> v;
  v.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].id != gold[i].id) throw Error(which + ": id mismatch at row " + std::to_string(i + 1));
    v.push_back(rows[i].label);
  }
  return v;
}

int cmd_compare(const Context& ctx, const std::string& a_path, const std::string& b_path,
                const std::string& gold_path, std::ostream& out) {
  require_input(a_path, "output A");
  require_input(b_path, "output B");
  require_input(gold_path, "gold corpus");
  ctx.prepare_out();

  auto gold = gold_labels(read_corpus_file(gold_path));
  std::vector<int> g;
  for (const auto& x : gold) g.push_back(x.label);
  auto a = labels_of(read_classifications(a_path), gold, "output A");
  auto b = labels_of(read_classifications(b_path), gold, "output B");
  McNemarResult r = mcnemar(a, b, g);
  Json report = comparison_report(r);
  report["config_hash"] = ctx.hash();
  write_json(ctx.out_dir / "comparison.json", report);
  out << "b = " << r.b << "\nc = " << r.c << "\np_value = " << std::setprecision(10) << r.p_value << '\n';
  return 0;
}

int cmd_gradcheck(const Context& ctx, const std::string& arch, std::ostream& out) {
  if (arch != kKusuriArchitecture && arch != kWeakArchitecture)
    throw ConfigError("unknown architecture '" + arch + "'");
  const std::uint64_t seed = ctx.g.seed.value_or(1);
  auto r = gradient_check(arch, seed);
  const bool ok = r.max_relative_error < 1e-4;
  out << "architecture " << arch << "\nparameters " << r.compared << "\nmax relative error "
      << std::scientific << std::setprecision(3) << r.max_relative_error << " (" << r.worst_parameter
      << ")\n"
      << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? 0 : 1;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"kusuri: medication-mention classification for tweets"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "run configuration (JSON)");
  app.add_option("--seed", g.seed, "override the random seed");
  app.add_option("--out", g.out_dir, "output directory");
  app.add_option("--threads", g.threads, "worker threads")->default_val(1);

  std::function<int(const Context&)> action;

  std::string lexicon_arg;
  auto* variants = app.add_subcommand("variants-generate", "build the misspelling lexicon");
  variants->add_option("lexicon", lexicon_arg, "lexicon file (default: paths.lexicon)");
  variants->callback([&] { action = [&](const Context& c) { return cmd_variants_generate(c, lexicon_arg, out); }; });

  std::string corpus_arg;
  std::size_t ngram_n = 2, top_k = 50;
  auto* mine = app.add_subcommand("patterns-mine", "rank n-grams adjacent to seed names");
  mine->add_option("corpus", corpus_arg)->required();
  mine->add_option("--n", ngram_n)->default_val(2);
  mine->add_option("--top-k", top_k)->default_val(50);
  mine->callback([&] { action = [&](const Context& c) { return cmd_patterns_mine(c, corpus_arg, ngram_n, top_k, out); }; });

  auto* wbuild = app.add_subcommand("weak-build", "weakly label a corpus by seed containment");
  wbuild->add_option("corpus", corpus_arg)->required();
  wbuild->callback([&] { action = [&](const Context& c) { return cmd_weak_build(c, corpus_arg, out); }; });

  auto* wtrain = app.add_subcommand("weak-train", "train the weak LSTM classifier");
  wtrain->add_option("data", corpus_arg)->required();
  wtrain->callback([&] { action = [&](const Context& c) { return cmd_weak_train(c, corpus_arg, out); }; });

  auto* gold = app.add_subcommand("gold-build", "propose gold candidates from the prefilter");
  gold->add_option("corpus", corpus_arg)->required();
  gold->callback([&] { action = [&](const Context& c) { return cmd_gold_build(c, corpus_arg, out); }; });

  auto* tens = app.add_subcommand("train-ensemble", "train K seeded classifiers");
  tens->add_option("data", corpus_arg)->required();
  tens->callback([&] { action = [&](const Context& c) { return cmd_train_ensemble(c, corpus_arg, out); }; });

  std::string mode_arg = "full";
  auto* cls = app.add_subcommand("classify", "run the two-stage pipeline");
  cls->add_option("corpus", corpus_arg)->required();
  cls->add_option("--mode", mode_arg, "full | ensemble-only | lexicon-variant")->default_val("full");
  cls->callback([&] { action = [&](const Context& c) { return cmd_classify(c, corpus_arg, mode_arg, out); }; });

  std::string pred_arg, gold_arg, b_arg;
  auto* ev = app.add_subcommand("evaluate", "precision, recall and F1 against gold labels");
  ev->add_option("predictions", pred_arg)->required();
  ev->add_option("gold", gold_arg)->required();
  ev->callback([&] { action = [&](const Context& c) { return cmd_evaluate(c, pred_arg, gold_arg, out); }; });

  auto* cmp = app.add_subcommand("compare", "McNemar test between two outputs");
  cmp->add_option("a", pred_arg)->required();
  cmp->add_option("b", b_arg)->required();
  cmp->add_option("gold", gold_arg)->required();
  cmp->callback([&] { action = [&](const Context& c) { return cmd_compare(c, pred_arg, b_arg, gold_arg, out); }; });

  std::string arch = kKusuriArchitecture;
  auto* gc = app.add_subcommand("gradcheck", "compare analytic and numeric gradients");
  gc->add_option("architecture", arch, "kusuri-dnn | weak-lstm")->default_val(kKusuriArchitecture);
  gc->callback([&] { action = [&](const Context& c) { return cmd_gradcheck(c, arch, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    Context ctx = make_context(g);
    return action(ctx);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace kusuri::cli
