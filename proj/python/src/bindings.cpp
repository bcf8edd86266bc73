#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <memory>
#include <sstream>

#include "cli.hpp"
#include "kusuri/config.hpp"
#include "kusuri/ensemble.hpp"
#include "kusuri/error.hpp"
#include "kusuri/eval.hpp"
#include "kusuri/models.hpp"
#include "kusuri/pipeline.hpp"
#include "kusuri/prefilter.hpp"
#include "kusuri/text.hpp"
#include "kusuri/variants.hpp"

namespace py = pybind11;
using namespace kusuri;

namespace {

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  return in;
}

Corpus corpus_of(const std::vector<std::string>& texts) {
  Corpus c;
  for (std::size_t i = 0; i < texts.size(); ++i) c.items.push_back({Tweet::make(std::to_string(i), texts[i]), std::nullopt});
  return c;
}

std::vector<std::string> token_texts(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(normalize(text))) out.push_back(t.text);
  return out;
}

std::string join(const Phrase& p) {
  std::string s;
  for (const auto& t : p) s += (s.empty() ? "" : " ") + t;
  return s;
}

py::list spans_to_py(const std::vector<MatchSpan>& spans) {
  py::list out;
  for (const auto& s : spans) out.append(py::make_tuple(s.start_token, s.end_token, join(s.phrase)));
  return out;
}

VariantConfig variant_config(int max_edit_distance, std::size_t min_length, bool deletion, bool insertion,
                             bool substitution, bool transposition, const std::set<std::string>& common_words,
                             const std::optional<std::string>& alphabet) {
  VariantConfig c;
  c.max_edit_distance = max_edit_distance;
  c.min_length = min_length;
  c.ops = {deletion, insertion, substitution, transposition};
  c.common_words = common_words;
  if (alphabet) {
    const auto cps = decode_utf8(*alphabet);
    c.alphabet.assign(cps.begin(), cps.end());
  }
  return c;
}

py::dict verdict_dict(const FilterVerdict& v) {
  py::dict d;
  d["lex"] = v.lex;
  d["var"] = v.var;
  d["pat"] = v.pat;
  d["weak"] = v.weak;
  return d;
}

// Bundles the loaded weak model with its scorer so lifetimes line up.
struct WeakModel {
  WeakLstm model;
  std::shared_ptr<EmbeddingTable> emb;
  std::unique_ptr<WeakScorer> scorer;
};

}  // namespace

PYBIND11_MODULE(_kusuri, m) {
  m.doc() = "Two-stage medication-mention classification for tweets";

  py::register_exception<Error>(m, "KusuriError", PyExc_ValueError);

  m.def("normalize", &normalize, py::arg("text"));
  m.def("tokenize", &token_texts, py::arg("text"), "normalize then tokenize; returns token strings");

  py::class_<Lexicon>(m, "Lexicon")
      .def(py::init([](const std::vector<std::string>& entries) { return Lexicon::from_entries(entries); }),
           py::arg("entries"))
      .def_static("load", [](const std::filesystem::path& p) {
        auto in = open_in(p);
        return load_lexicon(in, p.filename().string());
      })
      .def("__len__", &Lexicon::size)
      .def("__contains__", [](const Lexicon& l, const std::string& phrase) { return l.contains(token_texts(phrase)); })
      .def("phrases", [](const Lexicon& l) {
        std::vector<std::string> out;
        for (const auto& p : l.phrases()) out.push_back(join(p));
        return out;
      })
      .def("find", [](const Lexicon& l, const std::string& text) {
        return spans_to_py(lexicon_classify(l, Tweet::make("q", text)).spans);
      }, py::arg("text"), "every (start_token, end_token, phrase) match")
      .def("matches", [](const Lexicon& l, const std::string& text, bool plural_folding) {
        return lexicon_classify(l, Tweet::make("q", text), {plural_folding}).hit;
      }, py::arg("text"), py::arg("plural_folding") = false);

  m.def("generate_variants",
        [](const std::string& name, int max_edit_distance, std::size_t min_length, bool deletion, bool insertion,
           bool substitution, bool transposition, const std::set<std::string>& common_words,
           const std::optional<std::string>& alphabet) {
          auto v = generate_variants(name, variant_config(max_edit_distance, min_length, deletion, insertion,
                                                          substitution, transposition, common_words, alphabet));
          return std::vector<std::string>(v.begin(), v.end());
        },
        py::arg("name"), py::arg("max_edit_distance") = 1, py::arg("min_length") = 4, py::arg("deletion") = true,
        py::arg("insertion") = true, py::arg("substitution") = true, py::arg("transposition") = true,
        py::arg("common_words") = std::set<std::string>{}, py::arg("alphabet") = std::nullopt);

  m.def("build_variant_lexicon",
        [](const Lexicon& lex, int max_edit_distance, std::size_t min_length, const std::set<std::string>& common_words) {
          return build_variant_lexicon(lex, variant_config(max_edit_distance, min_length, true, true, true, true,
                                                           common_words, std::nullopt));
        },
        py::arg("lexicon"), py::arg("max_edit_distance") = 1, py::arg("min_length") = 4,
        py::arg("common_words") = std::set<std::string>{});

  py::class_<PatternSet>(m, "PatternSet")
      .def(py::init([](const std::string& source) {
        std::istringstream in(source);
        return compile_patterns(in);
      }), py::arg("source"), "one pattern per line")
      .def("__len__", &PatternSet::size)
      .def("matches", [](const PatternSet& p, const std::string& text) { return pattern_classify(p, Tweet::make("q", text)); });

  m.def("mine_context_ngrams",
        [](const std::vector<std::string>& texts, const std::vector<std::string>& seeds, std::size_t n, std::size_t top_k) {
          py::list out;
          for (const auto& r : mine_context_ngrams(corpus_of(texts), Lexicon::from_entries(seeds), n, top_k))
            out.append(py::make_tuple(r.ngram, std::string(side_name(r.side)), r.count));
          return out;
        },
        py::arg("texts"), py::arg("seeds"), py::arg("n") = 2, py::arg("top_k") = 50);

  m.def("select_candidate", [](bool lex, bool var, bool pat, bool weak) { return select_candidate({lex, var, pat, weak}); },
        py::arg("lex"), py::arg("var"), py::arg("pat"), py::arg("weak"));
  m.def("gold_label",
        [](bool lex, bool var, bool pat, bool weak) {
          return std::string(gold_label_name(gold_label_for(FilterVerdict{lex, var, pat, weak}.fired_count())));
        },
        py::arg("lex"), py::arg("var"), py::arg("pat"), py::arg("weak"));

  // evaluation
  m.def("confusion", [](const std::vector<int>& preds, const std::vector<int>& gold) {
    auto c = confusion(preds, gold);
    py::dict d;
    d["tp"] = c.tp;
    d["fp"] = c.fp;
    d["fn"] = c.fn;
    d["tn"] = c.tn;
    return d;
  }, py::arg("predictions"), py::arg("gold"));
  m.def("prf", [](std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
    auto p = prf({tp, fp, fn, tn});
    return py::make_tuple(p.precision, p.recall, p.f1);
  }, py::arg("tp"), py::arg("fp"), py::arg("fn"), py::arg("tn") = 0, "percentages (precision, recall, f1)");
  m.def("f1_from_pr", &f1_from_pr, py::arg("precision"), py::arg("recall"));
  m.def("cohen_kappa", [](const std::vector<int>& a, const std::vector<int>& b) { return cohen_kappa(a, b).kappa; });
  m.def("mcnemar", [](const std::vector<int>& a, const std::vector<int>& b, const std::vector<int>& gold) {
    auto r = mcnemar(a, b, gold);
    return py::make_tuple(r.b, r.c, r.p_value);
  }, py::arg("a"), py::arg("b"), py::arg("gold"), "(b, c, exact two-sided p)");

  m.def("gradient_check", [](const std::string& arch, std::uint64_t seed, double epsilon) {
    auto r = gradient_check(arch, seed, epsilon);
    return py::make_tuple(r.max_relative_error, r.worst_parameter, r.compared);
  }, py::arg("architecture") = kKusuriArchitecture, py::arg("seed") = 1, py::arg("epsilon") = 1e-5);

  // models and pipeline
  py::class_<EmbeddingTable, std::shared_ptr<EmbeddingTable>>(m, "Embeddings")
      .def_static("load", [](const std::filesystem::path& p) {
        auto in = open_in(p);
        return std::make_shared<EmbeddingTable>(load_embeddings(in));
      })
      .def_property_readonly("dim", [](const EmbeddingTable& t) { return t.dim; })
      .def("__len__", [](const EmbeddingTable& t) { return t.entries.size(); })
      .def("__contains__", [](const EmbeddingTable& t, const std::string& w) { return t.entries.count(w) > 0; });

  py::class_<WeakModel>(m, "WeakModel")
      .def_static("load", [](const std::filesystem::path& p, std::shared_ptr<EmbeddingTable> emb) {
        auto in = open_in(p);
        auto w = std::make_unique<WeakModel>();
        w->model = WeakLstm::from_checkpoint(Json::parse(in));
        w->emb = std::move(emb);
        w->scorer = std::make_unique<WeakScorer>(w->model, *w->emb);
        return w;
      }, py::arg("checkpoint"), py::arg("embeddings"))
      .def("probability", [](const WeakModel& w, const std::string& text) { return w.scorer->probability(Tweet::make("q", text)); });

  py::class_<Ensemble>(m, "Ensemble")
      .def_static("load", [](const std::filesystem::path& p) { return load_ensemble(p); })
      .def("__len__", &Ensemble::size)
      .def_readwrite("threshold", &Ensemble::threshold)
      .def("probability", [](const Ensemble& e, const EmbeddingTable& emb, const std::string& text) {
        return ensemble_predict(e, emb, Tweet::make("q", text));
      }, py::arg("embeddings"), py::arg("text"));

  m.def("classify",
        [](const std::vector<std::string>& texts, const Lexicon& lexicon, const Lexicon& variants,
           const PatternSet& patterns, const WeakModel& weak, const Ensemble& ensemble, const EmbeddingTable& emb,
           const std::string& mode, double weak_threshold, int threads) {
          Prefilter pf{&lexicon, &variants, &patterns, weak.scorer.get(), weak_threshold, {}};
          std::vector<Classification> rows;
          {
            py::gil_scoped_release release;
            rows = classify_corpus(corpus_of(texts), pf, ensemble, emb, mode_from_name(mode), threads);
          }
          py::list out;
          for (const auto& r : rows) {
            py::dict d = verdict_dict(r.verdict);
            d["label"] = r.label;
            d["probability"] = r.probability ? py::cast(*r.probability) : py::none();
            out.append(d);
          }
          return out;
        },
        py::arg("texts"), py::arg("lexicon"), py::arg("variants"), py::arg("patterns"), py::arg("weak"),
        py::arg("ensemble"), py::arg("embeddings"), py::arg("mode") = "full",
        py::arg("weak_threshold") = kDefaultWeakThreshold, py::arg("threads") = 1);

  m.def("run_cli",
        [](std::vector<std::string> args) {
          args.insert(args.begin(), "kusuri");
          std::vector<const char*> argv;
          for (const auto& a : args) argv.push_back(a.c_str());
          std::ostringstream out, err;
          int code;
          {
            py::gil_scoped_release release;
            code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
          }
          return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "run a kusuri subcommand in-process; returns (exit_code, stdout, stderr)");
}
