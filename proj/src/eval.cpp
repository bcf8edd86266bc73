#include "kusuri/eval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <boost/math/distributions/binomial.hpp>

#include "kusuri/error.hpp"

namespace kusuri {

namespace {

void check_binary(int v) {
  if (v != 0 && v != 1) throw Error("labels must be 0 or 1");
}

void tally(ConfusionCounts& c, int pred, int gold) {
  check_binary(pred);
  check_binary(gold);
  if (pred && gold) ++c.tp;
  else if (pred) ++c.fp;
  else if (gold) ++c.fn;
  else ++c.tn;
}

}  // namespace

ConfusionCounts confusion(const std::vector<IdLabel>& predictions, const std::vector<IdLabel>& gold) {
  if (predictions.size() != gold.size())
    throw Error("prediction count " + std::to_string(predictions.size()) + " != gold count " +
                std::to_string(gold.size()));
  ConfusionCounts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (predictions[i].id != gold[i].id)
      throw Error("id mismatch at position " + std::to_string(i) + ": '" + predictions[i].id +
                  "' vs '" + gold[i].id + "'");
    tally(c, predictions[i].label, gold[i].label);
  }
  return c;
}

ConfusionCounts confusion(const std::vector<int>& predictions, const std::vector<int>& gold) {
  if (predictions.size() != gold.size()) throw Error("prediction and gold lengths differ");
  ConfusionCounts c;
  for (std::size_t i = 0; i < gold.size(); ++i) tally(c, predictions[i], gold[i]);
  return c;
}

double f1_from_pr(double precision, double recall) {
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

PrfMetrics prf(const ConfusionCounts& c) {
  PrfMetrics m;
  if (c.tp + c.fp > 0) m.precision = 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  m.f1 = f1_from_pr(m.precision, m.recall);
  return m;
}

KappaResult cohen_kappa(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw Error("kappa: label vectors differ in length");
  if (a.empty()) throw Error("kappa: empty label vectors");
  double agree = 0, a1 = 0, b1 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    check_binary(a[i]);
    check_binary(b[i]);
    agree += (a[i] == b[i]);
    a1 += a[i];
    b1 += b[i];
  }
  const double n = static_cast<double>(a.size());
  KappaResult r;
  r.observed = agree / n;
  const double pa = a1 / n, pb = b1 / n;
  r.expected = pa * pb + (1 - pa) * (1 - pb);
  r.kappa = r.expected >= 1.0 ? 1.0 : (r.observed - r.expected) / (1.0 - r.expected);
  return r;
}

McNemarResult mcnemar(const std::vector<int>& preds_a, const std::vector<int>& preds_b,
                      const std::vector<int>& gold) {
  if (preds_a.size() != gold.size() || preds_b.size() != gold.size())
    throw Error("mcnemar: vectors differ in length");
  McNemarResult r;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    check_binary(preds_a[i]);
    check_binary(preds_b[i]);
    check_binary(gold[i]);
    const bool a_ok = preds_a[i] == gold[i];
    const bool b_ok = preds_b[i] == gold[i];
    if (a_ok && !b_ok) ++r.b;
    if (!a_ok && b_ok) ++r.c;
  }
  const std::size_t n = r.b + r.c;
  if (n == 0) {
    r.p_value = 1.0;
    return r;
  }
  boost::math::binomial_distribution<double> dist(static_cast<double>(n), 0.5);
  const double tail = boost::math::cdf(dist, static_cast<double>(std::min(r.b, r.c)));
  r.p_value = std::min(1.0, 2.0 * tail);
  return r;
}

ErrorReport error_report(const std::vector<Classification>& predictions,
                         const std::vector<IdLabel>& gold, const Corpus& corpus) {
  std::unordered_map<std::string, const Tweet*> by_id;
  for (const auto& e : corpus.items) by_id.emplace(e.tweet.id, &e.tweet);
  std::unordered_map<std::string, int> gold_by_id;
  for (const auto& g : gold) gold_by_id.emplace(g.id, g.label);

  ErrorReport r;
  for (const auto& p : predictions) {
    auto g = gold_by_id.find(p.id);
    if (g == gold_by_id.end() || p.label == g->second) continue;
    auto t = by_id.find(p.id);
    ErrorItem item{p.id, t == by_id.end() ? std::string() : t->second->raw, p.verdict, p.probability};
    (p.label ? r.false_positives : r.false_negatives).push_back(std::move(item));
  }
  return r;
}

std::vector<IdLabel> gold_labels(const Corpus& corpus) {
  std::vector<IdLabel> out;
  out.reserve(corpus.size());
  for (const auto& e : corpus.items) {
    if (!e.label) throw Error("gold tweet '" + e.tweet.id + "' has no label");
    out.push_back({e.tweet.id, *e.label});
  }
  return out;
}

std::vector<IdLabel> predicted_labels(const std::vector<Classification>& rows) {
  std::vector<IdLabel> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({r.id, r.label});
  return out;
}

double round1(double x) { return std::round(x * 10.0) / 10.0; }

Json metrics_report(const ConfusionCounts& counts) {
  const PrfMetrics m = prf(counts);
  Json j;
  j["tp"] = counts.tp;
  j["fp"] = counts.fp;
  j["fn"] = counts.fn;
  j["tn"] = counts.tn;
  j["precision"] = round1(m.precision);
  j["recall"] = round1(m.recall);
  j["f1"] = round1(m.f1);
  return j;
}

Json comparison_report(const McNemarResult& r) {
  Json j;
  j["b"] = r.b;
  j["c"] = r.c;
  j["p_value"] = r.p_value;
  return j;
}

Json to_json(const ErrorReport& r) {
  auto items = [](const std::vector<ErrorItem>& v) {
    Json a = Json::array();
    for (const auto& e : v) {
      Json j;
      j["id"] = e.id;
      j["text"] = e.text;
      j["probability"] = e.probability ? Json(*e.probability) : Json(nullptr);
      j["lex"] = e.verdict.lex;
      j["var"] = e.verdict.var;
      j["pat"] = e.verdict.pat;
      j["weak"] = e.verdict.weak;
      a.push_back(std::move(j));
    }
    return a;
  };
  Json j;
  j["false_positives"] = items(r.false_positives);
  j["false_negatives"] = items(r.false_negatives);
  return j;
}

}  // namespace kusuri
