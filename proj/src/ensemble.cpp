#include "kusuri/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "kusuri/error.hpp"

namespace kusuri {

void Ensemble::validate() const {
  if (members.empty()) throw Error("ensemble has no members");
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error("ensemble threshold must be in (0, 1)");
}

Ensemble train_ensemble(const std::vector<LabeledTweet>& data, const EmbeddingTable& emb,
                        const TrainConfig& config, const std::vector<std::uint64_t>& seeds,
                        double threshold, int threads,
                        std::vector<TrainResult<KusuriDnn>>* results) {
  if (seeds.empty()) throw Error("ensemble needs at least one seed");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw Error("ensemble seeds must be pairwise distinct");
  config.validate();

  std::vector<std::optional<TrainResult<KusuriDnn>>> trained(seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < seeds.size();) {
      try {
        TrainConfig c = config;
        c.rng_seed = seeds[i];
        trained[i] = train_kusuri(data, emb, c);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto n_workers = static_cast<std::size_t>(std::clamp<int>(threads, 1, static_cast<int>(seeds.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  Ensemble e;
  e.threshold = threshold;
  for (auto& r : trained) {
    e.members.push_back(r->model);
    if (results) results->push_back(std::move(*r));
  }
  e.validate();
  return e;
}

double mean_probability(const std::vector<double>& probs) {
  if (probs.empty()) throw Error("no member probabilities");
  double s = 0.0;
  for (double p : probs) s += p;
  return s / static_cast<double>(probs.size());
}

double weighted_probability(const std::vector<double>& probs, const std::vector<double>& weights) {
  if (weights.size() != probs.size()) throw Error("one weight per member is required");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error("soft-vote weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("soft-vote weights must sum to 1");
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) s += weights[i] * probs[i];
  return s;
}

std::vector<double> member_probabilities(const Ensemble& ensemble, const EmbeddingTable& emb,
                                         const Tweet& tweet, std::vector<CharEncodingCache>* caches) {
  ensemble.validate();
  if (caches && caches->size() != ensemble.size()) caches->resize(ensemble.size());
  std::vector<double> probs;
  probs.reserve(ensemble.size());
  for (std::size_t i = 0; i < ensemble.size(); ++i)
    probs.push_back(ensemble.members[i].predict(emb, tweet, caches ? &(*caches)[i] : nullptr));
  return probs;
}

double ensemble_predict(const Ensemble& ensemble, const EmbeddingTable& emb, const Tweet& tweet,
                        std::vector<CharEncodingCache>* caches) {
  return mean_probability(member_probabilities(ensemble, emb, tweet, caches));
}

double soft_vote_predict(const Ensemble& ensemble, const EmbeddingTable& emb, const Tweet& tweet,
                         const std::vector<double>& weights) {
  auto probs = member_probabilities(ensemble, emb, tweet);
  if (weights.empty()) return mean_probability(probs);
  return weighted_probability(probs, weights);
}

int decide(double probability, double threshold) { return probability >= threshold ? 1 : 0; }

Json to_json(const EnsembleManifest& m) {
  Json j;
  j["format"] = "kusuri-ensemble";
  j["version"] = 1;
  j["K"] = m.member_paths.size();
  j["threshold"] = m.threshold;
  j["members"] = m.member_paths;
  j["embeddings"] = m.embeddings;
  j["config_hash"] = m.config_hash;
  return j;
}

EnsembleManifest manifest_from_json(const Json& j) {
  if (!j.is_object() || j.value("format", "") != "kusuri-ensemble")
    throw Error("not a kusuri ensemble manifest");
  EnsembleManifest m;
  m.member_paths = j.at("members").get<std::vector<std::string>>();
  m.threshold = j.at("threshold").get<double>();
  m.embeddings = j.value("embeddings", "");
  m.config_hash = j.value("config_hash", "");
  if (j.contains("K") && j["K"].get<std::size_t>() != m.member_paths.size())
    throw Error("manifest K does not match the member list");
  return m;
}

Ensemble load_ensemble(const std::filesystem::path& manifest_path, EnsembleManifest* out) {
  std::ifstream in(manifest_path);
  if (!in) throw Error("cannot open ensemble manifest " + manifest_path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed ensemble manifest: " + std::string(e.what()));
  }
  EnsembleManifest m = manifest_from_json(j);
  Ensemble e;
  e.threshold = m.threshold;
  for (const auto& p : m.member_paths) {
    std::filesystem::path full = manifest_path.parent_path() / p;
    std::ifstream min(full);
    if (!min) throw Error("cannot open ensemble member " + full.string());
    try {
      e.members.push_back(KusuriDnn::from_checkpoint(Json::parse(min)));
    } catch (const nlohmann::json::exception& ex) {
      throw Error("malformed checkpoint " + full.string() + ": " + ex.what());
    }
  }
  e.validate();
  if (out) *out = std::move(m);
  return e;
}

}  // namespace kusuri
