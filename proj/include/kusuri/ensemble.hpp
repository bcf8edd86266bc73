#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kusuri/models.hpp"

namespace kusuri {

inline constexpr int kDefaultEnsembleSize = 9;
inline constexpr double kDefaultThreshold = 0.5;

struct Ensemble {
  std::vector<KusuriDnn> members;
  double threshold = kDefaultThreshold;

  std::size_t size() const { return members.size(); }
  void validate() const;
};

// Member i is trained with rng_seed = seeds[i]. Seeds must be distinct.
// Members train on up to `threads` workers; results do not depend on it.
Ensemble train_ensemble(const std::vector<LabeledTweet>& data, const EmbeddingTable& emb,
                        const TrainConfig& config, const std::vector<std::uint64_t>& seeds,
                        double threshold = kDefaultThreshold, int threads = 1,
                        std::vector<TrainResult<KusuriDnn>>* results = nullptr);

double mean_probability(const std::vector<double>& member_probabilities);
// Weights must be non-negative and sum to 1 within 1e-9.
double weighted_probability(const std::vector<double>& member_probabilities,
                            const std::vector<double>& weights);

std::vector<double> member_probabilities(const Ensemble& ensemble, const EmbeddingTable& emb,
                                         const Tweet& tweet,
                                         std::vector<CharEncodingCache>* caches = nullptr);

// Arithmetic mean of member probabilities.
double ensemble_predict(const Ensemble& ensemble, const EmbeddingTable& emb, const Tweet& tweet,
                        std::vector<CharEncodingCache>* caches = nullptr);

// Weighted mean; an empty weight vector means uniform weights.
double soft_vote_predict(const Ensemble& ensemble, const EmbeddingTable& emb, const Tweet& tweet,
                         const std::vector<double>& weights = {});

// Positive iff probability >= threshold.
int decide(double probability, double threshold);

// Manifest: {format, K, threshold, members: [paths], embeddings, config_hash}.
struct EnsembleManifest {
  std::vector<std::string> member_paths;
  double threshold = kDefaultThreshold;
  std::string embeddings;
  std::string config_hash;
};

Json to_json(const EnsembleManifest& m);
EnsembleManifest manifest_from_json(const Json& j);

// Member paths are resolved relative to the manifest's directory.
Ensemble load_ensemble(const std::filesystem::path& manifest_path, EnsembleManifest* manifest = nullptr);

}  // namespace kusuri
