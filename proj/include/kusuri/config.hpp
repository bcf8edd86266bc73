#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kusuri/checkpoint.hpp"
#include "kusuri/error.hpp"
#include "kusuri/models.hpp"
#include "kusuri/prefilter.hpp"
#include "kusuri/variants.hpp"

namespace kusuri {

// Anything wrong with the configuration itself (exit code 2 in the CLI).
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct EnsembleConfig {
  int k = 9;
  std::vector<std::uint64_t> seeds;  // empty -> 1..K
  double threshold = 0.5;

  std::vector<std::uint64_t> resolved_seeds() const;
};

// Known keys under "paths". Relative paths resolve against base_dir.
inline constexpr std::string_view kPathKeys[] = {
    "lexicon", "common_words", "patterns", "seeds", "embeddings",
    "variants", "weak_checkpoint", "ensemble", "output_dir",
};

struct RunConfig {
  std::map<std::string, std::string> paths;
  std::filesystem::path base_dir = ".";
  TrainConfig train;
  TrainConfig weak_train;
  EnsembleConfig ensemble;
  double weak_threshold = kDefaultWeakThreshold;
  VariantConfig variants;  // common_words filled from paths at load time
  MatchOptions match;

  // Absolute or base_dir-relative path for a key; ConfigError if unset.
  std::filesystem::path path(std::string_view key) const;
  bool has_path(std::string_view key) const;

  // Every listed key must be set and name an existing file (or directory
  // for output_dir, which is created if its parent exists).
  void require(std::initializer_list<std::string_view> keys) const;
  void validate() const;

  // Canonical form used for hashing; paths appear as written.
  Json to_json() const;
  std::string hash() const;
};

RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir = ".");
RunConfig load_run_config(const std::filesystem::path& file);

Json to_json(const VariantConfig& c);
VariantConfig variant_config_from_json(const Json& j, VariantConfig base = {});

}  // namespace kusuri
