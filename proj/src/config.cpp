#include "kusuri/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "kusuri/text.hpp"

namespace kusuri {

namespace fs = std::filesystem;

std::vector<std::uint64_t> EnsembleConfig::resolved_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out;
  for (int i = 1; i <= k; ++i) out.push_back(static_cast<std::uint64_t>(i));
  return out;
}

fs::path RunConfig::path(std::string_view key) const {
  auto it = paths.find(std::string(key));
  if (it == paths.end() || it->second.empty())
    throw ConfigError("config path '" + std::string(key) + "' is not set");
  fs::path p(it->second);
  return p.is_absolute() ? p : base_dir / p;
}

bool RunConfig::has_path(std::string_view key) const {
  auto it = paths.find(std::string(key));
  return it != paths.end() && !it->second.empty();
}

void RunConfig::require(std::initializer_list<std::string_view> keys) const {
  for (auto key : keys) {
    const fs::path p = path(key);
    std::error_code ec;
    if (key == "output_dir") {
      if (fs::is_directory(p, ec)) continue;
      const fs::path parent = p.has_parent_path() ? p.parent_path() : fs::path(".");
      if (!fs::is_directory(parent, ec))
        throw ConfigError("output_dir parent does not exist: " + parent.string());
      continue;
    }
    if (!fs::is_regular_file(p, ec))
      throw ConfigError("config path '" + std::string(key) + "' does not exist: " + p.string());
  }
}

void RunConfig::validate() const {
  try {
    train.validate();
    weak_train.validate();
    variants.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (ensemble.k < 1) throw ConfigError("ensemble K must be >= 1");
  if (!ensemble.seeds.empty()) {
    if (ensemble.seeds.size() != static_cast<std::size_t>(ensemble.k))
      throw ConfigError("ensemble seeds must list exactly K values");
    if (std::set<std::uint64_t>(ensemble.seeds.begin(), ensemble.seeds.end()).size() != ensemble.seeds.size())
      throw ConfigError("ensemble seeds must be pairwise distinct");
  }
  if (!(ensemble.threshold > 0.0 && ensemble.threshold < 1.0))
    throw ConfigError("ensemble threshold must be in (0, 1)");
  if (!(weak_threshold > 0.0 && weak_threshold < 1.0))
    throw ConfigError("weak_threshold must be in (0, 1)");
}

Json to_json(const VariantConfig& c) {
  Json j;
  j["max_edit_distance"] = c.max_edit_distance;
  j["min_length"] = c.min_length;
  j["ops"] = {{"deletion", c.ops.deletion},
              {"insertion", c.ops.insertion},
              {"substitution", c.ops.substitution},
              {"transposition", c.ops.transposition}};
  j["alphabet"] = encode_utf8(c.alphabet);
  return j;
}

VariantConfig variant_config_from_json(const Json& j, VariantConfig c) {
  if (!j.is_object()) throw ConfigError("variants block must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "max_edit_distance") c.max_edit_distance = it->get<int>();
    else if (k == "min_length") c.min_length = it->get<std::size_t>();
    else if (k == "alphabet") {
      const auto cps = decode_utf8(it->get<std::string>());
      c.alphabet.assign(cps.begin(), cps.end());
    } else if (k == "ops") {
      if (!it->is_object()) throw ConfigError("variants.ops must be an object");
      for (auto op = it->begin(); op != it->end(); ++op) {
        const bool v = op->get<bool>();
        if (op.key() == "deletion") c.ops.deletion = v;
        else if (op.key() == "insertion") c.ops.insertion = v;
        else if (op.key() == "substitution") c.ops.substitution = v;
        else if (op.key() == "transposition") c.ops.transposition = v;
        else throw ConfigError("unknown edit operation '" + op.key() + "'");
      }
    } else {
      throw ConfigError("unknown variants key '" + k + "'");
    }
  }
  return c;
}

Json RunConfig::to_json() const {
  Json j;
  Json p = Json::object();
  for (const auto& [k, v] : paths) p[k] = v;  // std::map: sorted keys
  j["paths"] = p;
  j["train"] = kusuri::to_json(train);
  j["weak_train"] = kusuri::to_json(weak_train);
  j["ensemble"] = {{"K", ensemble.k}, {"seeds", ensemble.resolved_seeds()}, {"threshold", ensemble.threshold}};
  j["weak_threshold"] = weak_threshold;
  j["variants"] = kusuri::to_json(variants);
  j["match"] = {{"plural_folding", match.plural_folding}};
  return j;
}

std::string RunConfig::hash() const { return config_hash(to_json()); }

RunConfig run_config_from_json(const Json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  c.base_dir = base_dir;
  try {
    bool weak_set = false;
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      if (k == "paths") {
        if (!it->is_object()) throw ConfigError("paths must be an object");
        for (auto p = it->begin(); p != it->end(); ++p) {
          if (std::find(std::begin(kPathKeys), std::end(kPathKeys), p.key()) == std::end(kPathKeys))
            throw ConfigError("unknown path key '" + p.key() + "'");
          c.paths[p.key()] = p->get<std::string>();
        }
      } else if (k == "train") {
        c.train = train_config_from_json(*it);
      } else if (k == "weak_train") {
        c.weak_train = train_config_from_json(*it);
        weak_set = true;
      } else if (k == "ensemble") {
        if (!it->is_object()) throw ConfigError("ensemble must be an object");
        for (auto e = it->begin(); e != it->end(); ++e) {
          if (e.key() == "K") c.ensemble.k = e->get<int>();
          else if (e.key() == "seeds") c.ensemble.seeds = e->get<std::vector<std::uint64_t>>();
          else if (e.key() == "threshold") c.ensemble.threshold = e->get<double>();
          else throw ConfigError("unknown ensemble key '" + e.key() + "'");
        }
        if (!it->contains("K") && !c.ensemble.seeds.empty())
          c.ensemble.k = static_cast<int>(c.ensemble.seeds.size());
      } else if (k == "weak_threshold") {
        c.weak_threshold = it->get<double>();
      } else if (k == "variants") {
        c.variants = variant_config_from_json(*it);
      } else if (k == "match") {
        c.match.plural_folding = it->value("plural_folding", false);
      } else {
        throw ConfigError("unknown config key '" + k + "'");
      }
    }
    if (!weak_set) c.weak_train = c.train;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config " + file.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return run_config_from_json(j, file.has_parent_path() ? file.parent_path() : fs::path("."));
}

}  // namespace kusuri
