#pragma once

#include <string>

#include <json.hpp>

#include "kusuri/error.hpp"
#include "kusuri/nn.hpp"

namespace kusuri {

using Json = nlohmann::ordered_json;

inline constexpr const char* kCheckpointFormat = "kusuri-checkpoint";
inline constexpr int kCheckpointVersion = 1;

// Vectors as flat lists, matrices as lists of rows. Doubles are written in
// shortest round-trip form, so loading reproduces every bit.
Json to_json(const nn::Vec& v);
Json to_json(const nn::Mat& m);
void from_json(const Json& j, nn::Vec& v, const std::string& name);
void from_json(const Json& j, nn::Mat& m, const std::string& name);

template <class P>
Json parameters_to_json(const P& params) {
  Json out = Json::object();
  params.for_each([&](const std::string& name, const auto& t) { out[name] = to_json(t); });
  return out;
}

// `params` must already carry the expected shapes; mismatches are errors.
template <class P>
void parameters_from_json(const Json& j, P& params) {
  if (!j.is_object()) throw Error("checkpoint parameters must be an object");
  params.for_each([&](const std::string& name, auto& t) {
    auto it = j.find(name);
    if (it == j.end()) throw Error("checkpoint is missing parameter '" + name + "'");
    from_json(*it, t, name);
  });
}

// Config hashing for provenance: FNV-1a 64 over the canonical dump.
std::string config_hash(const Json& config);

}  // namespace kusuri
