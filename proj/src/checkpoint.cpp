#include "kusuri/checkpoint.hpp"

#include <cstdint>
#include <cstdio>

namespace kusuri {

Json to_json(const nn::Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json to_json(const nn::Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

double number(const Json& x, const std::string& name) {
  if (!x.is_number()) throw Error("parameter '" + name + "' holds a non-number");
  return x.get<double>();
}

}  // namespace

void from_json(const Json& j, nn::Vec& v, const std::string& name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != v.size())
    throw Error("parameter '" + name + "' has the wrong shape");
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = number(j[static_cast<std::size_t>(i)], name);
}

void from_json(const Json& j, nn::Mat& m, const std::string& name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != m.rows())
    throw Error("parameter '" + name + "' has the wrong shape");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m.cols())
      throw Error("parameter '" + name + "' has the wrong shape");
    for (Eigen::Index k = 0; k < m.cols(); ++k) m(i, k) = number(row[static_cast<std::size_t>(k)], name);
  }
}

std::string config_hash(const Json& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace kusuri
