#include <algorithm>
#include <cmath>

#include "json_util.hpp"
#include "momap/error.hpp"

namespace momap::detail {

void json_fail(const std::string& path, const std::string& what) {
  throw ParseError((path.empty() ? std::string("/") : path) + ": " + what);
}

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) json_fail(path, "expected an object");
  return j;
}

const json& require_field(const json& obj, const std::string& key,
                          const std::string& path) {
  require_object(obj, path);
  auto it = obj.find(key);
  if (it == obj.end()) json_fail(path + "/" + key, "missing required field");
  return *it;
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) json_fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) json_fail(path, "expected a finite number");
  return v;
}

std::uint64_t as_unsigned(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  json_fail(path, "expected a non-negative integer");
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) json_fail(path, "expected a boolean");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) json_fail(path, "expected a string");
  return j.get<std::string>();
}

Vec3 as_vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) json_fail(path, "expected an array of 3 numbers");
  return {as_number(j[0], path + "/0"), as_number(j[1], path + "/1"),
          as_number(j[2], path + "/2")};
}

double number_or(const json& obj, const std::string& key, const std::string& path,
                 double fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : as_number(*it, path + "/" + key);
}

std::uint64_t unsigned_or(const json& obj, const std::string& key,
                          const std::string& path, std::uint64_t fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : as_unsigned(*it, path + "/" + key);
}

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      json_fail(path + "/" + it.key(), "unknown field");
    }
  }
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace momap::detail
