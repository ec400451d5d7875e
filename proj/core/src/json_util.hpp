#pragma once

// Path-aware accessors for strict JSON parsing. Errors carry a JSON-pointer
// style path such as "/bodies/2/motion/velocity".

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "momap/momap.hpp"

namespace momap::detail {

using nlohmann::json;

[[noreturn]] void json_fail(const std::string& path, const std::string& what);

const json& require_object(const json& j, const std::string& path);
const json& require_field(const json& obj, const std::string& key,
                          const std::string& path);

double as_number(const json& j, const std::string& path);
std::uint64_t as_unsigned(const json& j, const std::string& path);
bool as_bool(const json& j, const std::string& path);
std::string as_string(const json& j, const std::string& path);
Vec3 as_vec3(const json& j, const std::string& path);

double number_or(const json& obj, const std::string& key, const std::string& path,
                 double fallback);
std::uint64_t unsigned_or(const json& obj, const std::string& key,
                          const std::string& path, std::uint64_t fallback);

/// Fails on keys outside `allowed`.
void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& path);

json vec3_json(const Vec3& v);

}  // namespace momap::detail
