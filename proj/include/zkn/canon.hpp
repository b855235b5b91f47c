#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <string>
#include <vector>

#include "zkn/errors.hpp"

namespace zkn {

// nlohmann::json with the default (std::map) object type: keys come out
// lexicographically sorted, and dump() emits no insignificant whitespace.
// That pair of properties is the canonical form everything hashes.
using Json = nlohmann::json;

inline std::string canonical_dump(const Json& j) {
    return j.dump();
}

inline Json parse_json(std::string_view text) {
    Json j = Json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("malformed JSON");
    return j;
}

// Exact field-set check: unknown or missing keys are schema violations.
inline void require_fields(const Json& j, const std::vector<std::string>& names) {
    if (!j.is_object()) throw ParseError("expected JSON object");
    for (const auto& n : names)
        if (!j.contains(n)) throw ParseError("missing field: " + n);
    if (j.size() != names.size())
        for (auto it = j.begin(); it != j.end(); ++it)
            if (std::find(names.begin(), names.end(), it.key()) == names.end())
                throw ParseError("unexpected field: " + it.key());
}

inline const Json& field(const Json& j, const std::string& name) {
    if (!j.is_object() || !j.contains(name))
        throw ParseError("missing field: " + name);
    return j.at(name);
}

inline std::uint64_t get_u64(const Json& j, const std::string& name) {
    const Json& v = field(j, name);
    if (!v.is_number_unsigned()) throw ParseError(name + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

inline std::string get_string(const Json& j, const std::string& name) {
    const Json& v = field(j, name);
    if (!v.is_string()) throw ParseError(name + " must be a string");
    return v.get<std::string>();
}

inline bool get_bool(const Json& j, const std::string& name) {
    const Json& v = field(j, name);
    if (!v.is_boolean()) throw ParseError(name + " must be a boolean");
    return v.get<bool>();
}

}  // namespace zkn
