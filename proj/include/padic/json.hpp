#pragma once

#include <json.hpp>

#include "padic/core.hpp"

namespace padic {

// {"p":3,"u":0,"digits":[1,2,0]}
inline void to_json(nlohmann::json& j, const PAdic& x) {
  j = nlohmann::json{{"p", x.prime()}, {"u", x.base_exp()}, {"digits", x.digits()}};
}

inline void from_json(const nlohmann::json& j, PAdic& x) {
  if (!j.is_object() || !j.contains("p") || !j.contains("u") || !j.contains("digits"))
    throw Error(Errc::ParseError, "PAdic JSON needs p, u, digits");
  x = PAdic::from_digits(j.at("p").get<std::uint32_t>(), j.at("u").get<int>(), j.at("digits").get<std::vector<int>>());
}

inline void to_json(nlohmann::json& j, const NormValue& v) { j = v.str(); }

}  // namespace padic
