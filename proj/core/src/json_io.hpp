#pragma once

// nlohmann/json bindings for the configuration structs. Private to the core library.

#include <initializer_list>
#include <string>
#include <string_view>

#include "json.hpp"
#include "scanet/arch/config.hpp"

namespace scanet {

using json = nlohmann::json;

namespace jsonio {
/// Throws std::invalid_argument naming the first key of `j` not in `allowed`.
void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed,
                    std::string_view where);
}  // namespace jsonio

namespace cam {
void to_json(json& j, const CamConfig& c);
/// Overrides only the keys present in `j`.
void from_json(const json& j, CamConfig& c);
}  // namespace cam

namespace arch {
void to_json(json& j, const NetworkConfig& c);
void from_json(const json& j, NetworkConfig& c);
}  // namespace arch

}  // namespace scanet
