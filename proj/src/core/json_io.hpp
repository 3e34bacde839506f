#pragma once

#include <string>

#include "json.hpp"
#include "kls/error.hpp"
#include "kls/grid.hpp"

namespace kls {

inline nlohmann::json parse_json(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invalid_argument, std::string("malformed json: ") + e.what());
  }
}

// nlohmann prints doubles with max_digits10, so values round-trip.
inline std::string dump_json(const nlohmann::json& j) { return j.dump(2); }

nlohmann::json grid_to_json_value(const Grid& grid);
Grid grid_from_json_value(const nlohmann::json& j);

}  // namespace kls
