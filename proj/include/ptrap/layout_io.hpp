#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "ptrap/geometry.hpp"

namespace ptrap {

// Layout file schema:
//
//   {
//     "unit": "um",                      // required, only "um" accepted
//     "ground_plane": true,              // optional, default true
//     "min_gap_um": 5.0,                 // optional, default 0
//     "electrodes": [
//       {"name": "RF_A", "role": "rf",   // role: "rf" | "control" | "ground"
//        "polygons": [[[x, y], [x, y], [x, y], ...], ...]}
//     ]
//   }
//
// Unknown keys and unknown roles are rejected with ParseError.
TrapLayout layout_from_json(const nlohmann::json& j);
nlohmann::json layout_to_json(const TrapLayout& layout);

TrapLayout load_layout(const std::filesystem::path& path);

}  // namespace ptrap
