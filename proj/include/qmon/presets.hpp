#pragma once

#include <string>
#include <vector>

#include "qmon/config.hpp"

namespace qmon {

struct PresetInfo {
    std::string name;
    std::string description;
};

std::vector<PresetInfo> list_presets();
/// Throws std::out_of_range for an unknown name.
ScenarioConfig preset(const std::string& name);

}  // namespace qmon
