#pragma once

#include <nlohmann/json.hpp>

namespace flowmap {
using json = nlohmann::ordered_json;
}
