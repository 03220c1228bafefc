#pragma once

#include <json.hpp>

#include "nvi/agent.hpp"

namespace nvi {

// Net checkpoints: shape header, row-major parameter arrays, active-entry
// index lists for the sparse family.
nlohmann::json net_to_json(const QEntry& entry);
QEntry net_from_json(const nlohmann::json& doc);

nlohmann::json qstack_to_json(const QStack& stack);
QStack qstack_from_json(const nlohmann::json& doc);

}  // namespace nvi
