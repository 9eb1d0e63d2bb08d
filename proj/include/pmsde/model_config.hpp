#pragma once

#include <optional>

#include <nlohmann/json_fwd.hpp>

#include "pmsde/ou_analytic.hpp"
#include "pmsde/sde_model.hpp"

namespace pmsde {

/// Model parsed from a config document. OU configs also expose the analytic
/// object; every kind exposes the simulation view.
struct ParsedModel {
    SdeModel sde;
    std::optional<OuModel> ou;
};

/// Accepts kinds: "ou", "duffing", "polynomial", "langevin".
/// Unknown keys anywhere in the document are rejected.
ParsedModel parse_model_config(const nlohmann::json& j);

TrigPoly parse_trig_poly(const nlohmann::json& j, double period);

} // namespace pmsde
