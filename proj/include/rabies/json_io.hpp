#pragma once

#include <json.hpp>

#include "rabies/model.hpp"

namespace rabies {

/// Flat object keyed by parameter symbol ("theta1", "rho2", ...).
nlohmann::json to_json(const ParamSet& p);

/// Reads a flat parameter object. Missing keys keep the value from `fallback`;
/// unknown keys and non-numeric values raise ConfigError. The result is validated.
ParamSet params_from_json(const nlohmann::json& j, const ParamSet& fallback = ParamSet::estimated());

nlohmann::json to_json(const StateVec& y);
/// Keys are compartment names; missing ones keep the value from `fallback`.
StateVec state_from_json(const nlohmann::json& j, const StateVec& fallback);

nlohmann::json to_json(const ControlConst& u);
ControlConst controls_from_json(const nlohmann::json& j, const ControlConst& fallback = {});

} // namespace rabies
