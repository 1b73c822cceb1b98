#include "rabies/json_io.hpp"

#include <string>

#include "rabies/errors.hpp"

namespace rabies {

namespace {

double number_or_throw(const nlohmann::json& v, const std::string& key)
{
    if (!v.is_number()) throw ConfigError("value for '" + key + "' must be a number");
    return v.get<double>();
}

void require_object(const nlohmann::json& j, const char* what)
{
    if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
}

} // namespace

nlohmann::json to_json(const ParamSet& p)
{
    nlohmann::json j = nlohmann::json::object();
    for (auto name : ParamSet::names()) j[std::string(name)] = p.get(name);
    return j;
}

ParamSet params_from_json(const nlohmann::json& j, const ParamSet& fallback)
{
    require_object(j, "parameters");
    ParamSet p = fallback;
    for (const auto& [key, value] : j.items()) {
        if (!ParamSet::has(key)) throw ConfigError("unknown parameter '" + key + "'");
        p.set(key, number_or_throw(value, key));
    }
    p.validate();
    return p;
}

nlohmann::json to_json(const StateVec& y)
{
    nlohmann::json j = nlohmann::json::object();
    for (int i = 0; i < kNumStates; ++i) j[std::string(compartment_names()[static_cast<std::size_t>(i)])] = y[i];
    return j;
}

StateVec state_from_json(const nlohmann::json& j, const StateVec& fallback)
{
    require_object(j, "initial state");
    StateVec y = fallback;
    for (const auto& [key, value] : j.items()) y[compartment_index(key)] = number_or_throw(value, key);
    validate_state(y);
    return y;
}

nlohmann::json to_json(const ControlConst& u)
{
    return {{"u1", u[0]}, {"u2", u[1]}, {"u3", u[2]}, {"u4", u[3]}};
}

ControlConst controls_from_json(const nlohmann::json& j, const ControlConst& fallback)
{
    require_object(j, "controls");
    ControlConst u = fallback;
    for (const auto& [key, value] : j.items()) {
        if (key.size() != 2 || key[0] != 'u' || key[1] < '1' || key[1] > '4') {
            throw ConfigError("unknown control '" + key + "' (expected u1..u4)");
        }
        u[key[1] - '1'] = number_or_throw(value, key);
    }
    u.validate();
    return u;
}

} // namespace rabies
