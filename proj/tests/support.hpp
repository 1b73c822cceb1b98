#pragma once

#include <cmath>
#include <random>

#include "rabies/model.hpp"

namespace rabies::testing {

/// Every parameter scaled by an independent factor in [1 - spread, 1 + spread].
inline ParamSet jittered(const ParamSet& base, std::mt19937_64& rng, double spread = 0.25)
{
    std::uniform_real_distribution<double> f(1.0 - spread, 1.0 + spread);
    ParamSet p = base;
    for (auto name : ParamSet::names()) p.set(name, p.get(name) * f(rng));
    return p;
}

inline ControlConst random_controls(std::mt19937_64& rng, double hi = 1.0)
{
    std::uniform_real_distribution<double> d(0.0, hi);
    ControlConst u;
    for (int j = 0; j < kNumControls; ++j) u[j] = d(rng);
    return u;
}

/// Positive state of realistic magnitude.
inline StateVec random_state(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> d(0.1, 1.0);
    StateVec y;
    const double scale[kNumStates] = {1e5, 1e3, 1e3, 1e3, 1e4, 1e2, 1e2, 1e4, 1e2, 1e2, 1e2, 1e2};
    for (int c = 0; c < kNumStates; ++c) y[c] = scale[c] * d(rng);
    return y;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1e-300, std::abs(a), std::abs(b)}); }

} // namespace rabies::testing
