#pragma once

// Fixed-step classical Runge-Kutta integration on a uniform grid, forward for
// the state system and backward for adjoint systems.

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "rabies/model.hpp"

namespace rabies {

struct TimeGrid {
    double t0 = 0.0;
    double tf = 20.0;
    int n_steps = 2000;

    double step() const { return (tf - t0) / n_steps; }
    double time(int i) const { return i == n_steps ? tf : t0 + i * step(); }
    int nodes() const { return n_steps + 1; }
    /// Node index closest to t; throws ConfigError if t is outside [t0, tf].
    int index_of(double t) const;

    void validate() const;
    bool operator==(const TimeGrid&) const = default;
};

/// Which of u1..u4 are active.
using ControlMask = std::array<bool, kNumControls>;

inline constexpr ControlMask kAllControls{true, true, true, true};
inline constexpr ControlMask kNoControls{false, false, false, false};

/// Per-node control values on a grid. Masked-off controls are identically zero.
struct ControlPath {
    TimeGrid grid;
    std::vector<ControlConst> values;
    ControlMask mask = kAllControls;

    /// Same constant value at every node; masked-off entries are zeroed.
    static ControlPath constant(const TimeGrid& grid, const ControlConst& u, const ControlMask& mask = kAllControls);
    static ControlPath zero(const TimeGrid& grid) { return constant(grid, {}, kNoControls); }

    /// Average of nodes i and i+1, used at RK4 half steps.
    ControlConst midpoint(int i) const;
    void validate() const;
};

/// Per-node vectors on a grid. Holds states or adjoints.
struct Trajectory {
    TimeGrid grid;
    std::vector<StateVec> states;
    /// Number of undershoots in (-1e-6, -1e-9] that were clamped to zero.
    int clamped = 0;

    const StateVec& at(int i) const { return states[static_cast<std::size_t>(i)]; }
    /// Component `c` at every node.
    std::vector<double> series(int c) const;
};

inline constexpr double kClampTolerance = 1e-9;
inline constexpr double kBlowupTolerance = 1e-6;

/// Classical RK4 for the state system. Throws NumericError if any component
/// drops below -1e-6, ConfigError on grid mismatch or invalid inputs.
Trajectory rk4_forward(const ParamSet& p, const ControlPath& u_path, const StateVec& y0, const TimeGrid& grid);

/// d(lambda)/dt given (t, state, adjoint, control).
using AdjointRhs = std::function<StateVec(double, const StateVec&, const StateVec&, const ControlConst&)>;

/// Integrates an adjoint system from grid.tf down to grid.t0, starting from
/// `terminal`. States at half steps are linear interpolants of stored nodes.
Trajectory rk4_backward(const AdjointRhs& adjoint_rhs, const Trajectory& state_traj, const ControlPath& u_path,
                        const StateVec& terminal);

/// Header `t,<names...>` then one row per node at full double precision.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const std::vector<std::string>& names);
/// Uses the compartment names as columns.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

} // namespace rabies
