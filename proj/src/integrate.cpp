#include "rabies/integrate.hpp"

#include <cmath>
#include <ostream>

#include "rabies/csv.hpp"
#include "rabies/errors.hpp"

namespace rabies {

int TimeGrid::index_of(double t) const
{
    const double h = step();
    if (t < t0 - 1e-9 * h || t > tf + 1e-9 * h) {
        throw ConfigError("time " + std::to_string(t) + " is outside the grid [" + std::to_string(t0) + ", " +
                          std::to_string(tf) + "]");
    }
    const long i = std::lround((t - t0) / h);
    return static_cast<int>(std::clamp<long>(i, 0, n_steps));
}

void TimeGrid::validate() const
{
    if (!std::isfinite(t0) || !std::isfinite(tf) || !(tf > t0)) throw ConfigError("time grid needs tf > t0");
    if (n_steps < 1) throw ConfigError("time grid needs n_steps >= 1");
}

ControlPath ControlPath::constant(const TimeGrid& grid, const ControlConst& u, const ControlMask& mask)
{
    ControlConst masked = u;
    for (int j = 0; j < kNumControls; ++j) {
        if (!mask[static_cast<std::size_t>(j)]) masked[j] = 0.0;
    }
    return ControlPath{grid, std::vector<ControlConst>(static_cast<std::size_t>(grid.nodes()), masked), mask};
}

ControlConst ControlPath::midpoint(int i) const
{
    const auto& a = values[static_cast<std::size_t>(i)];
    const auto& b = values[static_cast<std::size_t>(i + 1)];
    ControlConst m;
    for (int j = 0; j < kNumControls; ++j) m[j] = 0.5 * (a[j] + b[j]);
    return m;
}

void ControlPath::validate() const
{
    grid.validate();
    if (static_cast<int>(values.size()) != grid.nodes()) {
        throw ConfigError("control path has " + std::to_string(values.size()) + " nodes, grid has " +
                          std::to_string(grid.nodes()));
    }
    for (const auto& u : values) {
        u.validate();
        for (int j = 0; j < kNumControls; ++j) {
            if (!mask[static_cast<std::size_t>(j)] && u[j] != 0.0) {
                throw ConfigError("masked-off control u" + std::to_string(j + 1) + " must be zero");
            }
        }
    }
}

std::vector<double> Trajectory::series(int c) const
{
    std::vector<double> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(s[c]);
    return out;
}

namespace {

// Clamps small negative undershoot to zero; larger undershoot is a blow-up.
int enforce_nonnegative(StateVec& y, double t)
{
    int clamped = 0;
    for (int c = 0; c < kNumStates; ++c) {
        if (!std::isfinite(y[c]) || y[c] < -kBlowupTolerance) {
            throw NumericError("integration blow-up: " + std::string(compartment_names()[static_cast<std::size_t>(c)]) +
                               " = " + std::to_string(y[c]) + " at t = " + std::to_string(t) +
                               "; try a smaller step (more n_steps)");
        }
        if (y[c] < 0.0) {
            if (y[c] < -kClampTolerance) ++clamped;
            y[c] = 0.0;
        }
    }
    return clamped;
}

} // namespace

Trajectory rk4_forward(const ParamSet& p, const ControlPath& u_path, const StateVec& y0, const TimeGrid& grid)
{
    grid.validate();
    if (!(u_path.grid == grid) || static_cast<int>(u_path.values.size()) != grid.nodes()) {
        throw ConfigError("control path is not defined on the integration grid");
    }
    validate_state(y0);

    const double h = grid.step();
    Trajectory traj{grid, {}, 0};
    traj.states.reserve(static_cast<std::size_t>(grid.nodes()));
    traj.states.push_back(y0);

    StateVec y = y0;
    for (int i = 0; i < grid.n_steps; ++i) {
        const double t = grid.time(i);
        const ControlConst& ua = u_path.values[static_cast<std::size_t>(i)];
        const ControlConst um = u_path.midpoint(i);
        const ControlConst& ub = u_path.values[static_cast<std::size_t>(i + 1)];

        const StateVec k1 = rhs(t, y, ua, p);
        const StateVec k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1, um, p);
        const StateVec k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2, um, p);
        const StateVec k4 = rhs(t + h, y + h * k3, ub, p);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        traj.clamped += enforce_nonnegative(y, grid.time(i + 1));
        traj.states.push_back(y);
    }
    return traj;
}

Trajectory rk4_backward(const AdjointRhs& adjoint_rhs, const Trajectory& state_traj, const ControlPath& u_path,
                        const StateVec& terminal)
{
    const TimeGrid& grid = state_traj.grid;
    if (static_cast<int>(state_traj.states.size()) != grid.nodes()) {
        throw ConfigError("state trajectory length does not match its grid");
    }
    if (!(u_path.grid == grid) || static_cast<int>(u_path.values.size()) != grid.nodes()) {
        throw ConfigError("control path and state trajectory are on different grids");
    }

    const double h = grid.step();
    Trajectory adj{grid, std::vector<StateVec>(static_cast<std::size_t>(grid.nodes())), 0};
    adj.states.back() = terminal;

    StateVec lam = terminal;
    for (int i = grid.n_steps; i > 0; --i) {
        const double t = grid.time(i);
        const StateVec& yb = state_traj.at(i);
        const StateVec& ya = state_traj.at(i - 1);
        const StateVec ym = 0.5 * (ya + yb);
        const ControlConst& ub = u_path.values[static_cast<std::size_t>(i)];
        const ControlConst um = u_path.midpoint(i - 1);
        const ControlConst& ua = u_path.values[static_cast<std::size_t>(i - 1)];

        // Step of -h from t.
        const StateVec k1 = adjoint_rhs(t, yb, lam, ub);
        const StateVec k2 = adjoint_rhs(t - 0.5 * h, ym, lam - 0.5 * h * k1, um);
        const StateVec k3 = adjoint_rhs(t - 0.5 * h, ym, lam - 0.5 * h * k2, um);
        const StateVec k4 = adjoint_rhs(t - h, ya, lam - h * k3, ua);
        lam -= (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        for (int c = 0; c < kNumStates; ++c) {
            if (!std::isfinite(lam[c])) {
                throw NumericError("adjoint integration produced a non-finite value at t = " +
                                   std::to_string(grid.time(i - 1)));
            }
        }
        adj.states[static_cast<std::size_t>(i - 1)] = lam;
    }
    return adj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const std::vector<std::string>& names)
{
    std::vector<std::string> header{"t"};
    header.insert(header.end(), names.begin(), names.end());
    csv::write_row(out, header);
    std::vector<double> row(names.size() + 1);
    for (int i = 0; i < traj.grid.nodes(); ++i) {
        row[0] = traj.grid.time(i);
        const StateVec& s = traj.at(i);
        for (std::size_t c = 0; c < names.size(); ++c) row[c + 1] = s[static_cast<int>(c)];
        csv::write_row(out, row);
    }
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj)
{
    std::vector<std::string> names;
    for (auto n : compartment_names()) names.emplace_back(n);
    write_trajectory_csv(out, traj, names);
}

} // namespace rabies
