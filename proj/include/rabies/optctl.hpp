#pragma once

// Optimal control of the transmission model: objective functional, Hamiltonian,
// adjoint system, pointwise control characterization and the forward-backward
// sweep.

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rabies/integrate.hpp"
#include "rabies/model.hpp"

namespace rabies {

/// Running-cost weights. K1 environment, K2/K4 exposed humans/dogs, K3/K5
/// infectious humans/dogs, K6 susceptible domestic dogs (rewarded). A1..A4 are
/// the quadratic control costs.
struct Weights {
    std::array<double, 6> K{1.0, 1.0, 1.0, 1.0, 1.0, 0.01};
    std::array<double, 4> A{50.0, 50.0, 50.0, 50.0};

    void validate() const;
    bool operator==(const Weights&) const = default;
};

nlohmann::json to_json(const Weights& w);
/// Keys K1..K6, A1..A4; missing keys keep `fallback`.
Weights weights_from_json(const nlohmann::json& j, const Weights& fallback = {});

/// Integrand of the objective at one instant.
double running_cost(const StateVec& y, const ControlConst& u, const Weights& w);

/// Trapezoidal quadrature of the running cost over the grid.
double objective(const Trajectory& states, const ControlPath& u_path, const Weights& w);

double hamiltonian(const StateVec& y, const StateVec& lam, const ControlConst& u, const Weights& w, const ParamSet& p);

/// d(lambda)/dt = -dH/dy, analytically.
StateVec adjoint_rhs(const StateVec& y, const StateVec& lam, const ControlConst& u, const Weights& w,
                     const ParamSet& p);

/// Minimizer of H over [0,1]^4 per control; masked-off controls are 0.
ControlConst characterize_controls(const StateVec& y, const StateVec& lam, const Weights& w, const ParamSet& p,
                                   const ControlMask& mask = kAllControls);

/// Strategy letter A-D, or a four-character 0/1 mask such as "0011".
ControlMask strategy_mask(std::string_view name);
std::string mask_string(const ControlMask& mask);

struct SweepOptions {
    double omega = 0.5;
    double tol = 1e-4;
    int max_iter = 200;

    void validate() const;
};

struct SweepResult {
    ControlPath controls;
    Trajectory states;
    Trajectory adjoints;
    std::vector<double> J_history;
    int iterations = 0;
    bool converged = false;
    /// Sup-norm of the last control update.
    double last_update = 0.0;

    double J() const { return J_history.empty() ? 0.0 : J_history.back(); }
};

/// Throws NumericError if the objective grows by more than ten times its
/// smallest value (or by 10 when that is below 1).
SweepResult forward_backward_sweep(const ParamSet& p, const Weights& w, const StateVec& y0, const TimeGrid& grid,
                                   const ControlMask& mask = kAllControls, const SweepOptions& opts = {});

/// `t,lam1..lam12`.
void write_adjoints_csv(std::ostream& out, const Trajectory& adjoints);
/// `t,u1,u2,u3,u4`.
void write_controls_csv(std::ostream& out, const ControlPath& controls);
/// J_history, iterations, converged, final J.
nlohmann::json sweep_summary(const SweepResult& r);

} // namespace rabies
