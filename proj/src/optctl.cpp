#include "rabies/optctl.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "rabies/csv.hpp"
#include "rabies/errors.hpp"

namespace rabies {

void Weights::validate() const
{
    for (std::size_t i = 0; i < K.size(); ++i) {
        if (!std::isfinite(K[i]) || K[i] < 0.0) throw ConfigError("weight K" + std::to_string(i + 1) + " must be >= 0");
    }
    for (std::size_t j = 0; j < A.size(); ++j) {
        if (!std::isfinite(A[j]) || A[j] <= 0.0) throw ConfigError("weight A" + std::to_string(j + 1) + " must be > 0");
    }
}

nlohmann::json to_json(const Weights& w)
{
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < w.K.size(); ++i) j["K" + std::to_string(i + 1)] = w.K[i];
    for (std::size_t i = 0; i < w.A.size(); ++i) j["A" + std::to_string(i + 1)] = w.A[i];
    return j;
}

Weights weights_from_json(const nlohmann::json& j, const Weights& fallback)
{
    if (!j.is_object()) throw ConfigError("weights must be a JSON object");
    Weights w = fallback;
    for (const auto& [key, value] : j.items()) {
        if (!value.is_number()) throw ConfigError("weight '" + key + "' must be a number");
        const bool k_key = key.size() == 2 && key[0] == 'K' && key[1] >= '1' && key[1] <= '6';
        const bool a_key = key.size() == 2 && key[0] == 'A' && key[1] >= '1' && key[1] <= '4';
        if (k_key) {
            w.K[static_cast<std::size_t>(key[1] - '1')] = value.get<double>();
        } else if (a_key) {
            w.A[static_cast<std::size_t>(key[1] - '1')] = value.get<double>();
        } else {
            throw ConfigError("unknown weight '" + key + "' (expected K1..K6, A1..A4)");
        }
    }
    w.validate();
    return w;
}

double running_cost(const StateVec& y, const ControlConst& u, const Weights& w)
{
    const auto& K = w.K;
    double c = K[0] * y[kM] + K[1] * y[kEH] + K[2] * y[kIH] + K[3] * y[kED] + K[4] * y[kID] - K[5] * y[kSD];
    for (int j = 0; j < kNumControls; ++j) c += 0.5 * w.A[static_cast<std::size_t>(j)] * u[j] * u[j];
    return c;
}

double objective(const Trajectory& states, const ControlPath& u_path, const Weights& w)
{
    const TimeGrid& g = states.grid;
    if (!(u_path.grid == g) || u_path.values.size() != states.states.size() ||
        static_cast<int>(states.states.size()) != g.nodes()) {
        throw ConfigError("objective: states and controls are on different grids");
    }
    const double h = g.step();
    double sum = 0.0;
    for (int i = 0; i < g.nodes(); ++i) {
        const double c = running_cost(states.at(i), u_path.values[static_cast<std::size_t>(i)], w);
        sum += (i == 0 || i == g.n_steps) ? 0.5 * c : c;
    }
    return h * sum;
}

double hamiltonian(const StateVec& y, const StateVec& lam, const ControlConst& u, const Weights& w, const ParamSet& p)
{
    return running_cost(y, u, w) + lam.dot(rhs(0.0, y, u, p));
}

StateVec adjoint_rhs(const StateVec& y, const StateVec& l, const ControlConst& u, const Weights& w, const ParamSet& p)
{
    const auto& K = w.K;
    const double fh = human_exposure_factor(u);
    const double fd = domestic_exposure_factor(u);
    const double u4 = u[3];
    const double lamM = y[kM] / (y[kM] + p.C);
    const double dlamM = p.C / ((y[kM] + p.C) * (y[kM] + p.C));

    // Gains from moving one susceptible into the exposed class.
    const double dh = l[kEH] - l[kSH];
    const double df = l[kEF] - l[kSF];
    const double dd = l[kED] - l[kSD];

    const double A = p.tau1 * y[kIF] + p.tau2 * y[kID] + p.tau3 * lamM;
    const double B = p.kappa1 * y[kIF] + p.kappa2 * y[kID] + p.kappa3 * lamM;
    const double G = p.psi1 * y[kIF] / (1.0 + p.rho1) + p.psi2 * y[kID] / (1.0 + p.rho2) + p.psi3 * lamM / (1.0 + p.rho3);

    const double k_eh = p.mu1 + p.beta1 + p.beta2 + u4;
    const double k_rh = p.beta3 + p.mu1;
    const double k_ed = p.mu3 + p.gamma1 + p.gamma2 + u4;
    const double k_rd = p.mu3 + p.gamma3;

    // Sensitivity of the three infection fluxes to each source of infection.
    auto flux_gain = [&](double tau, double kappa, double psi_over) {
        return fh * tau * y[kSH] * dh + kappa * y[kSF] * df + fd * psi_over * y[kSD] * dd;
    };

    StateVec dH;
    dH[kSH] = -l[kSH] * p.mu1 + fh * A * dh;
    dH[kEH] = K[1] - l[kEH] * k_eh + l[kIH] * p.beta1 + l[kRH] * (p.beta2 + u4);
    dH[kIH] = K[2] - l[kIH] * (p.sigma1 + p.mu1) + l[kM] * p.nu1;
    dH[kRH] = l[kSH] * p.beta3 - l[kRH] * k_rh;
    dH[kSF] = -l[kSF] * p.mu2 + B * df;
    dH[kEF] = -l[kEF] * (p.mu2 + p.gamma) + l[kIF] * p.gamma;
    dH[kIF] = flux_gain(p.tau1, p.kappa1, p.psi1 / (1.0 + p.rho1)) - l[kIF] * (p.mu2 + p.sigma2) + l[kM] * p.nu2;
    dH[kSD] = -K[5] - l[kSD] * p.mu3 + fd * G * dd;
    dH[kED] = K[3] - l[kED] * k_ed + l[kID] * p.gamma1 + l[kRD] * (p.gamma2 + u4);
    dH[kID] = K[4] + flux_gain(p.tau2, p.kappa2, p.psi2 / (1.0 + p.rho2)) - l[kID] * (p.mu3 + p.sigma3) +
              l[kM] * p.nu3;
    dH[kRD] = l[kSD] * p.gamma3 - l[kRD] * k_rd;
    dH[kM] = K[0] + dlamM * flux_gain(p.tau3, p.kappa3, p.psi3 / (1.0 + p.rho3)) - l[kM] * p.mu4;
    return -dH;
}

ControlConst characterize_controls(const StateVec& y, const StateVec& l, const Weights& w, const ParamSet& p,
                                   const ControlMask& mask)
{
    const double lamM = y[kM] / (y[kM] + p.C);
    const double A = p.tau1 * y[kIF] + p.tau2 * y[kID] + p.tau3 * lamM;
    const double G = p.psi1 * y[kIF] / (1.0 + p.rho1) + p.psi2 * y[kID] / (1.0 + p.rho2) + p.psi3 * lamM / (1.0 + p.rho3);
    const double human = (l[kEH] - l[kSH]) * A * y[kSH];
    const double domestic = (l[kED] - l[kSD]) * G * y[kSD];
    const double pep = y[kEH] * (l[kEH] - l[kRH]) + y[kED] * (l[kED] - l[kRD]);

    const std::array<double, 4> numer{human + domestic, domestic, human, pep};
    ControlConst u;
    for (std::size_t j = 0; j < 4; ++j) {
        u.u[j] = mask[j] ? std::clamp(numer[j] / w.A[j], 0.0, 1.0) : 0.0;
    }
    return u;
}

ControlMask strategy_mask(std::string_view name)
{
    if (name == "A") return {true, true, true, true};
    if (name == "B") return {false, false, true, true};
    if (name == "C") return {false, false, false, true};
    if (name == "D") return {true, true, false, false};
    if (name.size() == 4 && std::all_of(name.begin(), name.end(), [](char c) { return c == '0' || c == '1'; })) {
        return {name[0] == '1', name[1] == '1', name[2] == '1', name[3] == '1'};
    }
    throw ConfigError("unknown strategy '" + std::string(name) + "' (expected A, B, C, D or a mask like 0011)");
}

std::string mask_string(const ControlMask& mask)
{
    std::string s;
    for (bool b : mask) s += b ? '1' : '0';
    return s;
}

void SweepOptions::validate() const
{
    if (!(omega > 0.0 && omega <= 1.0)) throw ConfigError("sweep omega must be in (0, 1]");
    if (!(tol > 0.0)) throw ConfigError("sweep tol must be > 0");
    if (max_iter < 1) throw ConfigError("sweep max_iter must be >= 1");
}

namespace {

struct Pass {
    Trajectory states;
    Trajectory adjoints;
    double J;
};

Pass forward_backward(const ParamSet& p, const Weights& w, const StateVec& y0, const ControlPath& u)
{
    Trajectory states = rk4_forward(p, u, y0, u.grid);
    const double J = objective(states, u, w);
    auto arhs = [&](double, const StateVec& y, const StateVec& lam, const ControlConst& c) {
        return adjoint_rhs(y, lam, c, w, p);
    };
    Trajectory adjoints = rk4_backward(arhs, states, u, StateVec::Zero());
    return {std::move(states), std::move(adjoints), J};
}

} // namespace

SweepResult forward_backward_sweep(const ParamSet& p, const Weights& w, const StateVec& y0, const TimeGrid& grid,
                                   const ControlMask& mask, const SweepOptions& opts)
{
    p.validate();
    w.validate();
    grid.validate();
    opts.validate();
    validate_state(y0);

    SweepResult r;
    r.controls = ControlPath::constant(grid, {}, mask);
    double J_min = 0.0;
    for (int it = 1; it <= opts.max_iter; ++it) {
        Pass pass = forward_backward(p, w, y0, r.controls);
        r.J_history.push_back(pass.J);
        J_min = it == 1 ? pass.J : std::min(J_min, pass.J);
        if (pass.J > J_min + 10.0 * std::max(std::abs(J_min), 1.0)) {
            throw NumericError("forward-backward sweep diverged at iteration " + std::to_string(it) +
                               " (J = " + std::to_string(pass.J) + "); try a smaller omega");
        }
        r.states = std::move(pass.states);
        r.adjoints = std::move(pass.adjoints);
        r.iterations = it;

        double update = 0.0;
        for (int i = 0; i < grid.nodes(); ++i) {
            ControlConst& u = r.controls.values[static_cast<std::size_t>(i)];
            const ControlConst c = characterize_controls(r.states.at(i), r.adjoints.at(i), w, p, mask);
            for (int j = 0; j < kNumControls; ++j) {
                const double next = (1.0 - opts.omega) * u[j] + opts.omega * c[j];
                update = std::max(update, std::abs(next - u[j]));
                u[j] = next;
            }
        }
        r.last_update = update;
        if (update < opts.tol) {
            r.converged = true;
            break;
        }
    }

    // Bring states, adjoints and J in line with the controls being returned.
    if (r.last_update > 0.0) {
        Pass pass = forward_backward(p, w, y0, r.controls);
        r.states = std::move(pass.states);
        r.adjoints = std::move(pass.adjoints);
        r.J_history.push_back(pass.J);
    }
    return r;
}

void write_adjoints_csv(std::ostream& out, const Trajectory& adjoints)
{
    std::vector<std::string> names;
    for (int c = 1; c <= kNumStates; ++c) names.push_back("lam" + std::to_string(c));
    write_trajectory_csv(out, adjoints, names);
}

void write_controls_csv(std::ostream& out, const ControlPath& controls)
{
    csv::write_row(out, std::vector<std::string>{"t", "u1", "u2", "u3", "u4"});
    for (int i = 0; i < controls.grid.nodes(); ++i) {
        const ControlConst& u = controls.values[static_cast<std::size_t>(i)];
        csv::write_row(out, std::vector<double>{controls.grid.time(i), u[0], u[1], u[2], u[3]});
    }
}

nlohmann::json sweep_summary(const SweepResult& r)
{
    return {{"J", r.J()},
            {"J_history", r.J_history},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"last_update", r.last_update},
            {"mask", mask_string(r.controls.mask)}};
}

} // namespace rabies
