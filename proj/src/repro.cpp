#include "rabies/repro.hpp"

#include <cmath>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "rabies/csv.hpp"
#include "rabies/errors.hpp"
#include "rabies/integrate.hpp"
#include "rabies/json_io.hpp"
#include "rabies/parallel.hpp"

namespace rabies {

StateVec dfe(const ParamSet& p)
{
    StateVec y = StateVec::Zero();
    y[kSH] = p.theta1 / p.mu1;
    y[kSF] = p.theta2 / p.mu2;
    y[kSD] = p.theta3 / p.mu3;
    return y;
}

ReBreakdown effective_r(const ParamSet& p, const ControlConst& u)
{
    const double domestic = domestic_exposure_factor(u);
    const double free_range_period = (p.mu2 + p.gamma) * (p.sigma2 + p.mu2);

    ReBreakdown r;
    r.a3 = p.gamma1 / ((p.mu3 + p.gamma1 + p.gamma2 + u[3]) * (p.sigma3 + p.mu3));
    r.R21 = p.kappa1 * p.theta2 * p.gamma / (p.mu2 * free_range_period);
    r.R23 = p.kappa2 * p.theta2 * r.a3 / p.mu2;
    r.R31 = domestic * p.psi1 * p.theta3 * p.gamma / ((1.0 + p.rho1) * p.mu3 * free_range_period);
    r.R33 = domestic * p.psi2 * p.theta3 * r.a3 / ((1.0 + p.rho2) * p.mu3);

    // (R21 - R33)^2 + 4 R31 R23, written as the expanded form.
    const double disc = r.R21 * r.R21 - 2.0 * r.R33 * r.R21 + 4.0 * r.R31 * r.R23 + r.R33 * r.R33;
    if (!(disc >= -1e-15 * (r.R21 + r.R33) * (r.R21 + r.R33))) {
        throw NumericError("effective_r: negative discriminant " + std::to_string(disc));
    }
    r.Re = 0.5 * (r.R33 + r.R21 + std::sqrt(std::max(0.0, disc)));
    return r;
}

NgmPair ngm_matrices(const ParamSet& p, const ControlConst& u, NgmMode mode)
{
    const double human = human_exposure_factor(u);
    const double domestic = domestic_exposure_factor(u);
    const double SH = p.theta1 / p.mu1;
    const double SF = p.theta2 / p.mu2;
    const double SD = p.theta3 / p.mu3;

    NgmPair m;
    m.F.setZero();
    m.F(kInfEH, kInfIF) = human * p.tau1 * SH;
    m.F(kInfEH, kInfID) = human * p.tau2 * SH;
    m.F(kInfEF, kInfIF) = p.kappa1 * SF;
    m.F(kInfEF, kInfID) = p.kappa2 * SF;
    m.F(kInfED, kInfIF) = domestic * p.psi1 * SD / (1.0 + p.rho1);
    m.F(kInfED, kInfID) = domestic * p.psi2 * SD / (1.0 + p.rho2);
    if (mode == NgmMode::WithEnvironment) {
        m.F(kInfEH, kInfM) = human * p.tau3 * SH / p.C;
        m.F(kInfEF, kInfM) = p.kappa3 * SF / p.C;
        m.F(kInfED, kInfM) = domestic * p.psi3 * SD / ((1.0 + p.rho3) * p.C);
    }

    m.V.setZero();
    m.V(kInfEH, kInfEH) = p.mu1 + p.beta1 + p.beta2 + u[3];
    m.V(kInfIH, kInfEH) = -p.beta1;
    m.V(kInfIH, kInfIH) = p.sigma1 + p.mu1;
    m.V(kInfEF, kInfEF) = p.mu2 + p.gamma;
    m.V(kInfIF, kInfEF) = -p.gamma;
    m.V(kInfIF, kInfIF) = p.mu2 + p.sigma2;
    m.V(kInfED, kInfED) = p.mu3 + p.gamma1 + p.gamma2 + u[3];
    m.V(kInfID, kInfED) = -p.gamma1;
    m.V(kInfID, kInfID) = p.mu3 + p.sigma3;
    m.V(kInfM, kInfIH) = -p.nu1;
    m.V(kInfM, kInfIF) = -p.nu2;
    m.V(kInfM, kInfID) = -p.nu3;
    m.V(kInfM, kInfM) = p.mu4;
    return m;
}

namespace {

// Parlett-Reinsch diagonal similarity scaling with radix 2.
Eigen::MatrixXd balanced(Eigen::MatrixXd A)
{
    const Eigen::Index n = A.rows();
    bool done = false;
    while (!done) {
        done = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            double c = 0.0;
            double r = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(A(j, i));
                r += std::abs(A(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            const double s = c + r;
            double f = 1.0;
            while (c < r / 2.0) {
                c *= 2.0;
                r /= 2.0;
                f *= 2.0;
            }
            while (c >= r * 2.0) {
                c /= 2.0;
                r *= 2.0;
                f /= 2.0;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                A.row(i) /= f;
                A.col(i) *= f;
            }
        }
    }
    return A;
}

Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& A)
{
    Eigen::EigenSolver<Eigen::MatrixXd> solver(balanced(A), /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) throw NumericError("eigenvalue computation did not converge");
    return solver.eigenvalues();
}

} // namespace

double spectral_radius(const Eigen::MatrixXd& A) { return eigenvalues(A).cwiseAbs().maxCoeff(); }

double max_real_eigenvalue(const Eigen::MatrixXd& A) { return eigenvalues(A).real().maxCoeff(); }

double spectral_r(const ParamSet& p, const ControlConst& u, NgmMode mode)
{
    const NgmPair m = ngm_matrices(p, u, mode);
    Eigen::FullPivLU<InfectedMatrix> lu(m.V);
    if (!lu.isInvertible()) throw ConfigError("transition matrix V is singular for these parameters");
    const InfectedMatrix K = m.F * lu.inverse();
    return spectral_radius(K);
}

namespace {

struct Forces {
    double human = 0.0;
    double free_range = 0.0;
    double domestic = 0.0;
};

// Steady state of every compartment given per-capita forces of infection.
StateVec reconstruct(const Forces& f, const ParamSet& p, const ControlConst& u)
{
    const double u4 = u[3];
    StateVec y;

    const double k_eh = p.mu1 + p.beta1 + p.beta2 + u4;
    const double k_rh = p.beta3 + p.mu1;
    const double back_h = p.beta3 * (p.beta2 + u4) / (k_eh * k_rh);
    y[kSH] = p.theta1 / (p.mu1 + f.human * (1.0 - back_h));
    y[kEH] = f.human * y[kSH] / k_eh;
    y[kIH] = p.beta1 * y[kEH] / (p.sigma1 + p.mu1);
    y[kRH] = (p.beta2 + u4) * y[kEH] / k_rh;

    y[kSF] = p.theta2 / (p.mu2 + f.free_range);
    y[kEF] = f.free_range * y[kSF] / (p.mu2 + p.gamma);
    y[kIF] = p.gamma * y[kEF] / (p.mu2 + p.sigma2);

    const double k_ed = p.mu3 + p.gamma1 + p.gamma2 + u4;
    const double k_rd = p.mu3 + p.gamma3;
    const double back_d = p.gamma3 * (p.gamma2 + u4) / (k_ed * k_rd);
    y[kSD] = p.theta3 / (p.mu3 + f.domestic * (1.0 - back_d));
    y[kED] = f.domestic * y[kSD] / k_ed;
    y[kID] = p.gamma1 * y[kED] / (p.mu3 + p.sigma3);
    y[kRD] = (p.gamma2 + u4) * y[kED] / k_rd;

    y[kM] = p.gamma1 * y[kED] * p.nu3 / (p.mu4 * (p.mu3 + p.sigma3)) +
            p.beta1 * y[kEH] * p.nu1 / (p.mu4 * (p.sigma1 + p.mu1)) +
            p.gamma * y[kEF] * p.nu2 / (p.mu4 * (p.mu2 + p.sigma2));
    return y;
}

Forces forces_at(const StateVec& y, const ParamSet& p, const ControlConst& u)
{
    const ForceTerms f = force_terms(y, u, p);
    return {f.chi1, f.chi2, f.chi3};
}

double relative_change(double a, double b)
{
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

} // namespace

StateVec endemic_eq(const ParamSet& p, const ControlConst& u, const EndemicOptions& opts)
{
    p.validate();
    u.validate();
    const double Re = effective_r(p, u).Re;
    if (Re < 1.0) {
        throw NumericError("no endemic equilibrium: Re = " + std::to_string(Re) + " < 1");
    }

    const TimeGrid seed_grid{0.0, opts.seed_years, opts.seed_steps};
    const Trajectory seed = rk4_forward(p, ControlPath::constant(seed_grid, u), seeded_state(p), seed_grid);
    Forces f = forces_at(seed.states.back(), p, u);
    if (f.free_range <= 0.0 && f.domestic <= 0.0 && f.human <= 0.0) {
        throw NumericError("endemic_eq: seeding run died out; cannot seed the fixed-point iteration");
    }

    const double d = opts.damping;
    bool converged = false;
    for (int it = 0; it < opts.max_iterations; ++it) {
        const Forces g = forces_at(reconstruct(f, p, u), p, u);
        const Forces next{(1.0 - d) * f.human + d * g.human, (1.0 - d) * f.free_range + d * g.free_range,
                          (1.0 - d) * f.domestic + d * g.domestic};
        const double change = std::max({relative_change(next.human, f.human),
                                         relative_change(next.free_range, f.free_range),
                                         relative_change(next.domestic, f.domestic)});
        f = next;
        if (change < opts.tolerance) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw NumericError("endemic_eq: fixed-point iteration did not converge in " +
                           std::to_string(opts.max_iterations) + " iterations");
    }

    const StateVec y = reconstruct(f, p, u);
    const double residual = rhs(0.0, y, u, p).cwiseAbs().maxCoeff();
    if (!(residual < 1e-8 * y.cwiseAbs().maxCoeff())) {
        throw NumericError("endemic_eq: residual " + std::to_string(residual) + " above tolerance");
    }
    return y;
}

Eigen::Matrix<double, kNumStates, kNumStates> numeric_jacobian(const StateVec& y, const ControlConst& u,
                                                               const ParamSet& p)
{
    Eigen::Matrix<double, kNumStates, kNumStates> J;
    for (int j = 0; j < kNumStates; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(y[j]));
        StateVec plus = y;
        StateVec minus = y;
        plus[j] += h;
        minus[j] -= h;
        J.col(j) = (rhs(0.0, plus, u, p) - rhs(0.0, minus, u, p)) / (2.0 * h);
    }
    return J;
}

double dfe_stability(const ParamSet& p, const ControlConst& u)
{
    return max_real_eigenvalue(numeric_jacobian(dfe(p), u, p));
}

namespace {

void apply_axis(const std::string& name, double value, ParamSet& p, ControlConst& u)
{
    if (name.size() == 2 && name[0] == 'u' && name[1] >= '1' && name[1] <= '4') {
        u[name[1] - '1'] = value;
        return;
    }
    if (!ParamSet::has(name)) {
        throw ConfigError("unknown grid axis '" + name + "' (expected u1..u4 or a parameter name)");
    }
    p.set(name, value);
}

void validate_axis(const GridAxis& a)
{
    if (a.n < 1) throw ConfigError("grid axis '" + a.name + "' needs n >= 1");
    if (!(a.hi >= a.lo)) throw ConfigError("grid axis '" + a.name + "' needs hi >= lo");
    ParamSet p = ParamSet::estimated();
    ControlConst u;
    apply_axis(a.name, a.lo, p, u);
    const bool is_control = a.name[0] == 'u' && !ParamSet::has(a.name);
    if (is_control && (a.lo < 0.0 || a.hi > 1.0)) {
        throw ConfigError("control axis '" + a.name + "' must stay within [0, 1]");
    }
    if (!is_control && a.lo < 0.0) throw ConfigError("parameter axis '" + a.name + "' must be non-negative");
}

} // namespace

ReGrid re_grid(const ParamSet& p, const GridAxis& axis1, const GridAxis& axis2, const ControlConst& base_u, int jobs)
{
    validate_axis(axis1);
    validate_axis(axis2);
    ReGrid g{axis1, axis2, std::vector<double>(static_cast<std::size_t>(axis1.n * axis2.n))};
    parallel_for(axis1.n * axis2.n, jobs, [&](int k) {
        const int i = k / axis2.n;
        const int j = k % axis2.n;
        ParamSet q = p;
        ControlConst u = base_u;
        apply_axis(axis1.name, axis1.value(i), q, u);
        apply_axis(axis2.name, axis2.value(j), q, u);
        g.values[static_cast<std::size_t>(k)] = effective_r(q, u).Re;
    });
    return g;
}

void write_re_grid_csv(std::ostream& out, const ReGrid& grid)
{
    csv::write_row(out, std::vector<std::string>{grid.axis1.name, grid.axis2.name, "Re"});
    for (int i = 0; i < grid.axis1.n; ++i) {
        for (int j = 0; j < grid.axis2.n; ++j) {
            csv::write_row(out, std::vector<double>{grid.axis1.value(i), grid.axis2.value(j), grid.at(i, j)});
        }
    }
}

nlohmann::json re_grid_sidecar(const ReGrid& grid, const ParamSet& p, const ControlConst& base_u)
{
    auto axis = [](const GridAxis& a) { return nlohmann::json{{"name", a.name}, {"lo", a.lo}, {"hi", a.hi}, {"n", a.n}}; };
    return {{"axis1", axis(grid.axis1)},
            {"axis2", axis(grid.axis2)},
            {"layout", "row-major, axis1 outer"},
            {"base_controls", to_json(base_u)},
            {"parameters", to_json(p)}};
}

} // namespace rabies
