// Acceptance checks. Prints one PASS/FAIL line per criterion; `--only N`
// runs a single criterion. Exit status is non-zero if any selected check fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "rabies/calibrate.hpp"
#include "rabies/errors.hpp"
#include "rabies/integrate.hpp"
#include "rabies/optctl.hpp"
#include "rabies/parallel.hpp"
#include "rabies/repro.hpp"
#include "rabies/sensitivity.hpp"

using namespace rabies;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_s; // 0: no runtime limit
    std::function<Outcome()> run;
};

ParamSet jittered(const ParamSet& base, std::mt19937_64& rng, double spread)
{
    std::uniform_real_distribution<double> f(1.0 - spread, 1.0 + spread);
    ParamSet p = base;
    for (auto name : ParamSet::names()) p.set(name, p.get(name) * f(rng));
    return p;
}

std::string fmt(double v, int prec = 3)
{
    std::ostringstream os;
    os << std::setprecision(prec) << v;
    return os.str();
}

Outcome equilibrium_residual()
{
    const ParamSet p = ParamSet::estimated();
    const double r = rhs(0.0, dfe(p), {}, p).cwiseAbs().maxCoeff();
    return {r < 1e-9, "max |rhs(dfe)| = " + fmt(r)};
}

Outcome re_oracle()
{
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> half(0.0, 0.5);
    double worst = 0.0;
    int n = 0;
    for (int k = 0; k < 100; ++k) {
        const ParamSet p = jittered(ParamSet::estimated(), rng, 0.5);
        ControlConst random;
        for (int j = 0; j < 4; ++j) random[j] = half(rng);
        for (const ControlConst& u : {ControlConst{}, random}) {
            const double a = effective_r(p, u).Re;
            const double b = spectral_r(p, u);
            worst = std::max(worst, std::abs(a - b) / std::max(1.0, a));
            ++n;
        }
    }
    return {worst < 1e-8, std::to_string(n) + " evaluations, max relative gap " + fmt(worst)};
}

Outcome threshold_law()
{
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> below(0.3, 0.95), above(1.05, 3.0);
    const TimeGrid g{0.0, 100.0, 10000};
    const std::array<int, 7> infected{kEH, kIH, kEF, kIF, kED, kID, kM};
    int sub_ok = 0, sub_n = 0, super_ok = 0, super_n = 0;
    double sub_worst = 0.0, super_worst = 0.0;
    int super_worst_c = 0;
    for (int k = 0; k < 50; ++k) {
        ParamSet p = jittered(ParamSet::estimated(), rng, 0.25);
        const double target = k % 2 ? above(rng) : below(rng);
        const double s = target / effective_r(p).Re;
        p.kappa1 *= s;
        p.kappa2 *= s;
        p.psi1 *= s;
        p.psi2 *= s;
        const double re = effective_r(p).Re;
        const Trajectory tr = rk4_forward(p, ControlPath::zero(g), seeded_state(p), g);
        const StateVec& end = tr.states.back();
        if (re < 1.0) {
            ++sub_n;
            double ratio = 0.0;
            for (int c : infected) {
                double peak = 0.0;
                for (const auto& y : tr.states) peak = std::max(peak, y[c]);
                if (peak > 0.0) ratio = std::max(ratio, end[c] / peak);
            }
            sub_worst = std::max(sub_worst, ratio);
            if (ratio < 1e-6) ++sub_ok;
        } else {
            ++super_n;
            const StateVec e = endemic_eq(p);
            double gap = 0.0;
            int worst_c = 0;
            for (int c = 0; c < kNumStates; ++c) {
                const double r = std::abs(end[c] - e[c]) / std::abs(e[c]);
                if (r > gap) {
                    gap = r;
                    worst_c = c;
                }
            }
            if (gap > super_worst) {
                super_worst = gap;
                super_worst_c = worst_c;
            }
            if (gap < 1e-3) ++super_ok;
        }
    }
    return {sub_ok == sub_n && super_ok == super_n,
            "Re<1: " + std::to_string(sub_ok) + "/" + std::to_string(sub_n) + " die out (worst end/peak " +
                fmt(sub_worst) + "); Re>1: " + std::to_string(super_ok) + "/" + std::to_string(super_n) +
                " within 0.1% of endemic_eq (worst " + fmt(super_worst) + " in " +
                std::string(compartment_names()[static_cast<std::size_t>(super_worst_c)]) + ")"};
}

Outcome adjoint_fd()
{
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> unit(0.1, 1.0), lam(-5.0, 5.0), half(0.0, 0.5);
    const double scale[kNumStates] = {1e5, 1e3, 1e3, 1e3, 1e4, 1e2, 1e2, 1e4, 1e2, 1e2, 1e2, 1e2};
    const Weights w;
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const ParamSet p = jittered(ParamSet::estimated(), rng, 0.25);
        StateVec y, l;
        ControlConst u;
        for (int c = 0; c < kNumStates; ++c) {
            y[c] = scale[c] * unit(rng);
            l[c] = lam(rng);
        }
        for (int j = 0; j < 4; ++j) u[j] = half(rng);
        const StateVec d = adjoint_rhs(y, l, u, w, p);
        for (int c = 0; c < kNumStates; ++c) {
            // Richardson-extrapolated central difference.
            auto central = [&](double h) {
                StateVec a = y, b = y;
                a[c] += h;
                b[c] -= h;
                return (hamiltonian(a, l, u, w, p) - hamiltonian(b, l, u, w, p)) / (2 * h);
            };
            const double h = 1e-4 * std::max(1.0, std::abs(y[c]));
            const double fd = -(4.0 * central(h / 2) - central(h)) / 3.0;
            worst = std::max(worst, std::abs(d[c] - fd) / std::max(std::abs(fd), 1e-300));
        }
    }
    return {worst < 1e-6, "1200 components, max relative error " + fmt(worst)};
}

Outcome sweep_convergence()
{
    const ParamSet p = ParamSet::estimated();
    const Weights w;
    const TimeGrid g;
    const SweepResult r = forward_backward_sweep(p, w, seeded_state(p), g, kAllControls);
    double gap = 0.0;
    for (int i = 0; i < g.nodes(); ++i) {
        const ControlConst c = characterize_controls(r.states.at(i), r.adjoints.at(i), w, p, kAllControls);
        for (int j = 0; j < 4; ++j) gap = std::max(gap, std::abs(c[j] - r.controls.values[static_cast<std::size_t>(i)][j]));
    }
    const bool ok = r.converged && r.iterations <= 200 && r.last_update < 1e-4 && gap < 1e-3;
    return {ok, std::to_string(r.iterations) + " iterations, last update " + fmt(r.last_update) +
                    ", re-characterization gap " + fmt(gap) + ", J = " + fmt(r.J(), 8)};
}

Outcome strategy_a_effect()
{
    const ParamSet p = ParamSet::estimated();
    const TimeGrid g;
    const StateVec y0 = seeded_state(p);
    const SweepResult r = forward_backward_sweep(p, Weights{}, y0, g, kAllControls);
    const Trajectory none = rk4_forward(p, ControlPath::zero(g), y0, g);
    const int i5 = g.index_of(5.0);
    const double h = r.states.at(i5)[kIH] / none.at(i5)[kIH];
    const double d = r.states.at(i5)[kID] / none.at(i5)[kID];
    return {h <= 0.05 && d <= 0.05,
            "I_H(5) ratio " + fmt(h) + ", I_D(5) ratio " + fmt(d) + " (I_D " + fmt(r.states.at(i5)[kID]) + " vs " +
                fmt(none.at(i5)[kID]) + ")"};
}

Outcome monotone_grids()
{
    const ParamSet p = ParamSet::estimated();
    const int jobs = default_jobs();
    int violations = 0, checks = 0;
    auto scan = [&](const GridAxis& a, const GridAxis& b, int sign) {
        const ReGrid g = re_grid(p, a, b, {}, jobs);
        for (int i = 0; i < a.n; ++i) {
            for (int j = 0; j < b.n; ++j) {
                if (i + 1 < a.n) {
                    ++checks;
                    if (sign * (g.at(i + 1, j) - g.at(i, j)) < 0) ++violations;
                }
                if (j + 1 < b.n) {
                    ++checks;
                    if (sign * (g.at(i, j + 1) - g.at(i, j)) < 0) ++violations;
                }
            }
        }
    };
    scan({"u1", 0, 1, 20}, {"u2", 0, 1, 20}, -1);
    scan({"u2", 0, 1, 20}, {"u4", 0, 1, 20}, -1);
    scan({"u1", 0, 1, 20}, {"u4", 0, 1, 20}, -1);
    scan({"psi1", 1e-5, 1e-3, 20}, {"psi2", 1e-5, 1e-3, 20}, +1);
    return {violations == 0, std::to_string(checks) + " neighbour comparisons, " + std::to_string(violations) +
                                 " violations"};
}

Outcome deterrence()
{
    const ParamSet p = ParamSet::estimated();
    ParamSet q = p;
    q.rho1 *= 2;
    q.rho2 *= 2;
    q.rho3 *= 2;
    const TimeGrid g;
    auto peaks = [&](const ParamSet& s) {
        const Trajectory tr = rk4_forward(s, ControlPath::zero(g), seeded_state(s), g);
        double e = 0, i = 0;
        for (const auto& y : tr.states) {
            e = std::max(e, y[kED]);
            i = std::max(i, y[kID]);
        }
        return std::pair{e, i};
    };
    const auto [e0, i0] = peaks(p);
    const auto [e1, i1] = peaks(q);
    return {e1 < e0 && i1 < i0,
            "peak E_D " + fmt(e0, 6) + " -> " + fmt(e1, 6) + ", peak I_D " + fmt(i0, 6) + " -> " + fmt(i1, 6)};
}

Outcome prcc_signs()
{
    const ParamSet p = ParamSet::estimated();
    PrccStudy s;
    s.ranges = uniform_ranges(p, all_parameter_names(), 0.25);
    s.N = 1000;
    s.seed = 20240611;
    s.outputs = {"I_H", "M"};
    s.sample_times = {20.0};
    s.jobs = default_jobs();
    const auto res = prcc_study(s, p, std::nullopt, TimeGrid{});
    const PrccResult& ih = res[0];
    const PrccResult& m = res[1];
    std::vector<std::string> bad;
    auto want = [&](const PrccResult& r, const std::string& name, int sign) {
        const double v = r.at(20.0, name);
        if (!(sign * v > 0.05)) bad.push_back(r.output + ":" + name + "=" + fmt(v));
    };
    for (const char* n : {"theta1", "tau1", "tau2", "kappa1", "kappa2"}) want(ih, n, +1);
    for (const char* n : {"beta2", "rho1", "rho3", "gamma2"}) want(ih, n, -1);
    for (const char* n : {"nu1", "nu2", "nu3"}) want(m, n, +1);
    std::string detail = "12 sign checks at t=20, dropped rows " + std::to_string(ih.dropped);
    if (!bad.empty()) {
        detail += "; wrong or weak:";
        for (const auto& b : bad) detail += " " + b;
    }
    return {bad.empty(), detail};
}

Outcome prcc_oracle()
{
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> d(0.0, 1.0);
    Eigen::MatrixXd X(50, 3);
    Eigen::VectorXd z(50);
    for (int i = 0; i < 50; ++i) {
        for (int j = 0; j < 3; ++j) X(i, j) = d(rng);
        z[i] = X(i, 0) - 0.5 * X(i, 1) * X(i, 1) + 0.3 * d(rng);
    }
    const Eigen::VectorXd a = prcc(X, z);

    // Partial correlation from the inverse of the rank correlation matrix.
    Eigen::MatrixXd R(50, 4);
    for (int c = 0; c < 3; ++c) R.col(c) = ranks(X.col(c));
    R.col(3) = ranks(z);
    const Eigen::MatrixXd centered = R.rowwise() - R.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered;
    const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    const Eigen::MatrixXd corr = (cov.array() / (sd * sd.transpose()).array()).matrix();
    const Eigen::MatrixXd omega = corr.inverse();
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double b = -omega(i, 3) / std::sqrt(omega(i, i) * omega(3, 3));
        worst = std::max(worst, std::abs(a[i] - b));
    }
    return {worst < 1e-10, "max |difference| " + fmt(worst)};
}

Outcome calibration_recovery()
{
    const ParamSet truth = ParamSet::estimated();
    std::vector<int> years;
    for (int y = 1990; y <= 2018; ++y) years.push_back(y);
    const IncidenceSeries data{years, predict_incidence(truth, seeded_state(truth), years, 0.01)};
    FitConfig c;
    c.free_params = {"theta1", "tau1", "beta1"};
    for (const auto& n : c.free_params) {
        const double v = truth.get(n);
        c.x0.push_back(1.5 * v);
        c.bounds.push_back({v / 10, v * 10});
    }
    c.max_evals = 4000;
    const FitResult r = fit(data, c, truth);
    double worst = 0.0;
    std::string detail;
    for (std::size_t i = 0; i < 3; ++i) {
        const double err = std::abs(r.estimates[i] / truth.get(c.free_params[i]) - 1.0);
        worst = std::max(worst, err);
        detail += c.free_params[i] + " " + fmt(100 * err, 2) + "% ";
    }
    return {worst < 0.05, detail + "off, " + std::to_string(r.evals) + " evaluations, mse " + fmt(r.mse)};
}

Outcome integrator_order()
{
    const ParamSet p = ParamSet::estimated();
    const StateVec y0 = seeded_state(p);
    std::vector<StateVec> finals;
    int clamped = 0;
    double lowest = 0.0;
    for (int n : {2000, 4000, 8000}) {
        const TimeGrid g{0.0, 20.0, n};
        const Trajectory tr = rk4_forward(p, ControlPath::zero(g), y0, g);
        clamped += tr.clamped;
        for (const auto& y : tr.states) lowest = std::min(lowest, y.minCoeff());
        finals.push_back(tr.states.back());
    }
    const double e1 = (finals[0] - finals[1]).cwiseAbs().maxCoeff();
    const double e2 = (finals[1] - finals[2]).cwiseAbs().maxCoeff();
    const double ratio = e1 / e2;
    return {ratio >= 10 && ratio <= 24 && lowest >= -1e-6,
            "error ratio " + fmt(ratio) + " (h=0.01/0.005/0.0025), clamped undershoots " + std::to_string(clamped)};
}

} // namespace

int main(int argc, char** argv)
{
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
    }

    const std::vector<Criterion> criteria{
        {1, "equilibrium residual", 1, equilibrium_residual},
        {2, "Re closed form vs spectral radius", 5, re_oracle},
        {3, "threshold law", 120, threshold_law},
        {4, "adjoint vs finite differences", 5, adjoint_fd},
        {5, "sweep convergence and optimality", 120, sweep_convergence},
        {6, "strategy A effectiveness at t=5", 0, strategy_a_effect},
        {7, "Re monotonicity grids", 10, monotone_grids},
        {8, "deterrence lowers domestic peaks", 0, deterrence},
        {9, "PRCC signs", 300, prcc_signs},
        {10, "PRCC oracle", 0, prcc_oracle},
        {11, "calibration recovery", 60, calibration_recovery},
        {12, "integrator order and positivity", 0, integrator_order},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (only && c.id != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0 && secs > c.budget_s) {
            o.pass = false;
            o.detail += "; over the " + fmt(c.budget_s) + " s budget";
        }
        if (!o.pass) ++failures;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << c.id << "  " << c.name << ": " << o.detail
                  << " [" << std::fixed << std::setprecision(2) << secs << " s]" << std::defaultfloat << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
