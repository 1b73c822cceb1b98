#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rabies/errors.hpp"
#include "rabies/integrate.hpp"
#include "rabies/optctl.hpp"
#include "rabies/repro.hpp"
#include "support.hpp"

using namespace rabies;

TEST_SUITE("integrate") {

TEST_CASE("time grid")
{
    const TimeGrid g;
    CHECK(g.step() == doctest::Approx(0.01));
    CHECK(g.nodes() == 2001);
    CHECK(g.time(2000) == 20.0);
    CHECK(g.index_of(5.0) == 500);
    CHECK_THROWS_AS(g.index_of(21.0), ConfigError);
    CHECK_THROWS_AS((TimeGrid{0, 0, 10}.validate()), ConfigError);
    CHECK_THROWS_AS((TimeGrid{0, 1, 0}.validate()), ConfigError);
}

TEST_CASE("disease-free state stays constant")
{
    const ParamSet p = ParamSet::estimated();
    const TimeGrid g;
    const StateVec y0 = dfe(p);
    const Trajectory tr = rk4_forward(p, ControlPath::zero(g), y0, g);
    REQUIRE(tr.states.size() == 2001);
    double worst = 0.0;
    for (const auto& y : tr.states) worst = std::max(worst, (y - y0).cwiseAbs().maxCoeff());
    CHECK(worst < 1e-9);
}

TEST_CASE("uninfected populations stay uninfected")
{
    const ParamSet p = ParamSet::estimated();
    const TimeGrid g;
    StateVec y0 = StateVec::Zero();
    y0[kSH] = 1000;
    y0[kSF] = 500;
    y0[kSD] = 800;
    y0[kRH] = 10;
    const Trajectory tr = rk4_forward(p, ControlPath::zero(g), y0, g);
    for (const auto& y : tr.states) {
        CHECK(y[kIH] == 0.0);
        CHECK(y[kIF] == 0.0);
        CHECK(y[kID] == 0.0);
        CHECK(y[kM] == 0.0);
    }
}

TEST_CASE("population and environment caps")
{
    std::mt19937_64 rng(3);
    const TimeGrid g;
    for (int k = 0; k < 10; ++k) {
        const ParamSet p = testing::jittered(ParamSet::estimated(), rng);
        const StateVec y0 = seeded_state(p);
        const ControlConst u = testing::random_controls(rng, 0.5);
        const Trajectory tr = rk4_forward(p, ControlPath::constant(g, u), y0, g);
        const double capH = std::max(humans(y0), p.theta1 / p.mu1) + 1e-6;
        const double capF = std::max(free_range_dogs(y0), p.theta2 / p.mu2) + 1e-6;
        const double capD = std::max(domestic_dogs(y0), p.theta3 / p.mu3) + 1e-6;
        const double capM = std::max(y0[kM], p.theta1 * p.nu1 / (p.mu1 * p.mu4) + p.theta2 * p.nu2 / (p.mu2 * p.mu4) +
                                                 p.theta3 * p.nu3 / (p.mu3 * p.mu4)) +
                            1e-6;
        for (const auto& y : tr.states) {
            CHECK(humans(y) <= capH);
            CHECK(free_range_dogs(y) <= capF);
            CHECK(domestic_dogs(y) <= capD);
            CHECK(y[kM] <= capM);
            CHECK(y.minCoeff() >= 0.0);
        }
    }
}

TEST_CASE("forward integration is deterministic")
{
    const ParamSet p = ParamSet::estimated();
    const TimeGrid g;
    const Trajectory a = rk4_forward(p, ControlPath::zero(g), seeded_state(p), g);
    const Trajectory b = rk4_forward(p, ControlPath::zero(g), seeded_state(p), g);
    for (int i = 0; i < g.nodes(); ++i) CHECK(a.at(i) == b.at(i));
}

TEST_CASE("half-step controls are node averages")
{
    const TimeGrid g{0.0, 1.0, 1};
    ControlPath u = ControlPath::constant(g, {}, kAllControls);
    u.values[1][3] = 0.8;
    CHECK(u.midpoint(0)[3] == doctest::Approx(0.4));
}

TEST_CASE("excessive undershoot is reported as a blow-up")
{
    ParamSet p = ParamSet::estimated();
    p.sigma1 = 1e4;
    const TimeGrid g{0.0, 1.0, 10};
    StateVec y0 = seeded_state(p);
    y0[kIH] = 100.0;
    CHECK_THROWS_AS(rk4_forward(p, ControlPath::zero(g), y0, g), NumericError);
}

TEST_CASE("grid mismatches are configuration errors")
{
    const ParamSet p = ParamSet::estimated();
    const TimeGrid g;
    const TimeGrid other{0.0, 10.0, 1000};
    CHECK_THROWS_AS(rk4_forward(p, ControlPath::zero(other), seeded_state(p), g), ConfigError);
    const Trajectory tr = rk4_forward(p, ControlPath::zero(g), seeded_state(p), g);
    auto zero = [](double, const StateVec&, const StateVec&, const ControlConst&) { return StateVec::Zero().eval(); };
    CHECK_THROWS_AS(rk4_backward(zero, tr, ControlPath::zero(other), StateVec::Zero()), ConfigError);
}

TEST_CASE("backward integration boundary behaviour")
{
    const ParamSet p = ParamSet::estimated();
    const TimeGrid g;
    const ControlPath u = ControlPath::zero(g);
    const Trajectory tr = rk4_forward(p, u, seeded_state(p), g);
    auto zero = [](double, const StateVec&, const StateVec&, const ControlConst&) { return StateVec::Zero().eval(); };
    const Trajectory a = rk4_backward(zero, tr, u, StateVec::Zero());
    for (const auto& l : a.states) CHECK(l.cwiseAbs().maxCoeff() == 0.0);

    StateVec terminal = StateVec::Constant(0.25);
    const Trajectory b = rk4_backward(zero, tr, u, terminal);
    CHECK(b.states.back() == terminal);
    CHECK(b.states.front() == terminal);
}

TEST_CASE("backward integration of a linear decay")
{
    // dl/dt = l backwards from l(1) = 1 gives l(0) = e^-1.
    const TimeGrid g{0.0, 1.0, 100};
    const ParamSet p = ParamSet::estimated();
    const ControlPath u = ControlPath::zero(g);
    const Trajectory tr = rk4_forward(p, u, dfe(p), g);
    auto grow = [](double, const StateVec&, const StateVec& l, const ControlConst&) { return l; };
    const Trajectory a = rk4_backward(grow, tr, u, StateVec::Ones());
    CHECK(a.at(0)[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
}

TEST_CASE("adjoint step-halving")
{
    const ParamSet p = ParamSet::estimated();
    const Weights w;
    auto initial_adjoint = [&](int n) {
        const TimeGrid g{0.0, 20.0, n};
        ControlPath u = ControlPath::constant(g, {0.3, 0.2, 0.1, 0.4});
        const Trajectory tr = rk4_forward(p, u, seeded_state(p), g);
        auto arhs = [&](double, const StateVec& y, const StateVec& l, const ControlConst& c) {
            return adjoint_rhs(y, l, c, w, p);
        };
        return rk4_backward(arhs, tr, u, StateVec::Zero()).at(0);
    };
    const StateVec a = initial_adjoint(2000);
    const StateVec b = initial_adjoint(4000);
    for (int c = 0; c < kNumStates; ++c) {
        CHECK(testing::rel_err(a[c], b[c]) < 1e-5);
    }
}

TEST_CASE("trajectory csv")
{
    const ParamSet p = ParamSet::estimated();
    const TimeGrid g{0.0, 1.0, 2};
    const Trajectory tr = rk4_forward(p, ControlPath::zero(g), seeded_state(p), g);
    std::ostringstream os;
    write_trajectory_csv(os, tr);
    std::istringstream is(os.str());
    std::string header;
    std::getline(is, header);
    CHECK(header == "t,S_H,E_H,I_H,R_H,S_F,E_F,I_F,S_D,E_D,I_D,R_D,M");
    int rows = 0;
    for (std::string line; std::getline(is, line);) ++rows;
    CHECK(rows == 3);
}

}
