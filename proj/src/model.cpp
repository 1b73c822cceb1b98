#include "rabies/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "rabies/errors.hpp"

namespace rabies {

namespace {

using Member = double ParamSet::*;

struct Field {
    std::string_view name;
    Member member;
};

// Order follows the struct declaration.
constexpr std::array<Field, 33> kFields{{
    {"theta1", &ParamSet::theta1}, {"theta2", &ParamSet::theta2}, {"theta3", &ParamSet::theta3},
    {"tau1", &ParamSet::tau1},     {"tau2", &ParamSet::tau2},     {"tau3", &ParamSet::tau3},
    {"kappa1", &ParamSet::kappa1}, {"kappa2", &ParamSet::kappa2}, {"kappa3", &ParamSet::kappa3},
    {"psi1", &ParamSet::psi1},     {"psi2", &ParamSet::psi2},     {"psi3", &ParamSet::psi3},
    {"rho1", &ParamSet::rho1},     {"rho2", &ParamSet::rho2},     {"rho3", &ParamSet::rho3},
    {"beta1", &ParamSet::beta1},   {"beta2", &ParamSet::beta2},   {"beta3", &ParamSet::beta3},
    {"gamma", &ParamSet::gamma},   {"gamma1", &ParamSet::gamma1}, {"gamma2", &ParamSet::gamma2},
    {"gamma3", &ParamSet::gamma3}, {"mu1", &ParamSet::mu1},       {"mu2", &ParamSet::mu2},
    {"mu3", &ParamSet::mu3},       {"mu4", &ParamSet::mu4},       {"sigma1", &ParamSet::sigma1},
    {"sigma2", &ParamSet::sigma2}, {"sigma3", &ParamSet::sigma3}, {"nu1", &ParamSet::nu1},
    {"nu2", &ParamSet::nu2},       {"nu3", &ParamSet::nu3},       {"C", &ParamSet::C},
}};

Member find_member(std::string_view name)
{
    for (const auto& f : kFields) {
        if (f.name == name) return f.member;
    }
    throw ConfigError("unknown parameter '" + std::string(name) + "'");
}

constexpr std::array<std::string_view, kNumStates> kCompartmentNames{
    "S_H", "E_H", "I_H", "R_H", "S_F", "E_F", "I_F", "S_D", "E_D", "I_D", "R_D", "M"};

} // namespace

const std::array<std::string_view, kNumStates>& compartment_names() { return kCompartmentNames; }

int compartment_index(std::string_view name)
{
    for (int i = 0; i < kNumStates; ++i) {
        if (kCompartmentNames[static_cast<std::size_t>(i)] == name) return i;
    }
    throw ConfigError("unknown compartment '" + std::string(name) + "'");
}

ParamSet ParamSet::estimated()
{
    ParamSet p{};
    p.theta1 = 1993.382113;
    p.tau1 = 0.000405;
    p.tau2 = 0.000604;
    p.tau3 = 0.000303;
    p.beta1 = 0.165581;
    p.nu3 = 0.005735;
    p.beta2 = 0.540487;
    p.beta3 = 0.999301;
    p.mu1 = 0.014417;
    p.sigma1 = 1.006332;
    p.theta2 = 1004.12044;
    p.kappa1 = 0.000020;
    p.kappa2 = 0.000081;
    p.kappa3 = 0.000040;
    p.gamma = 0.166374;
    p.nu1 = 0.001958;
    p.sigma2 = 0.089556;
    p.mu4 = 0.080625;
    p.mu2 = 0.066268;
    p.theta3 = 1203.844461;
    p.psi1 = 0.000077;
    p.psi2 = 0.000066;
    p.psi3 = 0.000030;
    p.mu3 = 0.080129;
    p.sigma3 = 0.091393;
    p.gamma1 = 0.172489;
    p.gamma2 = 0.090308;
    p.gamma3 = 0.050128;
    p.nu2 = 0.008971;
    p.rho1 = 9.920733;
    p.rho2 = 8.116421;
    p.rho3 = 14.917005;
    p.C = 0.003011;
    return p;
}

ParamSet ParamSet::baseline()
{
    ParamSet p{};
    p.theta1 = 2000.0;
    p.tau1 = 0.0004;
    p.tau2 = 0.0004;
    p.tau3 = 0.0003; // listed as [0.0003, 0.0100]
    p.beta1 = 1.0 / 6.0;
    p.nu3 = 0.001;
    p.beta2 = 0.54; // listed as [0.54, 1]
    p.beta3 = 1.0;
    p.mu1 = 0.0142;
    p.sigma1 = 1.0;
    p.theta2 = 1000.0;
    p.kappa1 = 0.00006;
    p.kappa2 = 0.00005;
    p.kappa3 = 0.00001; // listed as [0.00001, 0.00003]
    p.gamma = 1.0 / 6.0;
    p.nu1 = 0.001;
    p.sigma2 = 0.09;
    p.mu4 = 0.08;
    p.mu2 = 0.067;
    p.theta3 = 1200.0;
    p.psi1 = 0.0004;
    p.psi2 = 0.0004;
    p.psi3 = 0.0003;
    p.mu3 = 0.067;
    p.sigma3 = 0.08;
    p.gamma1 = 1.0 / 6.0;
    p.gamma2 = 0.09;
    p.gamma3 = 0.05;
    p.nu2 = 0.006;
    p.rho1 = 10.0;
    p.rho2 = 8.0;
    p.rho3 = 15.0;
    p.C = 0.003;
    return p;
}

ParamSet ParamSet::preset(std::string_view name)
{
    if (name == "estimated") return estimated();
    if (name == "baseline") return baseline();
    throw ConfigError("unknown parameter preset '" + std::string(name) + "' (expected estimated|baseline)");
}

void ParamSet::validate() const
{
    for (const auto& f : kFields) {
        const double v = this->*f.member;
        if (!std::isfinite(v) || v <= 0.0) {
            throw ConfigError("parameter '" + std::string(f.name) + "' must be finite and > 0, got " +
                              std::to_string(v));
        }
    }
    const std::array<std::pair<double, double>, 3> recruit{{{theta1, mu1}, {theta2, mu2}, {theta3, mu3}}};
    for (std::size_t i = 0; i < recruit.size(); ++i) {
        if (recruit[i].first <= recruit[i].second) {
            throw ConfigError("recruitment theta" + std::to_string(i + 1) + " must exceed natural mortality mu" +
                              std::to_string(i + 1));
        }
    }
}

double ParamSet::get(std::string_view name) const { return this->*find_member(name); }

void ParamSet::set(std::string_view name, double value) { this->*find_member(name) = value; }

bool ParamSet::has(std::string_view name)
{
    return std::any_of(kFields.begin(), kFields.end(), [&](const Field& f) { return f.name == name; });
}

const std::vector<std::string_view>& ParamSet::names()
{
    static const std::vector<std::string_view> out = [] {
        std::vector<std::string_view> v;
        for (const auto& f : kFields) v.push_back(f.name);
        return v;
    }();
    return out;
}

void ControlConst::validate() const
{
    for (int j = 0; j < kNumControls; ++j) {
        const double v = (*this)[j];
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ConfigError("control u" + std::to_string(j + 1) + " must lie in [0, 1], got " + std::to_string(v));
        }
    }
}

double saturation(double M, double C)
{
    if (!(C > 0.0)) throw std::domain_error("saturation: half-saturation constant C must be > 0");
    if (!(M >= 0.0)) throw std::domain_error("saturation: virus concentration M must be >= 0");
    return M / (M + C);
}

ForceTerms force_terms(const StateVec& y, const ControlConst& u, const ParamSet& p)
{
    ForceTerms f;
    f.lamM = y[kM] / (y[kM] + p.C);
    f.chi1 = human_exposure_factor(u) * (p.tau1 * y[kIF] + p.tau2 * y[kID] + p.tau3 * f.lamM);
    f.chi2 = p.kappa1 * y[kIF] + p.kappa2 * y[kID] + p.kappa3 * f.lamM;
    f.chi3 = domestic_exposure_factor(u) *
             (p.psi1 * y[kIF] / (1.0 + p.rho1) + p.psi2 * y[kID] / (1.0 + p.rho2) + p.psi3 * f.lamM / (1.0 + p.rho3));
    return f;
}

StateVec rhs(double /*t*/, const StateVec& y, const ControlConst& u, const ParamSet& p)
{
    const ForceTerms f = force_terms(y, u, p);
    const double u4 = u[3];
    const double infect_h = f.chi1 * y[kSH];
    const double infect_f = f.chi2 * y[kSF];
    const double infect_d = f.chi3 * y[kSD];

    StateVec dy;
    dy[kSH] = p.theta1 + p.beta3 * y[kRH] - p.mu1 * y[kSH] - infect_h;
    dy[kEH] = infect_h - (p.mu1 + p.beta1 + p.beta2 + u4) * y[kEH];
    dy[kIH] = p.beta1 * y[kEH] - (p.sigma1 + p.mu1) * y[kIH];
    dy[kRH] = (p.beta2 + u4) * y[kEH] - (p.beta3 + p.mu1) * y[kRH];

    dy[kSF] = p.theta2 - infect_f - p.mu2 * y[kSF];
    dy[kEF] = infect_f - (p.mu2 + p.gamma) * y[kEF];
    dy[kIF] = p.gamma * y[kEF] - (p.mu2 + p.sigma2) * y[kIF];

    dy[kSD] = p.theta3 - p.mu3 * y[kSD] - infect_d + p.gamma3 * y[kRD];
    dy[kED] = infect_d - (p.mu3 + p.gamma1 + p.gamma2 + u4) * y[kED];
    dy[kID] = p.gamma1 * y[kED] - (p.mu3 + p.sigma3) * y[kID];
    dy[kRD] = (p.gamma2 + u4) * y[kED] - (p.mu3 + p.gamma3) * y[kRD];

    dy[kM] = p.nu1 * y[kIH] + p.nu2 * y[kIF] + p.nu3 * y[kID] - p.mu4 * y[kM];
    return dy;
}

StateVec seeded_state(const ParamSet& p, const Seeding& seeds)
{
    StateVec y = StateVec::Zero();
    y[kSH] = p.theta1 / p.mu1;
    y[kSF] = p.theta2 / p.mu2;
    y[kSD] = p.theta3 / p.mu3;
    y[kEH] = seeds.E_H;
    y[kIH] = seeds.I_H;
    y[kEF] = seeds.E_F;
    y[kIF] = seeds.I_F;
    y[kED] = seeds.E_D;
    y[kID] = seeds.I_D;
    y[kM] = seeds.M;
    return y;
}

void validate_state(const StateVec& y)
{
    for (int i = 0; i < kNumStates; ++i) {
        if (!std::isfinite(y[i]) || y[i] < 0.0) {
            throw ConfigError("state component " + std::string(compartment_names()[static_cast<std::size_t>(i)]) +
                              " must be finite and >= 0");
        }
    }
}

} // namespace rabies
