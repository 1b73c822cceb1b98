#pragma once

// Human / free-range dog / domestic dog / environment rabies transmission model
// with four time-dependent controls. Time unit is years throughout.

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace rabies {

inline constexpr int kNumStates = 12;
inline constexpr int kNumControls = 4;

/// Compartment indices into a StateVec.
enum Compartment : int {
    kSH = 0, // susceptible humans
    kEH,     // exposed humans
    kIH,     // infectious humans
    kRH,     // recovered humans
    kSF,     // susceptible free-range dogs
    kEF,     // exposed free-range dogs
    kIF,     // infectious free-range dogs
    kSD,     // susceptible domestic dogs
    kED,     // exposed domestic dogs
    kID,     // infectious domestic dogs
    kRD,     // recovered domestic dogs
    kM,      // environmental virus concentration (PFU/mL)
};

using StateVec = Eigen::Matrix<double, kNumStates, 1>;

/// Column names, in Compartment order.
const std::array<std::string_view, kNumStates>& compartment_names();
/// Index of a compartment by name ("S_H", "I_D", "M", ...); throws ConfigError.
int compartment_index(std::string_view name);

/// Rate constants. All strictly positive; recruitment must exceed natural mortality.
struct ParamSet {
    double theta1, theta2, theta3; // recruitment (individuals / year)
    double tau1, tau2, tau3;       // human transmission from I_F, I_D, environment
    double kappa1, kappa2, kappa3; // free-range dog transmission
    double psi1, psi2, psi3;       // domestic dog transmission
    double rho1, rho2, rho3;       // deterrence factors
    double beta1, beta2, beta3;    // E_H->I_H, E_H->R_H, R_H->S_H
    double gamma;                  // E_F->I_F
    double gamma1, gamma2, gamma3; // E_D->I_D, E_D->R_D, R_D->S_D
    double mu1, mu2, mu3, mu4;     // natural death; mu4 is virus decay
    double sigma1, sigma2, sigma3; // disease-induced death
    double nu1, nu2, nu3;          // shedding from I_H, I_F, I_D
    double C;                      // half-saturation of environmental virus

    /// "Estimated value" column of the calibration table (the default).
    static ParamSet estimated();
    /// "Baseline value" column; ranged entries take their lower end.
    static ParamSet baseline();
    /// Named preset: "estimated" or "baseline".
    static ParamSet preset(std::string_view name);

    /// Throws ConfigError describing the first violated invariant.
    void validate() const;

    double get(std::string_view name) const;
    void set(std::string_view name, double value);
    static bool has(std::string_view name);
    static const std::vector<std::string_view>& names();

    bool operator==(const ParamSet&) const = default;
};

/// Constant control intensities u1..u4 in [0, 1].
struct ControlConst {
    std::array<double, kNumControls> u{};

    double operator[](int j) const { return u[static_cast<std::size_t>(j)]; }
    double& operator[](int j) { return u[static_cast<std::size_t>(j)]; }

    void validate() const;
    bool operator==(const ControlConst&) const = default;
};

struct ForceTerms {
    double chi1 = 0.0; // per-capita pressure on S_H
    double chi2 = 0.0; // on S_F
    double chi3 = 0.0; // on S_D
    double lamM = 0.0; // M / (M + C)
};

/// M / (M + C). Throws std::domain_error for M < 0 or C <= 0.
double saturation(double M, double C);

/// Control factor 1 - (u1 + u3) on human exposure, clamped at zero.
inline double human_exposure_factor(const ControlConst& u) { return std::max(0.0, 1.0 - u[0] - u[2]); }
/// Control factor 1 - (u1 + u2) on domestic dog exposure, clamped at zero.
inline double domestic_exposure_factor(const ControlConst& u) { return std::max(0.0, 1.0 - u[0] - u[1]); }

ForceTerms force_terms(const StateVec& y, const ControlConst& u, const ParamSet& p);

/// Right-hand side of the 12-compartment system. Pure; does not validate its inputs.
StateVec rhs(double t, const StateVec& y, const ControlConst& u, const ParamSet& p);

/// Sub-population totals.
inline double humans(const StateVec& y) { return y[kSH] + y[kEH] + y[kIH] + y[kRH]; }
inline double free_range_dogs(const StateVec& y) { return y[kSF] + y[kEF] + y[kIF]; }
inline double domestic_dogs(const StateVec& y) { return y[kSD] + y[kED] + y[kID] + y[kRD]; }

/// Seed infections placed on top of the demographic equilibrium. Defaults are the
/// standard scenario: 50 infectious and 20 exposed dogs of each kind, M = 0.1.
struct Seeding {
    double E_H = 0.0, I_H = 0.0;
    double E_F = 20.0, I_F = 50.0;
    double E_D = 20.0, I_D = 50.0;
    double M = 0.1;
};

/// Susceptibles at theta_i / mu_i plus the given seeds; everything else zero.
StateVec seeded_state(const ParamSet& p, const Seeding& seeds = {});

void validate_state(const StateVec& y);

} // namespace rabies
