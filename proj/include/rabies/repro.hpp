#pragma once

// Disease-free equilibrium, effective reproduction number, endemic equilibrium,
// local stability of the disease-free state and reproduction-number grids.

#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "rabies/model.hpp"

namespace rabies {

inline constexpr int kNumInfected = 7;
using InfectedMatrix = Eigen::Matrix<double, kNumInfected, kNumInfected>;

/// Infected subsystem ordering used by the next-generation matrices.
enum InfectedIndex : int { kInfEH = 0, kInfIH, kInfEF, kInfIF, kInfED, kInfID, kInfM };

/// New-infection (F) and transition (V) Jacobians at the disease-free equilibrium.
struct NgmPair {
    InfectedMatrix F;
    InfectedMatrix V;
};

/// Which new-infection Jacobian to assemble.
enum class NgmMode {
    /// Direct dog/human contact only: the environmental column of F is zero.
    Displayed,
    /// Adds the linearised environmental terms d(lambda(M))/dM = 1/C at M = 0.
    WithEnvironment,
};

struct ReBreakdown {
    double R21 = 0.0; // free-range -> free-range
    double R23 = 0.0; // domestic -> free-range
    double R31 = 0.0; // free-range -> domestic
    double R33 = 0.0; // domestic -> domestic
    double a3 = 0.0;  // probability-weighted infectious period of an exposed domestic dog
    double Re = 0.0;
};

StateVec dfe(const ParamSet& p);

/// Closed-form effective reproduction number: the larger root of the 2x2
/// dog-to-dog next-generation block.
ReBreakdown effective_r(const ParamSet& p, const ControlConst& u = {});

NgmPair ngm_matrices(const ParamSet& p, const ControlConst& u = {}, NgmMode mode = NgmMode::Displayed);

/// Spectral radius of F V^-1. Throws ConfigError if V is singular.
double spectral_r(const ParamSet& p, const ControlConst& u = {}, NgmMode mode = NgmMode::Displayed);

/// Largest |eigenvalue| / largest real part of a dense matrix, computed after
/// diagonal balancing.
double spectral_radius(const Eigen::MatrixXd& A);
double max_real_eigenvalue(const Eigen::MatrixXd& A);

struct EndemicOptions {
    double damping = 0.5;
    int max_iterations = 10000;
    double tolerance = 1e-13;  // relative change of the forces of infection
    double seed_years = 200.0; // forward integration used to seed the iteration
    int seed_steps = 20000;
};

/// Endemic equilibrium. Throws NumericError when Re < 1 or on non-convergence.
StateVec endemic_eq(const ParamSet& p, const ControlConst& u = {}, const EndemicOptions& opts = {});

/// Max real part of the eigenvalues of the central-difference Jacobian of rhs at dfe(p).
double dfe_stability(const ParamSet& p, const ControlConst& u = {});

/// Numeric Jacobian of rhs at y (central differences, step 1e-6 * max(1, |y_j|)).
Eigen::Matrix<double, kNumStates, kNumStates> numeric_jacobian(const StateVec& y, const ControlConst& u,
                                                               const ParamSet& p);

/// One axis of an Re grid: a control name (u1..u4) or a parameter name.
struct GridAxis {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
    int n = 20;

    double value(int i) const { return n == 1 ? lo : lo + (hi - lo) * i / (n - 1); }
};

struct ReGrid {
    GridAxis axis1;
    GridAxis axis2;
    /// Row-major: values[i * axis2.n + j] at (axis1.value(i), axis2.value(j)).
    std::vector<double> values;

    double at(int i, int j) const { return values[static_cast<std::size_t>(i * axis2.n + j)]; }
};

/// Evaluates effective_r over the Cartesian grid. `jobs` bounds the worker threads.
ReGrid re_grid(const ParamSet& p, const GridAxis& axis1, const GridAxis& axis2, const ControlConst& base_u = {},
               int jobs = 1);

/// `axis1,axis2,Re` header then one row per grid point.
void write_re_grid_csv(std::ostream& out, const ReGrid& grid);
nlohmann::json re_grid_sidecar(const ReGrid& grid, const ParamSet& p, const ControlConst& base_u);

} // namespace rabies
