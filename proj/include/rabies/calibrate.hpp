#pragma once

// Fitting model parameters to yearly human incidence with a bounded
// Nelder-Mead simplex search on the mean squared error.

#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rabies/model.hpp"

namespace rabies {

struct IncidenceSeries {
    std::vector<int> years;
    std::vector<double> cases;

    /// Equal lengths, at least one point, strictly increasing years, cases >= 0.
    void validate() const;
};

/// Reads `year,cases`; '#' lines are comments. Throws IoError / ConfigError.
IncidenceSeries read_incidence_csv(const std::string& path);
IncidenceSeries parse_incidence_csv(std::istream& in);

/// One explicit Euler step of the uncontrolled system.
StateVec euler_step(const ParamSet& p, const StateVec& y, double dt);

/// I_H at each year, integrating from y0 at years.front() with explicit Euler
/// steps of size dt (at most 0.05). Throws NumericError on blow-up.
std::vector<double> predict_incidence(const ParamSet& p, const StateVec& y0, const std::vector<int>& years,
                                      double dt = 0.01);

/// Mean of squared differences. Throws ConfigError on length mismatch.
double mse(const std::vector<double>& observed, const std::vector<double>& predicted);

struct NmCoefficients {
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;

    void validate() const;
};

struct Bound {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

struct FitConfig {
    std::vector<std::string> free_params;
    std::vector<Bound> bounds;
    std::vector<double> x0;
    NmCoefficients nm;
    int max_evals = 2000;
    /// Stop when max f - min f over the simplex falls below `tolerance` and
    /// every vertex lies within `x_tolerance` of the best one in the search space.
    double tolerance = 1e-12;
    double x_tolerance = 1e-8;
    double dt = 0.01;

    /// Checks lengths, coefficients, and that x0 lies strictly inside its bounds.
    void validate() const;
};

nlohmann::json to_json(const FitConfig& c);

struct NmResult {
    std::vector<double> x;
    double fx = 0.0;
    int evals = 0;
    bool converged = false;
};

/// Minimizes f over the box given by cfg.bounds, searching in a space where
/// two-sided bounds are logit-mapped and one-sided bounds log-mapped. Only
/// cfg.x0, bounds, nm, max_evals and tolerance are used.
NmResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, const FitConfig& cfg);

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> estimates;
    double mse = 0.0;
    double mse_at_x0 = 0.0;
    int evals = 0;
    bool converged = false;
    std::vector<int> years;
    std::vector<double> observed;
    std::vector<double> predicted;

    ParamSet apply(const ParamSet& base) const;
};

/// Fits cfg.free_params. Without `y0`, each candidate starts from
/// seeded_state(candidate, seeds).
FitResult fit(const IncidenceSeries& data, const FitConfig& cfg, const ParamSet& p_base,
              const std::optional<StateVec>& y0 = std::nullopt, const Seeding& seeds = {});

/// estimates, mse, mse_at_x0, evals, converged.
nlohmann::json to_json(const FitResult& r);
/// `year,observed,predicted`.
void write_fit_csv(std::ostream& out, const FitResult& r);

} // namespace rabies
