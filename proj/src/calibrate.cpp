#include "rabies/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "rabies/csv.hpp"
#include "rabies/errors.hpp"
#include "rabies/integrate.hpp"

namespace rabies {

void IncidenceSeries::validate() const
{
    if (years.size() != cases.size()) throw ConfigError("incidence series: years and cases differ in length");
    if (years.empty()) throw ConfigError("incidence series is empty");
    for (std::size_t i = 0; i < years.size(); ++i) {
        if (i > 0 && years[i] <= years[i - 1]) throw ConfigError("incidence years must be strictly increasing");
        if (!std::isfinite(cases[i]) || cases[i] < 0.0) throw ConfigError("incidence cases must be >= 0");
    }
}

IncidenceSeries parse_incidence_csv(std::istream& in)
{
    const csv::Table t = csv::parse(in);
    const auto col = [&](const std::string& name) {
        const auto it = std::find(t.header.begin(), t.header.end(), name);
        if (it == t.header.end()) throw ConfigError("incidence CSV needs a '" + name + "' column");
        return static_cast<std::size_t>(it - t.header.begin());
    };
    const std::size_t cy = col("year");
    const std::size_t cc = col("cases");
    IncidenceSeries s;
    for (const auto& row : t.rows) {
        if (row.size() <= std::max(cy, cc)) throw ConfigError("incidence CSV row has too few cells");
        try {
            std::size_t used = 0;
            s.years.push_back(std::stoi(row[cy], &used));
            if (used != row[cy].size()) throw std::invalid_argument(row[cy]);
            s.cases.push_back(std::stod(row[cc], &used));
            if (used != row[cc].size()) throw std::invalid_argument(row[cc]);
        } catch (const std::logic_error&) {
            throw ConfigError("incidence CSV: cannot parse row '" + row[cy] + "," + row[cc] + "'");
        }
    }
    s.validate();
    return s;
}

IncidenceSeries read_incidence_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open incidence data '" + path + "'");
    return parse_incidence_csv(in);
}

StateVec euler_step(const ParamSet& p, const StateVec& y, double dt) { return y + dt * rhs(0.0, y, {}, p); }

std::vector<double> predict_incidence(const ParamSet& p, const StateVec& y0, const std::vector<int>& years,
                                      double dt)
{
    if (!(dt > 0.0 && dt <= 0.05)) throw ConfigError("predict_incidence needs 0 < dt <= 0.05");
    if (years.empty()) return {};
    validate_state(y0);

    std::vector<double> out;
    out.reserve(years.size());
    StateVec y = y0;
    long done = 0;
    for (int year : years) {
        const double span = year - years.front();
        if (span < 0) throw ConfigError("predict_incidence needs increasing years");
        const long target = std::lround(span / dt);
        for (; done < target; ++done) {
            y = euler_step(p, y, dt);
            for (int c = 0; c < kNumStates; ++c) {
                if (!std::isfinite(y[c]) || y[c] < -kBlowupTolerance) {
                    throw NumericError("Euler blow-up in " +
                                       std::string(compartment_names()[static_cast<std::size_t>(c)]) +
                                       "; reduce the step size dt");
                }
                y[c] = std::max(y[c], 0.0);
            }
        }
        out.push_back(y[kIH]);
    }
    return out;
}

double mse(const std::vector<double>& observed, const std::vector<double>& predicted)
{
    if (observed.size() != predicted.size()) throw ConfigError("mse: series lengths differ");
    if (observed.empty()) throw ConfigError("mse: empty series");
    double s = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) s += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
    return s / static_cast<double>(observed.size());
}

void NmCoefficients::validate() const
{
    if (!(reflection > 0.0)) throw ConfigError("Nelder-Mead reflection must be > 0");
    if (!(expansion > 1.0)) throw ConfigError("Nelder-Mead expansion must be > 1");
    if (!(contraction > 0.0 && contraction < 1.0)) throw ConfigError("Nelder-Mead contraction must be in (0, 1)");
    if (!(shrink > 0.0 && shrink < 1.0)) throw ConfigError("Nelder-Mead shrink must be in (0, 1)");
}

void FitConfig::validate() const
{
    nm.validate();
    if (bounds.size() != x0.size()) throw ConfigError("fit: bounds and x0 differ in length");
    if (!free_params.empty() && free_params.size() != x0.size()) {
        throw ConfigError("fit: free_params and x0 differ in length");
    }
    for (const auto& n : free_params) {
        if (!ParamSet::has(n)) throw ConfigError("fit: unknown parameter '" + n + "'");
    }
    for (std::size_t i = 0; i < x0.size(); ++i) {
        const Bound& b = bounds[i];
        if (!(b.lo < b.hi)) throw ConfigError("fit: bound " + std::to_string(i) + " needs lo < hi");
        if (!(x0[i] > b.lo && x0[i] < b.hi)) {
            throw ConfigError("fit: x0[" + std::to_string(i) + "] = " + std::to_string(x0[i]) +
                              " is not strictly inside its bounds");
        }
    }
    if (max_evals < 1) throw ConfigError("fit: max_evals must be >= 1");
    if (!(tolerance > 0.0)) throw ConfigError("fit: tolerance must be > 0");
    if (!(x_tolerance > 0.0)) throw ConfigError("fit: x_tolerance must be > 0");
    if (!(dt > 0.0 && dt <= 0.05)) throw ConfigError("fit: dt must be in (0, 0.05]");
}

nlohmann::json to_json(const FitConfig& c)
{
    nlohmann::json bounds = nlohmann::json::array();
    for (const auto& b : c.bounds) {
        auto side = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
        bounds.push_back({side(b.lo), side(b.hi)});
    }
    return {{"free_params", c.free_params},
            {"bounds", bounds},
            {"x0", c.x0},
            {"nm",
             {{"reflection", c.nm.reflection},
              {"expansion", c.nm.expansion},
              {"contraction", c.nm.contraction},
              {"shrink", c.nm.shrink}}},
            {"max_evals", c.max_evals},
            {"tolerance", c.tolerance},
            {"x_tolerance", c.x_tolerance},
            {"dt", c.dt}};
}

namespace {

// Bijection between a bounded coordinate and the real line.
struct Transform {
    Bound b;

    double to_free(double x) const
    {
        const bool lo = std::isfinite(b.lo);
        const bool hi = std::isfinite(b.hi);
        if (lo && hi) return std::log((x - b.lo) / (b.hi - x));
        if (lo) return std::log(x - b.lo);
        if (hi) return -std::log(b.hi - x);
        return x;
    }

    double from_free(double z) const
    {
        const bool lo = std::isfinite(b.lo);
        const bool hi = std::isfinite(b.hi);
        double x = z;
        if (lo && hi) {
            x = b.lo + (b.hi - b.lo) / (1.0 + std::exp(-z));
        } else if (lo) {
            x = b.lo + std::exp(z);
        } else if (hi) {
            x = b.hi - std::exp(-z);
        }
        return std::clamp(x, b.lo, b.hi);
    }
};

} // namespace

NmResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, const FitConfig& cfg)
{
    cfg.nm.validate();
    if (cfg.x0.empty()) throw ConfigError("nelder_mead: no free variables");
    if (cfg.bounds.size() != cfg.x0.size()) throw ConfigError("nelder_mead: bounds and x0 differ in length");
    for (std::size_t i = 0; i < cfg.x0.size(); ++i) {
        if (!(cfg.x0[i] > cfg.bounds[i].lo && cfg.x0[i] < cfg.bounds[i].hi)) {
            throw ConfigError("nelder_mead: x0 is not strictly inside its bounds");
        }
    }

    const std::size_t n = cfg.x0.size();
    std::vector<Transform> tr;
    for (const auto& b : cfg.bounds) tr.push_back({b});

    NmResult res;
    auto to_x = [&](const std::vector<double>& z) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = tr[i].from_free(z[i]);
        return x;
    };
    auto eval = [&](const std::vector<double>& z) {
        ++res.evals;
        const double v = f(to_x(z));
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    // Initial simplex: x0 and one 5% perturbation per coordinate.
    std::vector<std::vector<double>> simplex(n + 1, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) simplex[0][i] = tr[i].to_free(cfg.x0[i]);
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<double> x = cfg.x0;
        const double step = x[k] != 0.0 ? 0.05 * x[k] : 0.00025;
        x[k] = x[k] + step < cfg.bounds[k].hi ? x[k] + step : x[k] - step;
        if (!(x[k] > cfg.bounds[k].lo)) x[k] = 0.5 * (cfg.x0[k] + cfg.bounds[k].hi);
        for (std::size_t i = 0; i < n; ++i) simplex[k + 1][i] = tr[i].to_free(x[i]);
    }
    std::vector<double> fv(n + 1);
    for (std::size_t k = 0; k <= n; ++k) fv[k] = eval(simplex[k]);
    if (std::none_of(fv.begin(), fv.end(), [](double v) { return std::isfinite(v); })) {
        throw NumericError("nelder_mead: objective is not finite at any initial vertex");
    }

    const auto& c = cfg.nm;
    std::vector<std::size_t> order(n + 1);
    auto sort_simplex = [&] {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        std::vector<std::vector<double>> s2;
        std::vector<double> f2;
        for (auto k : order) {
            s2.push_back(simplex[k]);
            f2.push_back(fv[k]);
        }
        simplex = std::move(s2);
        fv = std::move(f2);
    };
    auto combine = [&](const std::vector<double>& a, const std::vector<double>& b, double t) {
        // a + t (b - a)
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = a[i] + t * (b[i] - a[i]);
        return r;
    };

    sort_simplex();
    while (true) {
        double diameter = 0.0;
        for (std::size_t k = 1; k <= n; ++k) {
            for (std::size_t i = 0; i < n; ++i) diameter = std::max(diameter, std::abs(simplex[k][i] - simplex[0][i]));
        }
        if (fv[n] - fv[0] < cfg.tolerance && diameter < cfg.x_tolerance) {
            res.converged = true;
            break;
        }
        if (res.evals >= cfg.max_evals) break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[k][i] / static_cast<double>(n);
        }
        const std::vector<double> xr = combine(centroid, simplex[n], -c.reflection);
        const double fr = eval(xr);
        if (fr < fv[0]) {
            const std::vector<double> xe = combine(centroid, xr, c.expansion);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
        } else if (fr < fv[n - 1]) {
            simplex[n] = xr;
            fv[n] = fr;
        } else {
            const bool outside = fr < fv[n];
            const std::vector<double> xc = combine(centroid, outside ? xr : simplex[n], c.contraction);
            const double fc = eval(xc);
            if (outside ? fc <= fr : fc < fv[n]) {
                simplex[n] = xc;
                fv[n] = fc;
            } else {
                for (std::size_t k = 1; k <= n; ++k) {
                    simplex[k] = combine(simplex[0], simplex[k], c.shrink);
                    fv[k] = eval(simplex[k]);
                }
            }
        }
        sort_simplex();
    }

    res.x = to_x(simplex[0]);
    res.fx = fv[0];
    return res;
}

ParamSet FitResult::apply(const ParamSet& base) const
{
    ParamSet p = base;
    for (std::size_t i = 0; i < names.size(); ++i) p.set(names[i], estimates[i]);
    return p;
}

FitResult fit(const IncidenceSeries& data, const FitConfig& cfg, const ParamSet& p_base,
              const std::optional<StateVec>& y0, const Seeding& seeds)
{
    data.validate();
    cfg.validate();
    p_base.validate();
    if (cfg.free_params.size() != cfg.x0.size()) throw ConfigError("fit: free_params and x0 differ in length");

    FitResult r;
    r.names = cfg.free_params;
    r.years = data.years;
    r.observed = data.cases;

    auto predict = [&](const std::vector<double>& x) {
        ParamSet q = p_base;
        for (std::size_t i = 0; i < x.size(); ++i) q.set(cfg.free_params[i], x[i]);
        q.validate();
        return predict_incidence(q, y0 ? *y0 : seeded_state(q, seeds), data.years, cfg.dt);
    };
    auto objective = [&](const std::vector<double>& x) {
        try {
            return mse(data.cases, predict(x));
        } catch (const NumericError&) {
            return std::numeric_limits<double>::infinity();
        } catch (const ConfigError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    r.mse_at_x0 = objective(cfg.x0);
    if (cfg.x0.empty()) {
        r.mse = r.mse_at_x0;
        r.converged = true;
        r.predicted = predict({});
        return r;
    }
    const NmResult nm = nelder_mead(objective, cfg);
    r.estimates = nm.x;
    r.mse = nm.fx;
    r.evals = nm.evals;
    r.converged = nm.converged;
    r.predicted = predict(nm.x);
    return r;
}

nlohmann::json to_json(const FitResult& r)
{
    nlohmann::json est = nlohmann::json::object();
    for (std::size_t i = 0; i < r.names.size(); ++i) est[r.names[i]] = r.estimates[i];
    return {{"estimates", est},   {"mse", r.mse}, {"mse_at_x0", r.mse_at_x0},
            {"evals", r.evals},   {"converged", r.converged}};
}

void write_fit_csv(std::ostream& out, const FitResult& r)
{
    csv::write_row(out, std::vector<std::string>{"year", "observed", "predicted"});
    for (std::size_t i = 0; i < r.years.size(); ++i) {
        csv::write_row(out, std::vector<std::string>{std::to_string(r.years[i]), csv::format(r.observed[i]),
                                                     csv::format(r.predicted[i])});
    }
}

} // namespace rabies
