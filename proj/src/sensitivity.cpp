#include "rabies/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>

#include <Eigen/QR>
#include <boost/math/distributions/normal.hpp>

#include "rabies/csv.hpp"
#include "rabies/errors.hpp"
#include "rabies/parallel.hpp"

namespace rabies {

ParamRange ParamRange::uniform(std::string name, double lo, double hi, std::string source)
{
    return {std::move(name), Dist::Uniform, lo, hi, std::move(source)};
}

ParamRange ParamRange::normal(std::string name, double mean, double sd, std::string source)
{
    return {std::move(name), Dist::Normal, mean, sd, std::move(source)};
}

double ParamRange::quantile(double u) const
{
    if (dist == Dist::Uniform) return a + (b - a) * u;
    const boost::math::normal_distribution<double> nd(a, b);
    const double p0 = boost::math::cdf(nd, 0.0);
    const double q = std::min(p0 + u * (1.0 - p0), std::nextafter(1.0, 0.0));
    // The lower edge of the first stratum maps onto the truncation point.
    if (q <= p0 || q <= 0.0) return std::max(a, 1.0) * 1e-12;
    return std::max(boost::math::quantile(nd, q), std::max(a, 1.0) * 1e-12);
}

void ParamRange::validate() const
{
    if (!ParamSet::has(name)) throw ConfigError("unknown parameter '" + name + "' in sensitivity range");
    if (!std::isfinite(a) || !std::isfinite(b)) throw ConfigError("range for '" + name + "' is not finite");
    if (dist == Dist::Uniform) {
        if (!(a > 0.0 && a < b)) throw ConfigError("uniform range for '" + name + "' needs 0 < lo < hi");
    } else if (!(b > 0.0)) {
        throw ConfigError("normal range for '" + name + "' needs sd > 0");
    }
}

nlohmann::json to_json(const ParamRange& r)
{
    if (r.dist == ParamRange::Dist::Uniform) {
        return {{"name", r.name}, {"dist", "uniform"}, {"lo", r.a}, {"hi", r.b}, {"source", r.source}};
    }
    return {{"name", r.name}, {"dist", "normal"}, {"mean", r.a}, {"sd", r.b}, {"source", r.source}};
}

ParamRange range_from_json(const nlohmann::json& j)
{
    try {
        const std::string name = j.at("name").get<std::string>();
        const std::string dist = j.value("dist", std::string("uniform"));
        const std::string source = j.value("source", std::string("custom"));
        ParamRange r;
        if (dist == "uniform") {
            r = ParamRange::uniform(name, j.at("lo").get<double>(), j.at("hi").get<double>(), source);
        } else if (dist == "normal") {
            r = ParamRange::normal(name, j.at("mean").get<double>(), j.at("sd").get<double>(), source);
        } else {
            throw ConfigError("unknown distribution '" + dist + "' for '" + name + "' (expected uniform|normal)");
        }
        r.validate();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed sensitivity range: ") + e.what());
    }
}

std::vector<std::string> all_parameter_names()
{
    std::vector<std::string> out;
    for (auto n : ParamSet::names()) out.emplace_back(n);
    return out;
}

std::vector<ParamRange> uniform_ranges(const ParamSet& p, const std::vector<std::string>& names, double fraction)
{
    if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("range fraction must be in (0, 1)");
    std::vector<ParamRange> out;
    for (const auto& n : names) {
        if (!ParamSet::has(n)) throw ConfigError("unknown parameter '" + n + "'");
        const double v = p.get(n);
        out.push_back(ParamRange::uniform(n, v * (1.0 - fraction), v * (1.0 + fraction), "uniform"));
        out.back().validate();
    }
    return out;
}

std::vector<ParamRange> normal_ranges(const std::vector<std::string>& names)
{
    static const std::map<std::string, std::pair<double, double>, std::less<>> table{
        {"theta1", {1996.691056, 4.4679553}}, {"tau1", {0.000402, 4e-6}},       {"tau2", {0.000502, 1.44e-4}},
        {"tau3", {0.000302, 2e-6}},           {"beta1", {0.166124, 7.68e-4}},   {"nu3", {0.003367, 3.3348e-3}},
        {"beta2", {0.5402435, 3.7815e-4}},    {"beta3", {0.9996505, 1.6521e-4}}, {"mu1", {0.014309, 1.53e-4}},
        {"sigma1", {1.03166, 4.47e-3}},       {"theta2", {1002.060222, 2.913594}}, {"kappa1", {0.000040, 2.8e-5}},
        {"kappa2", {0.000066, 2.2e-5}},       {"kappa3", {0.000025, 2.1e-5}},   {"gamma", {0.166520, 2.07e-4}},
        {"nu1", {0.001479, 6.77e-4}},         {"sigma2", {0.089778, 3.14e-4}},  {"mu4", {0.080313, 4.42e-4}},
        {"mu2", {0.066634, 1.58e-4}},         {"theta3", {1201.922230, 2.718444}}, {"psi1", {0.000238, 2.28e-4}},
        {"psi2", {0.000233, 2.36e-4}},        {"psi3", {0.0003, 1.91e-4}},      {"mu3", {0.073565, 8.056e-3}},
        {"sigma3", {0.085697, 8.056e-3}},     {"gamma1", {0.169578, 4.117e-3}}, {"gamma2", {0.090154, 2.18e-4}},
        {"gamma3", {0.050128, 9.1e-5}},       {"nu2", {0.007485, 2.101e-3}},    {"rho1", {9.960366, 5.605e-2}},
        {"rho2", {8.058211, 8.2322e-2}},      {"rho3", {14.958502, 5.8686e-2}}, {"C", {0.003005, 8e-6}},
    };
    std::vector<ParamRange> out;
    for (const auto& n : names) {
        const auto it = table.find(n);
        if (it == table.end()) throw ConfigError("unknown parameter '" + n + "'");
        out.push_back(ParamRange::normal(n, it->second.first, it->second.second, "normal"));
    }
    return out;
}

Eigen::MatrixXd lhs_sample(const std::vector<ParamRange>& ranges, int N, std::uint64_t seed)
{
    if (N < 2) throw ConfigError("LHS needs N >= 2");
    if (ranges.empty()) throw ConfigError("LHS needs at least one parameter range");
    for (const auto& r : ranges) r.validate();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int P = static_cast<int>(ranges.size());
    Eigen::MatrixXd X(N, P);
    std::vector<int> perm(static_cast<std::size_t>(N));
    for (int c = 0; c < P; ++c) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int i = 0; i < N; ++i) {
            const double u = (perm[static_cast<std::size_t>(i)] + unit(rng)) / N;
            X(i, c) = ranges[static_cast<std::size_t>(c)].quantile(u);
        }
    }
    return X;
}

Eigen::VectorXd ranks(const Eigen::VectorXd& v)
{
    const Eigen::Index n = v.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return v[a] < v[b]; });
    Eigen::VectorXd r(n);
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i;
        while (j + 1 < n && v[order[static_cast<std::size_t>(j + 1)]] == v[order[static_cast<std::size_t>(i)]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (Eigen::Index k = i; k <= j; ++k) r[order[static_cast<std::size_t>(k)]] = avg;
        i = j + 1;
    }
    return r;
}

namespace {

bool is_constant(const Eigen::VectorXd& v) { return v.size() == 0 || v.maxCoeff() == v.minCoeff(); }

} // namespace

Eigen::MatrixXd prcc(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z)
{
    const Eigen::Index N = X.rows();
    const Eigen::Index P = X.cols();
    if (Z.rows() != N) throw ConfigError("prcc: X and Z have different row counts");
    if (P < 1) throw ConfigError("prcc: no parameters");
    if (N <= P + 2) {
        throw ConfigError("prcc needs more samples than parameters + 2 (N = " + std::to_string(N) +
                          ", P = " + std::to_string(P) + ")");
    }

    Eigen::MatrixXd RX(N, P);
    for (Eigen::Index c = 0; c < P; ++c) {
        if (is_constant(X.col(c))) throw NumericError("prcc: input column " + std::to_string(c) + " is constant");
        RX.col(c) = ranks(X.col(c));
    }
    Eigen::MatrixXd RZ(N, Z.cols());
    for (Eigen::Index k = 0; k < Z.cols(); ++k) {
        if (is_constant(Z.col(k))) throw NumericError("prcc: output column " + std::to_string(k) + " is constant");
        RZ.col(k) = ranks(Z.col(k));
    }

    Eigen::MatrixXd out(P, Z.cols());
    Eigen::MatrixXd D(N, P);
    for (Eigen::Index i = 0; i < P; ++i) {
        // Intercept plus every other ranked input.
        D.col(0).setOnes();
        for (Eigen::Index c = 0, k = 1; c < P; ++c) {
            if (c != i) D.col(k++) = RX.col(c);
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D);
        if (qr.rank() < P) {
            std::string cols;
            const auto& perm = qr.colsPermutation().indices();
            for (Eigen::Index k = qr.rank(); k < P; ++k) {
                const Eigen::Index d = perm[k];
                const Eigen::Index src = d == 0 ? -1 : (d - 1 < i ? d - 1 : d);
                cols += (cols.empty() ? "" : ", ") + (src < 0 ? std::string("intercept") : std::to_string(src));
            }
            throw NumericError("prcc: rank-deficient regression for column " + std::to_string(i) +
                               "; collinear columns: " + cols);
        }
        const Eigen::VectorXd ex = RX.col(i) - D * qr.solve(RX.col(i));
        const Eigen::MatrixXd EZ = RZ - D * qr.solve(RZ);
        for (Eigen::Index k = 0; k < Z.cols(); ++k) {
            const double denom = ex.norm() * EZ.col(k).norm();
            out(i, k) = denom > 0.0 ? std::clamp(ex.dot(EZ.col(k)) / denom, -1.0, 1.0) : 0.0;
        }
    }
    return out;
}

Eigen::VectorXd prcc(const Eigen::MatrixXd& X, const Eigen::VectorXd& Z)
{
    return prcc(X, Eigen::MatrixXd(Z)).col(0);
}

double PrccResult::at(double t, const std::string& param) const
{
    const auto ti = std::find(times.begin(), times.end(), t);
    const auto pi = std::find(params.begin(), params.end(), param);
    if (ti == times.end() || pi == params.end()) throw ConfigError("no PRCC entry for " + param);
    return coefficients(ti - times.begin(), pi - params.begin());
}

std::vector<PrccResult> prcc_study(const PrccStudy& study, const ParamSet& p_base,
                                   const std::optional<StateVec>& y0, const TimeGrid& grid)
{
    p_base.validate();
    grid.validate();
    const int P = static_cast<int>(study.ranges.size());
    if (study.N <= P + 2) {
        throw ConfigError("PRCC study needs N > P + 2 (N = " + std::to_string(study.N) + ", P = " + std::to_string(P) +
                          ")");
    }
    if (study.outputs.empty() || study.sample_times.empty()) throw ConfigError("PRCC study needs outputs and times");
    std::vector<int> out_idx;
    for (const auto& o : study.outputs) out_idx.push_back(compartment_index(o));
    std::vector<int> time_idx;
    for (double t : study.sample_times) time_idx.push_back(grid.index_of(t));

    const Eigen::MatrixXd X = lhs_sample(study.ranges, study.N, study.seed);
    const int K = static_cast<int>(out_idx.size() * time_idx.size());
    Eigen::MatrixXd Y(study.N, K);
    std::vector<char> ok(static_cast<std::size_t>(study.N), 1);

    parallel_for(study.N, study.jobs, [&](int row) {
        ParamSet q = p_base;
        for (int c = 0; c < P; ++c) q.set(study.ranges[static_cast<std::size_t>(c)].name, X(row, c));
        try {
            q.validate();
            const StateVec start = y0 ? *y0 : seeded_state(q, study.seeds);
            const Trajectory tr = rk4_forward(q, ControlPath::zero(grid), start, grid);
            int k = 0;
            for (int o : out_idx) {
                for (int ti : time_idx) Y(row, k++) = tr.at(ti)[o];
            }
        } catch (const NumericError&) {
            ok[static_cast<std::size_t>(row)] = 0;
        }
    });

    const int kept = static_cast<int>(std::count(ok.begin(), ok.end(), 1));
    const int dropped = study.N - kept;
    if (dropped > 0.05 * study.N) {
        throw NumericError("PRCC study dropped " + std::to_string(dropped) + " of " + std::to_string(study.N) +
                           " rows after integration failures");
    }
    Eigen::MatrixXd Xk(kept, P);
    Eigen::MatrixXd Yk(kept, K);
    for (int i = 0, r = 0; i < study.N; ++i) {
        if (!ok[static_cast<std::size_t>(i)]) continue;
        Xk.row(r) = X.row(i);
        Yk.row(r) = Y.row(i);
        ++r;
    }
    const Eigen::MatrixXd coef = prcc(Xk, Yk);

    std::vector<PrccResult> results;
    std::vector<std::string> params;
    for (const auto& r : study.ranges) params.push_back(r.name);
    const int T = static_cast<int>(time_idx.size());
    for (std::size_t o = 0; o < out_idx.size(); ++o) {
        PrccResult res{study.outputs[o], study.sample_times, params, Eigen::MatrixXd(T, P), study.N, study.seed,
                       dropped};
        for (int t = 0; t < T; ++t) res.coefficients.row(t) = coef.col(static_cast<int>(o) * T + t).transpose();
        results.push_back(std::move(res));
    }
    return results;
}

void write_prcc_csv(std::ostream& out, const PrccResult& r)
{
    csv::write_row(out, std::vector<std::string>{"time", "param", "prcc"});
    for (std::size_t t = 0; t < r.times.size(); ++t) {
        for (std::size_t c = 0; c < r.params.size(); ++c) {
            csv::write_row(out, std::vector<std::string>{
                                    csv::format(r.times[t]), r.params[c],
                                    csv::format(r.coefficients(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)))});
        }
    }
}

} // namespace rabies
