#pragma once

// Latin hypercube sampling of parameter ranges and partial rank correlation
// coefficients of model outputs over time.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "rabies/integrate.hpp"
#include "rabies/model.hpp"

namespace rabies {

struct ParamRange {
    enum class Dist { Uniform, Normal };

    std::string name;
    Dist dist = Dist::Uniform;
    double a = 0.0; // uniform lo, or normal mean
    double b = 1.0; // uniform hi, or normal sd
    std::string source = "custom";

    static ParamRange uniform(std::string name, double lo, double hi, std::string source = "custom");
    /// Normal truncated to positive values.
    static ParamRange normal(std::string name, double mean, double sd, std::string source = "custom");

    /// Maps a probability in [0, 1) through the inverse CDF.
    double quantile(double u) const;
    void validate() const;
};

nlohmann::json to_json(const ParamRange& r);
/// {"name", "dist": "uniform", "lo", "hi"} or {"name", "dist": "normal", "mean", "sd"}.
ParamRange range_from_json(const nlohmann::json& j);

/// Uniform on value * (1 -/+ fraction) for each named parameter of `p`.
std::vector<ParamRange> uniform_ranges(const ParamSet& p, const std::vector<std::string>& names,
                                       double fraction = 0.25);
/// Truncated normals from the mean/std column of the calibration table.
std::vector<ParamRange> normal_ranges(const std::vector<std::string>& names);
/// Every ParamSet field, in declaration order.
std::vector<std::string> all_parameter_names();

/// N x P matrix, one stratum per sample per column, strata permuted per column.
Eigen::MatrixXd lhs_sample(const std::vector<ParamRange>& ranges, int N, std::uint64_t seed);

/// Average ranks (1-based) of a column; ties share their mean rank.
Eigen::VectorXd ranks(const Eigen::VectorXd& v);

/// PRCC of each column of X against Z.
Eigen::VectorXd prcc(const Eigen::MatrixXd& X, const Eigen::VectorXd& Z);
/// PRCC of each column of X (rows of the result) against each column of Z.
Eigen::MatrixXd prcc(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Z);

struct PrccResult {
    std::string output;
    std::vector<double> times;
    std::vector<std::string> params;
    /// times x params.
    Eigen::MatrixXd coefficients;
    int N = 0;
    std::uint64_t seed = 0;
    int dropped = 0;

    double at(double t, const std::string& param) const;
};

struct PrccStudy {
    std::vector<ParamRange> ranges;
    int N = 1000;
    std::uint64_t seed = 20240611;
    std::vector<std::string> outputs{"I_H", "I_F", "I_D", "M"};
    std::vector<double> sample_times{5.0, 10.0, 15.0, 20.0};
    Seeding seeds;
    int jobs = 1;
};

/// Runs one uncontrolled simulation per LHS row, from `y0` or, when absent,
/// from seeded_state of the row's parameters. Rows whose integration fails
/// are dropped; more than 5% dropped rows raise NumericError.
std::vector<PrccResult> prcc_study(const PrccStudy& study, const ParamSet& p_base,
                                   const std::optional<StateVec>& y0, const TimeGrid& grid);

/// `time,param,prcc`.
void write_prcc_csv(std::ostream& out, const PrccResult& r);

} // namespace rabies
