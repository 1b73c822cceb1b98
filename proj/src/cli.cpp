#include "rabies/cli.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "rabies/calibrate.hpp"
#include "rabies/errors.hpp"
#include "rabies/integrate.hpp"
#include "rabies/json_io.hpp"
#include "rabies/model.hpp"
#include "rabies/optctl.hpp"
#include "rabies/parallel.hpp"
#include "rabies/repro.hpp"
#include "rabies/sensitivity.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rabies::cli {

json default_config()
{
    const Seeding s;
    return {
        {"preset", "estimated"},
        {"parameters", json::object()},
        {"seeding",
         {{"E_H", s.E_H}, {"I_H", s.I_H}, {"E_F", s.E_F}, {"I_F", s.I_F}, {"E_D", s.E_D}, {"I_D", s.I_D}, {"M", s.M}}},
        {"initial_state", nullptr},
        {"grid", {{"t0", 0.0}, {"tf", 20.0}, {"n_steps", 2000}}},
        {"controls", {{"u1", 0.0}, {"u2", 0.0}, {"u3", 0.0}, {"u4", 0.0}}},
        {"strategy", "A"},
        {"weights", to_json(Weights{})},
        {"sweep", {{"omega", 0.5}, {"tol", 1e-4}, {"max_iter", 200}}},
        {"reff", {{"axis1", nullptr}, {"axis2", nullptr}}},
        {"sensitivity",
         {{"N", 1000},
          {"seed", 20240611},
          {"distribution", "uniform"},
          {"fraction", 0.25},
          {"params", nullptr},
          {"ranges", nullptr},
          {"outputs", {"I_H", "I_F", "I_D", "M"}},
          {"times", {5.0, 10.0, 15.0, 20.0}}}},
        {"fit",
         {{"data", nullptr},
          {"free_params", {"theta1", "tau1", "beta1"}},
          {"bounds", nullptr},
          {"x0", nullptr},
          {"max_evals", 2000},
          {"tolerance", 1e-12},
          {"x_tolerance", 1e-8},
          {"dt", 0.01},
          {"nm", {{"reflection", 1.0}, {"expansion", 2.0}, {"contraction", 0.5}, {"shrink", 0.5}}}}},
        {"output", {{"dir", nullptr}}},
    };
}

namespace {

// Objects with a non-empty default have a fixed key set; empty or null
// defaults accept anything and are checked by their own parsers.
void merge(json& dst, const json& src, const std::string& path)
{
    if (!src.is_object()) throw ConfigError("configuration" + (path.empty() ? "" : " '" + path + "'") +
                                            " must be a JSON object");
    const bool strict = dst.is_object() && !dst.empty();
    for (const auto& [key, value] : src.items()) {
        const std::string sub = path.empty() ? key : path + "." + key;
        if (strict && !dst.contains(key)) throw ConfigError("unknown configuration key '" + sub + "'");
        json& slot = dst[key];
        if (slot.is_object() && !slot.empty() && value.is_object()) {
            merge(slot, value, sub);
        } else {
            slot = value;
        }
    }
}

} // namespace

void apply_set(json& config, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    std::vector<std::string> parts;
    std::stringstream ss(key);
    for (std::string part; std::getline(ss, part, '.');) {
        if (part.empty()) throw ConfigError("--set key '" + key + "' has an empty path segment");
        parts.push_back(part);
    }
    json patch = value;
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
    merge(config, patch, "");
}

json resolve_config(const std::string& config_path, const std::vector<std::string>& sets)
{
    json cfg = default_config();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw IoError("cannot open config file '" + config_path + "'");
        json file;
        try {
            file = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config file '" + config_path + "' is not valid JSON: " + e.what());
        }
        merge(cfg, file, "");
    }
    for (const auto& s : sets) apply_set(cfg, s);
    return cfg;
}

namespace {

struct Setup {
    json cfg;
    ParamSet p;
    Seeding seeds;
    TimeGrid grid;
    int jobs = 1;
};

Seeding seeding_from_json(const json& j)
{
    Seeding s;
    const std::array<std::pair<const char*, double*>, 7> fields{{{"E_H", &s.E_H},
                                                                  {"I_H", &s.I_H},
                                                                  {"E_F", &s.E_F},
                                                                  {"I_F", &s.I_F},
                                                                  {"E_D", &s.E_D},
                                                                  {"I_D", &s.I_D},
                                                                  {"M", &s.M}}};
    for (const auto& [key, value] : j.items()) {
        const auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return key == f.first; });
        if (it == fields.end()) throw ConfigError("unknown seeding key '" + key + "'");
        const double v = value.get<double>();
        if (!std::isfinite(v) || v < 0.0) throw ConfigError("seeding '" + key + "' must be >= 0");
        *it->second = v;
    }
    return s;
}

Setup make_setup(const json& cfg, int jobs)
{
    Setup s;
    s.cfg = cfg;
    s.p = params_from_json(cfg.at("parameters"), ParamSet::preset(cfg.at("preset").get<std::string>()));
    s.seeds = seeding_from_json(cfg.at("seeding"));
    const json& g = cfg.at("grid");
    s.grid = TimeGrid{g.at("t0").get<double>(), g.at("tf").get<double>(), g.at("n_steps").get<int>()};
    s.grid.validate();
    s.jobs = jobs > 0 ? jobs : default_jobs();
    s.cfg["parameters"] = to_json(s.p);
    return s;
}

// Explicit initial state, or nothing when the config leaves it to the seeding rule.
std::optional<StateVec> explicit_state(const Setup& s, const ControlConst& u = {})
{
    const json& j = s.cfg.at("initial_state");
    if (j.is_null()) return std::nullopt;
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "seeded") return seeded_state(s.p, s.seeds);
        if (name == "dfe") return dfe(s.p);
        if (name == "endemic") return endemic_eq(s.p, u);
        throw ConfigError("initial_state '" + name + "' is not one of seeded|dfe|endemic");
    }
    StateVec y = state_from_json(j, seeded_state(s.p, s.seeds));
    validate_state(y);
    return y;
}

StateVec initial_state(Setup& s, const ControlConst& u = {})
{
    const StateVec y = explicit_state(s, u).value_or(seeded_state(s.p, s.seeds));
    s.cfg["initial_state"] = to_json(y);
    return y;
}

std::string timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y%m%dT%H%M%SZ");
    return os.str();
}

fs::path make_run_dir(const Invocation& inv, const json& cfg)
{
    std::error_code ec;
    if (!inv.run_dir.empty()) {
        fs::create_directories(inv.run_dir, ec);
        if (ec) throw IoError("cannot create run directory '" + inv.run_dir + "': " + ec.message());
        return inv.run_dir;
    }
    fs::path root = "runs";
    if (!inv.out_root.empty()) {
        root = inv.out_root;
    } else if (const json& d = cfg.at("output").at("dir"); !d.is_null()) {
        root = d.get<std::string>();
    } else if (const char* env = std::getenv("RABICTL_OUTDIR"); env && *env) {
        root = env;
    }
    fs::create_directories(root, ec);
    if (ec) throw IoError("cannot create output root '" + root.string() + "': " + ec.message());
    const std::string base = inv.command + "-" + timestamp();
    fs::path dir = root / base;
    for (int k = 1; fs::exists(dir); ++k) dir = root / (base + "-" + std::to_string(k));
    fs::create_directory(dir, ec);
    if (ec) throw IoError("cannot create run directory '" + dir.string() + "': " + ec.message());
    return dir;
}

class RunWriter {
public:
    RunWriter(fs::path dir, std::string command, const json& config)
        : dir_(std::move(dir)), command_(std::move(command)), config_(config)
    {
    }

    void text(const std::string& name, const std::string& content) const
    {
        const fs::path path = dir_ / name;
        std::ofstream out(path, std::ios::binary);
        out << content;
        out.close();
        if (!out) throw IoError("cannot write '" + path.string() + "'");
    }

    /// CSV artifact plus `<stem>.json` sidecar with the resolved configuration.
    void csv(const std::string& name, const std::string& content, json extra = json::object()) const
    {
        text(name, content);
        extra["artifact"] = name;
        extra["command"] = command_;
        extra["config"] = config_;
        text(fs::path(name).stem().string() + ".json", extra.dump(2) + "\n");
    }

    /// JSON report that embeds the resolved configuration itself.
    void report(const std::string& name, json body) const
    {
        body["command"] = command_;
        body["config"] = config_;
        text(name, body.dump(2) + "\n");
    }

    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::string command_;
    json config_;
};

ControlConst config_controls(const Setup& s)
{
    ControlConst u = controls_from_json(s.cfg.at("controls"));
    u.validate();
    return u;
}

int cmd_simulate(const Invocation& inv, Setup& s, std::ostream& out)
{
    const ControlConst u = config_controls(s);
    const StateVec y0 = initial_state(s, u);
    const Trajectory tr = rk4_forward(s.p, ControlPath::constant(s.grid, u), y0, s.grid);

    const RunWriter w(make_run_dir(inv, s.cfg), inv.command, s.cfg);
    std::ostringstream csv;
    write_trajectory_csv(csv, tr);
    w.csv("trajectory.csv", csv.str(), {{"clamped_undershoots", tr.clamped}});
    const StateVec& yf = tr.states.back();
    out << "run directory: " << w.dir().string() << "\n"
        << "I_H(tf) = " << yf[kIH] << ", I_F(tf) = " << yf[kIF] << ", I_D(tf) = " << yf[kID] << ", M(tf) = "
        << yf[kM] << "\n";
    return 0;
}

GridAxis axis_from_json(const json& j)
{
    GridAxis a;
    a.name = j.at("name").get<std::string>();
    a.lo = j.value("lo", 0.0);
    a.hi = j.value("hi", 1.0);
    a.n = j.value("n", 20);
    return a;
}

int cmd_reff(const Invocation& inv, Setup& s, std::ostream& out)
{
    const ControlConst u = config_controls(s);
    const json& r = s.cfg.at("reff");
    const json& a1 = r.at("axis1");
    const json& a2 = r.at("axis2");
    if (a1.is_null() != a2.is_null()) throw ConfigError("reff grid needs both axis1 and axis2");

    if (a1.is_null()) {
        const ReBreakdown b = effective_r(s.p, u);
        const json body{{"R21", b.R21},
                        {"R23", b.R23},
                        {"R31", b.R31},
                        {"R33", b.R33},
                        {"a3", b.a3},
                        {"Re", b.Re},
                        {"spectral_r", spectral_r(s.p, u)},
                        {"spectral_r_with_environment", spectral_r(s.p, u, NgmMode::WithEnvironment)},
                        {"dfe_max_real_eigenvalue", dfe_stability(s.p, u)}};
        const RunWriter w(make_run_dir(inv, s.cfg), inv.command, s.cfg);
        w.report("re.json", body);
        out << "run directory: " << w.dir().string() << "\n" << body.dump(2) << "\n";
        return 0;
    }

    const ReGrid g = re_grid(s.p, axis_from_json(a1), axis_from_json(a2), u, s.jobs);
    const RunWriter w(make_run_dir(inv, s.cfg), inv.command, s.cfg);
    std::ostringstream csv;
    write_re_grid_csv(csv, g);
    w.csv("re_grid.csv", csv.str(), re_grid_sidecar(g, s.p, u));
    const auto [lo, hi] = std::minmax_element(g.values.begin(), g.values.end());
    out << "run directory: " << w.dir().string() << "\n"
        << g.axis1.n << "x" << g.axis2.n << " grid, Re in [" << *lo << ", " << *hi << "]\n";
    return 0;
}

int cmd_optimize(const Invocation& inv, Setup& s, std::ostream& out)
{
    const ControlMask mask = strategy_mask(s.cfg.at("strategy").get<std::string>());
    const Weights wts = weights_from_json(s.cfg.at("weights"));
    const json& sw = s.cfg.at("sweep");
    SweepOptions opts{sw.at("omega").get<double>(), sw.at("tol").get<double>(), sw.at("max_iter").get<int>()};
    opts.validate();
    const StateVec y0 = initial_state(s);

    const SweepResult r = forward_backward_sweep(s.p, wts, y0, s.grid, mask, opts);

    const RunWriter w(make_run_dir(inv, s.cfg), inv.command, s.cfg);
    std::ostringstream states, adjoints, controls;
    write_trajectory_csv(states, r.states);
    write_adjoints_csv(adjoints, r.adjoints);
    write_controls_csv(controls, r.controls);
    w.csv("states.csv", states.str());
    w.csv("adjoints.csv", adjoints.str());
    w.csv("controls.csv", controls.str());
    w.report("summary.json", sweep_summary(r));
    out << "run directory: " << w.dir().string() << "\n"
        << "strategy mask " << mask_string(mask) << ": J = " << r.J() << ", iterations = " << r.iterations
        << ", converged = " << (r.converged ? "true" : "false") << "\n";
    return 0;
}

std::vector<std::string> string_list(const json& j, std::vector<std::string> fallback)
{
    if (j.is_null()) return fallback;
    return j.get<std::vector<std::string>>();
}

int cmd_prcc(const Invocation& inv, Setup& s, std::ostream& out)
{
    const json& c = s.cfg.at("sensitivity");
    PrccStudy study;
    study.N = c.at("N").get<int>();
    study.seed = c.at("seed").get<std::uint64_t>();
    study.outputs = c.at("outputs").get<std::vector<std::string>>();
    study.sample_times = c.at("times").get<std::vector<double>>();
    study.seeds = s.seeds;
    study.jobs = s.jobs;
    if (const json& ranges = c.at("ranges"); !ranges.is_null()) {
        if (!ranges.is_array()) throw ConfigError("sensitivity.ranges must be an array");
        for (const auto& r : ranges) study.ranges.push_back(range_from_json(r));
    } else {
        const auto names = string_list(c.at("params"), all_parameter_names());
        const auto dist = c.at("distribution").get<std::string>();
        if (dist == "uniform") {
            study.ranges = uniform_ranges(s.p, names, c.at("fraction").get<double>());
        } else if (dist == "normal") {
            study.ranges = normal_ranges(names);
        } else {
            throw ConfigError("sensitivity.distribution must be uniform or normal");
        }
    }
    const auto y0 = explicit_state(s);
    if (y0) s.cfg["initial_state"] = to_json(*y0);

    const auto results = prcc_study(study, s.p, y0, s.grid);

    json ranges = json::array();
    for (const auto& r : study.ranges) ranges.push_back(to_json(r));
    const RunWriter w(make_run_dir(inv, s.cfg), inv.command, s.cfg);
    out << "run directory: " << w.dir().string() << "\n";
    for (const auto& r : results) {
        std::ostringstream csv;
        write_prcc_csv(csv, r);
        w.csv("prcc_" + r.output + ".csv", csv.str(),
              {{"output", r.output}, {"N", r.N}, {"seed", r.seed}, {"dropped", r.dropped}, {"ranges", ranges}});
        out << r.output << ": " << r.params.size() << " parameters x " << r.times.size() << " times, "
            << r.dropped << " rows dropped\n";
    }
    return 0;
}

int cmd_fit(const Invocation& inv, Setup& s, std::ostream& out)
{
    const json& c = s.cfg.at("fit");
    if (c.at("data").is_null()) throw ConfigError("fit.data must name an incidence CSV (year,cases)");
    const IncidenceSeries data = read_incidence_csv(c.at("data").get<std::string>());

    FitConfig fc;
    fc.free_params = c.at("free_params").get<std::vector<std::string>>();
    for (const auto& n : fc.free_params) {
        if (!ParamSet::has(n)) throw ConfigError("fit: unknown parameter '" + n + "'");
    }
    if (c.at("x0").is_null()) {
        for (const auto& n : fc.free_params) fc.x0.push_back(s.p.get(n));
    } else {
        fc.x0 = c.at("x0").get<std::vector<double>>();
    }
    if (c.at("bounds").is_null()) {
        for (double x : fc.x0) fc.bounds.push_back({x / 10.0, x * 10.0});
    } else {
        for (const auto& b : c.at("bounds")) {
            if (!b.is_array() || b.size() != 2) throw ConfigError("fit.bounds entries must be [lo, hi]");
            const double inf = std::numeric_limits<double>::infinity();
            fc.bounds.push_back({b[0].is_null() ? -inf : b[0].get<double>(), b[1].is_null() ? inf : b[1].get<double>()});
        }
    }
    const json& nm = c.at("nm");
    fc.nm = {nm.at("reflection").get<double>(), nm.at("expansion").get<double>(), nm.at("contraction").get<double>(),
             nm.at("shrink").get<double>()};
    fc.max_evals = c.at("max_evals").get<int>();
    fc.tolerance = c.at("tolerance").get<double>();
    fc.x_tolerance = c.at("x_tolerance").get<double>();
    fc.dt = c.at("dt").get<double>();
    fc.validate();
    s.cfg["fit"] = json(c);
    s.cfg["fit"]["x0"] = fc.x0;
    s.cfg["fit"]["bounds"] = to_json(fc)["bounds"];
    const auto y0 = explicit_state(s);
    if (y0) s.cfg["initial_state"] = to_json(*y0);

    const FitResult r = fit(data, fc, s.p, y0, s.seeds);

    const RunWriter w(make_run_dir(inv, s.cfg), inv.command, s.cfg);
    std::ostringstream csv;
    write_fit_csv(csv, r);
    w.csv("fit.csv", csv.str(), {{"result", to_json(r)}});
    w.report("fit_result.json", to_json(r));
    out << "run directory: " << w.dir().string() << "\n" << to_json(r).dump(2) << "\n";
    return 0;
}

const char* error_kind(int code)
{
    switch (code) {
    case 2: return "config";
    case 3: return "numeric";
    case 4: return "io";
    default: return "internal";
    }
}

void report_error(std::ostream& err, int code, const std::string& message)
{
    err << json{{"error", {{"kind", error_kind(code)}, {"exit_code", code}, {"message", message}}}}.dump() << "\n";
}

} // namespace

int run(const Invocation& inv, std::ostream& out, std::ostream& err)
{
    try {
        try {
            Setup s = make_setup(resolve_config(inv.config_path, inv.sets), inv.jobs);
            if (inv.command == "simulate") return cmd_simulate(inv, s, out);
            if (inv.command == "reff") return cmd_reff(inv, s, out);
            if (inv.command == "optimize") return cmd_optimize(inv, s, out);
            if (inv.command == "prcc") return cmd_prcc(inv, s, out);
            if (inv.command == "fit") return cmd_fit(inv, s, out);
            throw ConfigError("unknown command '" + inv.command + "'");
        } catch (const json::exception& e) {
            throw ConfigError(std::string("malformed configuration value: ") + e.what());
        } catch (const std::domain_error& e) {
            throw NumericError(e.what());
        }
    } catch (const Error& e) {
        report_error(err, e.exit_code(), e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        report_error(err, 3, e.what());
        return 3;
    }
}

} // namespace rabies::cli
