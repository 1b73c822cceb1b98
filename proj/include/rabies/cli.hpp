#pragma once

// Command implementations behind the rabictl executable. Every command reads a
// resolved JSON configuration, writes CSV artifacts with JSON sidecars into a
// fresh run directory, and reports failures through the exit code.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace rabies::cli {

struct Invocation {
    std::string command; // simulate | reff | optimize | prcc | fit
    std::string config_path;
    std::vector<std::string> sets; // key=value, dotted key path, JSON value
    std::string out_root;          // empty: $RABICTL_OUTDIR, then ./runs
    std::string run_dir;           // exact output directory; overrides out_root
    int jobs = 0;                  // 0: number of processors
};

/// Built-in configuration every file and --set layer is merged onto.
nlohmann::json default_config();

/// Defaults, then the config file (if any), then each --set in order.
/// Throws ConfigError on malformed input or unknown keys, IoError on an
/// unreadable file.
nlohmann::json resolve_config(const std::string& config_path, const std::vector<std::string>& sets);

/// Applies one `a.b.c=value` override. Values that are not valid JSON are taken as strings.
void apply_set(nlohmann::json& config, const std::string& assignment);

/// Runs one command. Returns the process exit code: 0 success, 2 configuration,
/// 3 numeric failure, 4 I/O. Errors are reported on `err` as one JSON line.
int run(const Invocation& inv, std::ostream& out, std::ostream& err);

} // namespace rabies::cli
