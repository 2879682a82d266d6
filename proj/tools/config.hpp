#pragma once

#include "dncalc/coeff.hpp"
#include "dncalc/solver.hpp"
#include "dncalc/verify.hpp"

#include "json.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dncalc::cli {

/// Everything a run depends on. Defaults are written out explicitly by to_json.
struct RunConfig {
    CoefficientFamily family;
    int dimension = 1;
    double length = 2.0 * pi;
    int points = 256;
    double height = 0.0;  // 0 selects 4 L
    int levels = 0;       // 0 selects dt = h
    std::vector<std::string> checks{"all"};
    std::uint64_t seed = 1;
    std::string output;  // empty: $DNCALC_OUTPUT_DIR, else "."
    std::map<std::string, double> tolerances;
    SolverBackend backend = SolverBackend::krylov;
    TraceRule trace = TraceRule::flux;
    TopCondition top = TopCondition::zero_flux;
    int ensemble = 64;
    int samples = 16;
    int pairs = 8;
    int strip_samples = 4;
    int semigroup_points = 128;
    int phi_points = 64;
    int kernel_points = 4096;
    double kernel_extent = 32.0;
    std::vector<double> kernel_times{0.25, 0.5, 1.0};
    bool refine = false;
    int jobs = 1;
    std::string source = "<defaults>";
};

/// Throws ConfigError carrying the 1-based line of the offending node.
RunConfig parse_config(const std::string& text, const std::string& source = "<string>");
RunConfig load_config(const std::string& path);

/// Result-determining settings only; jobs goes to the timing sidecar.
nlohmann::json to_json(const RunConfig& c);

TorusGrid grid_of(const RunConfig& c);
StripOptions strip_options_of(const RunConfig& c);
VerifySettings verify_settings_of(const RunConfig& c);
/// Output directory: config, then $DNCALC_OUTPUT_DIR, then ".".
std::string output_directory(const RunConfig& c);

}  // namespace dncalc::cli
