#include "config.hpp"

#include "dncalc/expr.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace dncalc::cli {

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

[[noreturn]] void bad(const YAML::Node& n, const std::string& what) { throw ConfigError(what, line_of(n)); }

void only_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) {
    if (!map.IsMap()) bad(map, where + " must be a mapping");
    for (auto it = map.begin(); it != map.end(); ++it) {
        auto key = it->first.as<std::string>();
        if (!allowed.count(key)) bad(it->first, "unknown key '" + key + "' in " + where);
    }
}

/// Numbers may be written as constant expressions such as "2*pi".
double real_of(const YAML::Node& n, const std::string& what) {
    if (!n.IsScalar()) bad(n, what + " must be a number");
    auto text = n.Scalar();
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    try {
        cplx v = Expression::parse(text).evaluate({0.0, 0.0});
        if (std::abs(v.imag()) > 1e-14 * std::max(1.0, std::abs(v.real()))) bad(n, what + " must be real");
        return v.real();
    } catch (const InvalidArgument& e) {
        bad(n, what + ": " + e.what());
    }
}

long integer_of(const YAML::Node& n, const std::string& what) {
    if (!n.IsScalar()) bad(n, what + " must be an integer");
    try {
        std::size_t used = 0;
        long v = std::stol(n.Scalar(), &used);
        if (used == n.Scalar().size()) return v;
    } catch (const std::exception&) {
    }
    bad(n, what + " must be an integer");
}

int positive_of(const YAML::Node& n, const std::string& what) {
    long v = integer_of(n, what);
    if (v < 1 || v > 1 << 24) bad(n, what + " must be a positive integer");
    return static_cast<int>(v);
}

bool bool_of(const YAML::Node& n, const std::string& what) {
    if (!n.IsScalar()) bad(n, what + " must be true or false");
    auto s = n.Scalar();
    if (s == "true" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "no" || s == "off") return false;
    bad(n, what + " must be true or false");
}

std::string string_of(const YAML::Node& n, const std::string& what) {
    if (!n.IsScalar()) bad(n, what + " must be a string");
    return n.Scalar();
}

cplx complex_of(const YAML::Node& n, const std::string& what) {
    if (n.IsSequence()) {
        if (n.size() != 2) bad(n, what + " must be a number or [re, im]");
        return {real_of(n[0], what), real_of(n[1], what)};
    }
    if (!n.IsScalar()) bad(n, what + " must be a number or [re, im]");
    try {
        return Expression::parse(n.Scalar()).evaluate({0.0, 0.0});
    } catch (const InvalidArgument& e) {
        bad(n, what + ": " + e.what());
    }
}

void parse_coefficients(const YAML::Node& n, RunConfig& c, bool& seeded) {
    only_keys(n, {"family", "seed", "amplitude", "max_mode", "terms", "period", "base", "expressions"},
              "coefficients");
    auto& f = c.family;
    if (n["family"]) {
        try {
            f.tag = parse_family_tag(string_of(n["family"], "family"));
        } catch (const InvalidArgument& e) {
            bad(n["family"], e.what());
        }
    }
    if (n["seed"]) {
        long s = integer_of(n["seed"], "coefficients.seed");
        if (s < 0) bad(n["seed"], "coefficients.seed must be nonnegative");
        f.seed = static_cast<std::uint64_t>(s);
        seeded = true;
    }
    if (n["amplitude"]) {
        f.amplitude = real_of(n["amplitude"], "amplitude");
        if (!(f.amplitude > 0 && f.amplitude <= 1)) bad(n["amplitude"], "amplitude must lie in (0, 1]");
    }
    if (n["max_mode"]) f.max_mode = positive_of(n["max_mode"], "max_mode");
    if (n["terms"]) f.terms = positive_of(n["terms"], "terms");
    if (n["period"]) {
        f.period = real_of(n["period"], "period");
        if (!(f.period > 0)) bad(n["period"], "period must be positive");
    }
    if (n["base"]) {
        auto b = n["base"];
        if (!b.IsSequence() || b.size() < 2 || b.size() > 3) bad(b, "base must be a 2x2 or 3x3 matrix");
        Eigen::MatrixXcd m(b.size(), b.size());
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (!b[i].IsSequence() || b[i].size() != b.size()) bad(b[i], "base rows must have matching lengths");
            for (std::size_t j = 0; j < b.size(); ++j)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = complex_of(b[i][j], "base entry");
        }
        f.base = m;
    }
    if (n["expressions"]) {
        auto e = n["expressions"];
        if (!e.IsMap()) bad(e, "expressions must map entries such as a11 to formulas");
        for (auto it = e.begin(); it != e.end(); ++it) {
            auto key = it->first.as<std::string>();
            auto text = string_of(it->second, key);
            try {
                Expression::parse(text);
            } catch (const InvalidArgument& err) {
                bad(it->second, key + ": " + err.what());
            }
            f.expressions[key] = text;
        }
        if (!n["family"]) f.tag = FamilyTag::expressions;
    }
    if (f.tag == FamilyTag::expressions && f.expressions.empty())
        bad(n, "family 'expressions' needs an expressions mapping");
}

void parse_grid(const YAML::Node& n, RunConfig& c) {
    only_keys(n, {"dimension", "length", "points", "height", "levels"}, "grid");
    if (n["dimension"]) {
        long d = integer_of(n["dimension"], "dimension");
        if (d != 1 && d != 2) bad(n["dimension"], "dimension must be 1 or 2");
        c.dimension = static_cast<int>(d);
    }
    if (n["length"]) {
        c.length = real_of(n["length"], "length");
        if (!(c.length > 0)) bad(n["length"], "length must be positive");
    }
    if (n["points"]) {
        c.points = positive_of(n["points"], "points");
        if (c.points < 8 || c.points % 2) bad(n["points"], "points must be even and at least 8");
    }
    if (n["height"]) {
        c.height = real_of(n["height"], "height");
        if (c.height < 0) bad(n["height"], "height must be nonnegative (0 selects 4 L)");
    }
    if (n["levels"]) {
        long l = integer_of(n["levels"], "levels");
        if (l < 0) bad(n["levels"], "levels must be nonnegative (0 selects dt = h)");
        c.levels = static_cast<int>(l);
    }
}

void parse_solver(const YAML::Node& n, RunConfig& c) {
    only_keys(n, {"backend", "trace", "top"}, "solver");
    if (n["backend"]) {
        auto s = string_of(n["backend"], "backend");
        if (s == "krylov" || s == "gmres") c.backend = SolverBackend::krylov;
        else if (s == "direct" || s == "sparse-lu") c.backend = SolverBackend::direct;
        else bad(n["backend"], "backend must be krylov or direct");
    }
    if (n["trace"]) {
        auto s = string_of(n["trace"], "trace");
        if (s == "flux") c.trace = TraceRule::flux;
        else if (s == "three-point") c.trace = TraceRule::three_point;
        else bad(n["trace"], "trace must be flux or three-point");
    }
    if (n["top"]) {
        auto s = string_of(n["top"], "top");
        if (s == "zero-flux") c.top = TopCondition::zero_flux;
        else if (s == "mean-value") c.top = TopCondition::mean_value;
        else bad(n["top"], "top must be zero-flux or mean-value");
    }
}

void parse_verify(const YAML::Node& n, RunConfig& c) {
    only_keys(n,
              {"ensemble", "samples", "pairs", "strip_samples", "semigroup_points", "phi_points",
               "kernel_points", "kernel_extent", "kernel_times", "refine", "jobs"},
              "verify");
    if (n["ensemble"]) c.ensemble = positive_of(n["ensemble"], "ensemble");
    if (n["samples"]) c.samples = positive_of(n["samples"], "samples");
    if (n["pairs"]) c.pairs = positive_of(n["pairs"], "pairs");
    if (n["strip_samples"]) c.strip_samples = positive_of(n["strip_samples"], "strip_samples");
    if (n["semigroup_points"]) {
        c.semigroup_points = positive_of(n["semigroup_points"], "semigroup_points");
        if (c.semigroup_points > 512 || c.semigroup_points % 4)
            bad(n["semigroup_points"], "semigroup_points must be a multiple of 4 and at most 512");
    }
    if (n["phi_points"]) {
        c.phi_points = positive_of(n["phi_points"], "phi_points");
        if (c.phi_points > 512 || c.phi_points % 2) bad(n["phi_points"], "phi_points must be even and at most 512");
    }
    if (n["kernel_points"]) c.kernel_points = positive_of(n["kernel_points"], "kernel_points");
    if (n["kernel_extent"]) {
        c.kernel_extent = real_of(n["kernel_extent"], "kernel_extent");
        if (c.kernel_extent < 1 || std::abs(c.kernel_extent - std::round(c.kernel_extent)) > 1e-12)
            bad(n["kernel_extent"], "kernel_extent must be a positive integer");
    }
    if (n["kernel_times"]) {
        auto t = n["kernel_times"];
        if (!t.IsSequence() || t.size() == 0) bad(t, "kernel_times must be a nonempty list");
        c.kernel_times.clear();
        for (std::size_t i = 0; i < t.size(); ++i) {
            double v = real_of(t[i], "kernel time");
            if (!(v > 0)) bad(t[i], "kernel times must be positive");
            c.kernel_times.push_back(v);
        }
    }
    if (n["refine"]) c.refine = bool_of(n["refine"], "refine");
    if (n["jobs"]) c.jobs = positive_of(n["jobs"], "jobs");
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(e.msg, e.mark.line >= 0 ? e.mark.line + 1 : 0);
    }
    RunConfig c;
    c.source = source;
    if (root.IsNull()) return c;
    try {
        only_keys(root, {"coefficients", "grid", "checks", "seed", "output", "tolerances", "solver", "verify"},
                  "configuration");
        bool seeded = false;
        if (root["seed"]) {
            long s = integer_of(root["seed"], "seed");
            if (s < 0) bad(root["seed"], "seed must be nonnegative");
            c.seed = static_cast<std::uint64_t>(s);
        }
        if (root["coefficients"]) parse_coefficients(root["coefficients"], c, seeded);
        if (!seeded) c.family.seed = c.seed;
        if (root["grid"]) parse_grid(root["grid"], c);
        c.family.dimension = c.dimension;
        if (root["checks"]) {
            auto ch = root["checks"];
            c.checks.clear();
            auto names = suite_names();
            auto add = [&](const YAML::Node& n) {
                auto s = string_of(n, "check");
                if (std::find(names.begin(), names.end(), s) == names.end()) bad(n, "unknown check '" + s + "'");
                c.checks.push_back(s);
            };
            if (ch.IsSequence())
                for (std::size_t i = 0; i < ch.size(); ++i) add(ch[i]);
            else
                add(ch);
            if (c.checks.empty()) bad(ch, "checks must not be empty");
        }
        if (root["output"]) c.output = string_of(root["output"], "output");
        if (root["tolerances"]) {
            auto t = root["tolerances"];
            if (!t.IsMap()) bad(t, "tolerances must be a mapping");
            for (auto it = t.begin(); it != t.end(); ++it)
                c.tolerances[it->first.as<std::string>()] = real_of(it->second, it->first.as<std::string>());
        }
        if (root["solver"]) parse_solver(root["solver"], c);
        if (root["verify"]) parse_verify(root["verify"], c);
        if (c.family.base && c.family.base->rows() != c.dimension + 1)
            bad(root["coefficients"]["base"], "base matrix size does not match the dimension");
    } catch (const YAML::Exception& e) {
        throw ConfigError(e.msg, e.mark.line >= 0 ? e.mark.line + 1 : 0);
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read configuration '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

namespace {

nlohmann::json complex_json(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

}  // namespace

nlohmann::json to_json(const RunConfig& c) {
    using nlohmann::json;
    json coeff{{"family", to_string(c.family.tag)},
               {"seed", c.family.seed},
               {"amplitude", c.family.amplitude},
               {"max_mode", c.family.max_mode},
               {"terms", c.family.terms},
               {"period", c.family.period}};
    Eigen::MatrixXcd base = c.family.base ? *c.family.base
                            : c.family.tag == FamilyTag::expressions
                                ? Eigen::MatrixXcd()
                                : default_base(c.family.tag, c.dimension);
    json rows = json::array();
    for (Eigen::Index i = 0; i < base.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < base.cols(); ++j) row.push_back(complex_json(base(i, j)));
        rows.push_back(row);
    }
    coeff["base"] = rows;
    coeff["expressions"] = c.family.expressions;
    double height = c.height > 0 ? c.height : 4.0 * c.length;
    int levels = c.levels > 0 ? c.levels : static_cast<int>(std::lround(height / (c.length / c.points)));
    return json{{"coefficients", coeff},
                {"grid",
                 {{"dimension", c.dimension},
                  {"length", c.length},
                  {"points", c.points},
                  {"height", height},
                  {"levels", levels}}},
                {"checks", c.checks},
                {"seed", c.seed},
                {"tolerances", c.tolerances},
                {"solver", {{"backend", to_string(c.backend)}, {"trace", to_string(c.trace)}, {"top", to_string(c.top)}}},
                {"verify",
                 {{"ensemble", c.ensemble},
                  {"samples", c.samples},
                  {"pairs", c.pairs},
                  {"strip_samples", c.strip_samples},
                  {"semigroup_points", c.semigroup_points},
                  {"phi_points", c.phi_points},
                  {"kernel_points", c.kernel_points},
                  {"kernel_extent", c.kernel_extent},
                  {"kernel_times", c.kernel_times},
                  {"refine", c.refine}}}};
}

TorusGrid grid_of(const RunConfig& c) { return TorusGrid(c.dimension, c.length, c.points); }

StripOptions strip_options_of(const RunConfig& c) {
    StripOptions o;
    o.height = c.height;
    o.levels = c.levels;
    o.backend = c.backend;
    o.trace = c.trace;
    o.top = c.top;
    return o;
}

VerifySettings verify_settings_of(const RunConfig& c) {
    VerifySettings s;
    s.family = c.family;
    s.length = c.length;
    s.points = c.points;
    s.height = c.height;
    s.levels = c.levels;
    s.seed = c.seed;
    s.ensemble = c.ensemble;
    s.samples = c.samples;
    s.pairs = c.pairs;
    s.strip_samples = c.strip_samples;
    s.semigroup_points = c.semigroup_points;
    s.phi_points = c.phi_points;
    s.refine = c.refine;
    s.kernel_points = c.kernel_points;
    s.kernel_extent = c.kernel_extent;
    s.kernel_times = c.kernel_times;
    s.trace = c.trace;
    s.top = c.top;
    s.backend = c.backend;
    s.tolerances = c.tolerances;
    return s;
}

std::string output_directory(const RunConfig& c) {
    if (!c.output.empty()) return c.output;
    if (const char* env = std::getenv("DNCALC_OUTPUT_DIR"); env && *env) return env;
    return ".";
}

}  // namespace dncalc::cli
