#include "commands.hpp"

#include "config.hpp"
#include "output.hpp"

#include "dncalc/expr.hpp"
#include "dncalc/psdo.hpp"
#include "dncalc/solver.hpp"
#include "dncalc/symbol.hpp"
#include "dncalc/verify.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace dncalc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

std::string utc_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

std::string num(double v) { return CsvWriter::number(v); }

void write_timing(const fs::path& path, const std::string& command, double total,
                  const std::vector<EstimateReport>& reports = {}, int jobs = 1) {
    json checks = json::object();
    for (const auto& r : reports) checks[r.name] = r.elapsed_seconds;
    write_json(path, {{"command", command},
                      {"finished_at", utc_now()},
                      {"elapsed_seconds", total},
                      {"jobs", jobs},
                      {"checks", checks}});
}

void print_witness(const EllipticityError& e, std::ostream& err) {
    err << "error: " << e.what() << "\n  witness x =";
    for (double v : e.x) err << ' ' << v;
    err << "\n  witness eta =";
    for (auto z : e.eta) err << " (" << z.real() << (z.imag() < 0 ? "" : "+") << z.imag() << "i)";
    err << "\n  Re<A eta, eta> = " << e.value << '\n';
}

void print_report(const EstimateReport& r, std::ostream& out) {
    out << (r.passed() ? "PASS " : "FAIL ") << r.name << '\n';
    for (const auto& f : r.failures()) out << "    " << f << '\n';
    for (const auto& n : r.notes)
        if (n.rfind("error: ", 0) == 0) out << "    " << n << '\n';
}

// ---------------------------------------------------------------- check-symbol

int check_symbol_cmd(const RunConfig& c, const fs::path& dir, std::ostream& out) {
    auto t0 = Clock::now();
    if (c.dimension == 2 && c.points > 64) throw ConfigError("d = 2 runs are limited to points <= 64");
    auto g = grid_of(c);
    auto a = build_field(c.family, g);
    auto s = verify_settings_of(c);
    auto report = check_symbol(s);
    auto mu = mu_of(a), lam = lambda_of(a), q = q_of(a);
    FrequencyLattice lat(g);
    std::size_t stride = std::max<std::size_t>(1, g.size() / 64);
    std::vector<std::string> header = c.dimension == 1 ? std::vector<std::string>{"x", "xi"}
                                                       : std::vector<std::string>{"x", "y", "xi", "eta"};
    for (auto n : {"mu", "lambda", "q"}) {
        header.push_back(std::string("re_") + n);
        header.push_back(std::string("im_") + n);
    }
    {
        CsvWriter w(dir / "symbol.csv", header);
        for (std::size_t m = 0; m < g.size(); m += stride) {
            auto x = g.coordinates(m);
            for (std::size_t k = 0; k < g.size(); ++k) {
                auto xi = lat.xi(k);
                std::vector<std::string> row;
                for (int d = 0; d < c.dimension; ++d) row.push_back(num(x[d]));
                for (int d = 0; d < c.dimension; ++d) row.push_back(num(xi[d]));
                for (const SymbolTable* t : {&mu, &lam, &q}) {
                    row.push_back(num((*t)(m, k).real()));
                    row.push_back(num((*t)(m, k).imag()));
                }
                w.row(row);
            }
        }
    }
    json doc{{"command", "check-symbol"},
             {"config", to_json(c)},
             {"node_stride", stride},
             {"reports", json::array({report_json(report)})},
             {"status", report.passed() ? "pass" : "fail"}};
    write_json(dir / "symbol.json", doc);
    report.elapsed_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    write_timing(dir / "symbol.timing.json", "check-symbol", report.elapsed_seconds, {report});
    print_report(report, out);
    out << "    C = " << report.metrics["upper_constant"] << ", C' = " << report.metrics["lower_constant"] << '\n';
    return report.passed() ? exit_pass : exit_fail;
}

// ---------------------------------------------------------------- solve

int solve_cmd(const RunConfig& c, const std::string& data, int stride_x, int stride_t, const fs::path& dir,
              std::ostream& out) {
    auto t0 = Clock::now();
    if (c.dimension != 1) throw ConfigError("solve is available for d = 1 only");
    auto g = grid_of(c);
    Expression fx;
    try {
        fx = Expression::parse(data);
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("--data: ") + e.what());
    }
    auto f = GridFunction::sample(g, [&](const std::array<double, 2>& x) { return fx.evaluate(x); });
    auto a = build_field(c.family, g);
    StripDiscretization disc(a, strip_options_of(c));
    auto u = solve_dirichlet(disc, f);
    auto tr = boundary_traces(disc, u);
    auto qf = q_from_lambda(a, f, tr.lambda);
    int N = g.points(), Nt = disc.levels();
    int sx = stride_x > 0 ? stride_x : std::max(1, N / 64);
    int st = stride_t > 0 ? stride_t : std::max(1, Nt / 128);
    {
        CsvWriter w(dir / "solution.csv", {"t", "x", "re_u", "im_u"});
        for (int n = 0; n <= Nt; n += st)
            for (int m = 0; m < N; m += sx) {
                cplx v = u.values[static_cast<std::size_t>(n) * N + m];
                w.row({num(n * disc.dt()), num(g.node(m, 0)), num(v.real()), num(v.imag())});
            }
    }
    {
        CsvWriter w(dir / "traces.csv",
                    {"x", "re_f", "im_f", "re_P", "im_P", "re_Lambda", "im_Lambda", "re_Q", "im_Q"});
        for (int m = 0; m < N; ++m)
            w.row({num(g.node(m, 0)), num(f[m].real()), num(f[m].imag()), num(tr.p[m].real()), num(tr.p[m].imag()),
                   num(tr.lambda[m].real()), num(tr.lambda[m].imag()), num(qf[m].real()), num(qf[m].imag())});
    }
    // dominant Fourier modes of f with the modal ratios of the three boundary operators
    auto fs_ = to_spectral(f), ps = to_spectral(tr.p), ls = to_spectral(tr.lambda), qs = to_spectral(qf);
    FrequencyLattice lat(g);
    double fmax = 0;
    for (auto v : fs_.coefficients) fmax = std::max(fmax, std::abs(v));
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < g.size(); ++k)
        if (std::abs(fs_.coefficients[k]) > 1e-8 * fmax) idx.push_back(k);
    std::stable_sort(idx.begin(), idx.end(), [&](auto i, auto j) {
        return std::abs(fs_.coefficients[i]) > std::abs(fs_.coefficients[j]) + 1e-14 * fmax;
    });
    if (idx.size() > 8) idx.resize(8);
    json modes = json::array();
    for (auto k : idx) {
        cplx fk = fs_.coefficients[k];
        modes.push_back({{"k", lat.wavenumber(k, 0)},
                         {"f", complex_json(fk)},
                         {"P_ratio", complex_json(ps.coefficients[k] / fk)},
                         {"Lambda_ratio", complex_json(ls.coefficients[k] / fk)},
                         {"Q_ratio", complex_json(qs.coefficients[k] / fk)}});
    }
    double strip2 = 0;
    for (int n = 0; n <= Nt; ++n) {
        double w = (n == 0 || n == Nt) ? 0.5 : 1.0;
        for (int m = 0; m < N; ++m) strip2 += w * std::norm(u.values[static_cast<std::size_t>(n) * N + m]);
    }
    json doc{{"command", "solve"},
             {"config", to_json(c)},
             {"data", data},
             {"solver",
              {{"backend", u.backend},
               {"residual", u.residual},
               {"iterations", u.iterations},
               {"condition_estimate", u.condition_estimate},
               {"height", u.height},
               {"levels", u.levels},
               {"dt", u.dt},
               {"trace", to_string(disc.options().trace)},
               {"top", to_string(disc.options().top)}}},
             {"norms",
              {{"f", l2_norm(f)},
               {"E_f_strip", std::sqrt(strip2 * g.spacing() * u.dt)},
               {"P_f", l2_norm(tr.p)},
               {"Lambda_f", l2_norm(tr.lambda)},
               {"Q_f", l2_norm(qf)}}},
             {"mean", {{"f", complex_json(mean(f))}, {"top", complex_json(u.level(Nt)[0])}}},
             {"modes", modes},
             {"decimation", {{"x_stride", sx}, {"t_stride", st}}}};
    write_json(dir / "solve.json", doc);
    write_timing(dir / "solve.timing.json", "solve", std::chrono::duration<double>(Clock::now() - t0).count());
    out << "solved: levels " << u.levels << ", residual " << u.residual << ", iterations " << u.iterations << '\n';
    out << "    ||f|| = " << l2_norm(f) << ", ||P f|| = " << l2_norm(tr.p) << ", ||Lambda f|| = " << l2_norm(tr.lambda)
        << ", ||Q f|| = " << l2_norm(qf) << '\n';
    return exit_pass;
}

// ---------------------------------------------------------------- verify

int verify_cmd(RunConfig c, const std::vector<std::string>& suites, bool refine, int jobs, const fs::path& dir,
               std::ostream& out) {
    auto t0 = Clock::now();
    if (refine) c.refine = true;
    if (jobs > 0) c.jobs = jobs;
    if (!suites.empty()) c.checks = suites;
    auto names = suite_names();
    for (const auto& s : c.checks)
        if (std::find(names.begin(), names.end(), s) == names.end()) throw ConfigError("unknown suite '" + s + "'");
    if (c.dimension != 1) throw ConfigError("verify runs in d = 1; d = 2 is limited to check-symbol");
    // validation errors surface as configuration errors before any check runs
    build_field(c.family, grid_of(c));
    auto s = verify_settings_of(c);
    std::map<std::string, EstimateReport> merged;
    for (const auto& suite : c.checks)
        for (auto& r : run_suite(suite, s, c.jobs)) merged.emplace(r.name, std::move(r));
    std::vector<EstimateReport> reports;
    for (auto& [k, r] : merged) reports.push_back(std::move(r));
    bool ok = std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.passed(); });
    json arr = json::array();
    for (const auto& r : reports) {
        arr.push_back(report_json(r));
        write_series_csv(dir / (r.name + ".csv"), r);
    }
    write_summary_csv(dir / "summary.csv", reports);
    json doc{{"command", "verify"},
             {"config", to_json(c)},
             {"suites", c.checks},
             {"reports", arr},
             {"status", ok ? "pass" : "fail"}};
    write_json(dir / "report.json", doc);
    write_timing(dir / "report.timing.json", "verify", std::chrono::duration<double>(Clock::now() - t0).count(),
                 reports, c.jobs);
    for (const auto& r : reports) print_report(r, out);
    out << (ok ? "all checks passed" : "some checks failed") << " (" << reports.size() << " reports)\n";
    return ok ? exit_pass : exit_fail;
}

// ---------------------------------------------------------------- kernel

std::vector<double> parse_times(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            double v = std::stod(item, &used);
            if (used != item.size() || !(v > 0)) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ConfigError("--times expects positive numbers separated by commas, got '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError("--times is empty");
    return out;
}

int kernel_cmd(const RunConfig& c, const std::string& weight, const std::string& times, const fs::path& dir,
               std::ostream& out) {
    auto t0 = Clock::now();
    if (c.dimension != 1) throw ConfigError("kernel studies run in d = 1");
    static const std::vector<std::string> tags{"unit", "pi-prime", "zeta", "q-weight"};
    if (std::find(tags.begin(), tags.end(), weight) == tags.end())
        throw ConfigError("unknown weight '" + weight + "' (unit, pi-prime, zeta, q-weight)");
    auto ts = times.empty() ? c.kernel_times : parse_times(times);
    auto s = verify_settings_of(c);
    build_field(c.family, grid_of(c));
    auto study = kernel_study(s, weight, ts);
    {
        CsvWriter w(dir / "kernel.csv", {"y", "t", "abs_g", "fit"});
        for (const auto& ks : study.slices) {
            const KernelFitRecord* far = nullptr;
            for (const auto& f : study.fits)
                if (f.t == ks.t && f.window == "far") far = &f;
            for (std::size_t j = 0; j < ks.values.size(); ++j) {
                double y = ks.offsets[j][0];
                std::string fit;
                if (far && y != 0.0) fit = num(std::exp(far->intercept + far->slope * std::log(std::abs(y))));
                w.row({num(y), num(ks.t), num(std::abs(ks.values[j])), fit});
            }
        }
    }
    json fits = json::array();
    for (const auto& f : study.fits)
        fits.push_back({{"t", f.t},
                        {"node", f.node},
                        {"window", f.window},
                        {"ymin", f.ymin},
                        {"ymax", f.ymax},
                        {"slope", f.slope},
                        {"intercept", f.intercept}});
    auto& r = study.report;
    json doc{{"command", "kernel"},
             {"config", to_json(c)},
             {"weight", weight},
             {"times", ts},
             {"fits", fits},
             {"reports", json::array({report_json(r)})},
             {"status", r.passed() ? "pass" : "fail"}};
    write_json(dir / "kernel.json", doc);
    r.elapsed_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    write_timing(dir / "kernel.timing.json", "kernel", r.elapsed_seconds, {r});
    print_report(r, out);
    for (const auto& f : study.fits)
        out << "    t = " << f.t << " " << f.window << " slope " << f.slope << " on [" << f.ymin << ", " << f.ymax
            << "]\n";
    return r.passed() ? exit_pass : exit_fail;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dirichlet-Neumann and Poisson operators of divergence-form elliptic operators on a periodic strip"};
    app.require_subcommand(1);
    std::string config_path, output;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config_path, "YAML run configuration")->required();
        sub->add_option("-o,--output", output, "output directory (overrides the configuration)");
    };
    auto* sym = app.add_subcommand("check-symbol", "symbol tables and symbol bounds");
    add_common(sym);
    auto* solve = app.add_subcommand("solve", "strip solution and boundary traces for given data");
    add_common(solve);
    std::string data;
    int stride_x = 0, stride_t = 0;
    solve->add_option("--data", data, "boundary data f(x) as an expression")->required();
    solve->add_option("--x-stride", stride_x, "decimation of solution.csv in x (0: automatic)");
    solve->add_option("--t-stride", stride_t, "decimation of solution.csv in t (0: automatic)");
    auto* ver = app.add_subcommand("verify", "run verification suites");
    add_common(ver);
    std::vector<std::string> suites;
    bool refine = false;
    int jobs = 0;
    ver->add_option("--suite", suites, "suites to run (default: checks from the configuration)");
    ver->add_flag("--refine", refine, "add a further dyadic refinement level");
    ver->add_option("-j,--jobs", jobs, "concurrent checks");
    auto* ker = app.add_subcommand("kernel", "kernel slices and decay fits");
    add_common(ker);
    std::string weight = "unit", times;
    ker->add_option("--weight", weight, "unit, pi-prime, zeta or q-weight");
    ker->add_option("--times", times, "comma separated times");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? exit_pass : exit_config;
    }
    try {
        auto cfg = load_config(config_path);
        if (!output.empty()) cfg.output = output;
        fs::path dir = output_directory(cfg);
        fs::create_directories(dir);
        if (*sym) return check_symbol_cmd(cfg, dir, out);
        if (*solve) return solve_cmd(cfg, data, stride_x, stride_t, dir, out);
        if (*ver) return verify_cmd(cfg, suites, refine, jobs, dir, out);
        if (*ker) return kernel_cmd(cfg, weight, times, dir, out);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return exit_config;
    } catch (const EllipticityError& e) {
        print_witness(e, err);
        return exit_config;
    } catch (const InvalidArgument& e) {
        err << "configuration error: " << e.what() << '\n';
        return exit_config;
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << " (condition estimate " << e.condition_estimate << ")\n";
        return exit_fail;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_fail;
    }
    return exit_config;
}

}  // namespace dncalc::cli
