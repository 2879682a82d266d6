#include "doctest.h"

#include "dncalc/verify.hpp"

#include <algorithm>
#include <cmath>

using namespace dncalc;

namespace {

VerifySettings small(FamilyTag tag, int points = 64) {
    VerifySettings s;
    s.family.tag = tag;
    s.family.seed = 5;
    s.points = points;
    s.samples = 4;
    s.pairs = 2;
    s.strip_samples = 2;
    s.ensemble = 8;
    return s;
}

VerifySettings identity(int points = 64) {
    auto s = small(FamilyTag::constant, points);
    s.family.base = Eigen::MatrixXcd::Identity(2, 2);
    return s;
}

double metric(const EstimateReport& r, const std::string& key) {
    auto it = r.metrics.find(key);
    REQUIRE_MESSAGE(it != r.metrics.end(), key);
    return it->second;
}

}  // namespace

TEST_CASE("ensemble members are seeded trigonometric polynomials") {
    EnsembleSpec spec{7, 5, 8, 3.0, 1.0, false};
    Ensemble a(spec), b(spec);
    TorusGrid g(1, 2 * pi, 32), g2(1, 2 * pi, 64);
    REQUIRE(a.size() == 5);
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto fa = a.realize(i, g), fb = b.realize(i, g);
        for (std::size_t m = 0; m < g.size(); ++m) CHECK(fa[m] == fb[m]);
        CHECK(sobolev_norm(fa, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
        auto fine = a.realize(i, g2);
        for (std::size_t m = 0; m < g.size(); ++m) CHECK(std::abs(fine[2 * m] - fa[m]) < 1e-12);
    }
    Ensemble other({8, 5, 8, 3.0, 1.0, false});
    CHECK(std::abs(other.realize(0, g)[0] - a.realize(0, g)[0]) > 0.0);

    Ensemble centered({7, 3, 8, 3.0, 0.0, true});
    for (std::size_t i = 0; i < centered.size(); ++i) CHECK(std::abs(mean(centered.realize(i, g))) < 1e-14);
    CHECK(a.descriptor().at("size") == 5);
}

TEST_CASE("unit modes") {
    TorusGrid g(1, 2 * pi, 32);
    for (int k : {0, 1, 5, -3}) CHECK(l2_norm(unit_mode(g, k)) == doctest::Approx(1.0));
}

TEST_CASE("sector angle skips the eigenvalue nearest zero") {
    Eigen::VectorXcd ev(4);
    ev << cplx(1e-14, 0.0), cplx(1.0, 0.0), cplx(1.0, 1.0), cplx(2.0, -1.0);
    CHECK(sector_angle(ev) == doctest::Approx(45.0));
    Eigen::VectorXcd real(3);
    real << 0.0, 1.0, 3.0;
    CHECK(sector_angle(real) == doctest::Approx(0.0));
}

TEST_CASE("settings resolve grid geometry") {
    VerifySettings s;
    s.points = 64;
    auto res = s.resolutions();
    CHECK(res == std::vector<int>{64, 128});
    s.refine = true;
    CHECK(s.resolutions() == std::vector<int>{64, 128, 256});
    CHECK(s.levels_for(64) == 0);
    s.levels = 300;
    CHECK(s.levels_for(64) == 300);
    CHECK(s.levels_for(128) == 600);
    CHECK(s.tolerance("missing", 0.5) == 0.5);
    s.tolerances["present"] = 0.1;
    CHECK(s.tolerance("present", 0.5) == 0.1);
}

TEST_CASE("symbol and closure checks on the running example") {
    auto s = small(FamilyTag::constant);
    auto sym = check_symbol(s);
    CHECK(sym.passed());
    CHECK(metric(sym, "max_root_residual") < 1e-10);
    CHECK(metric(sym, "lower_constant") == doctest::Approx(1.356466).epsilon(1e-6));
    auto phi = check_phi_closure(s);
    CHECK(phi.passed());
    CHECK(metric(phi, "closed_form_residual") < 1e-10);
    CHECK(metric(phi, "j_lambda_gap") < 1e-8);
}

TEST_CASE("symbol bounds hold on every builtin family") {
    for (auto tag : {FamilyTag::block, FamilyTag::hermitian, FamilyTag::general}) {
        auto r = check_symbol(small(tag));
        CHECK_MESSAGE(r.passed(), to_string(tag));
        CHECK(metric(r, "inequality_violations") == 0);
    }
}

TEST_CASE("extension oracle converges at second order") {
    auto r = check_extension_convergence(small(FamilyTag::constant, 64));
    CHECK(r.passed());
    CHECK(metric(r, "manufactured_min_order") >= 1.8);
}

TEST_CASE("factorization on the identity") {
    auto s = identity();
    auto r = check_factorization_boundary(s);
    CHECK(r.passed());
    CHECK(metric(r, "residual_halving_ratio") < 0.3);
    auto strip = check_factorization_strip(identity(128));
    CHECK(strip.passed());
}

TEST_CASE("constant coefficients have no remainder") {
    auto s = small(FamilyTag::constant);
    auto r = check_remainder_bounds(s);
    CHECK(metric(r, "s_sup") < 1e-3);
}

TEST_CASE("constant coefficients: U_A1 is the cut-off remainder of the extension") {
    auto r = check_u1_estimate(small(FamilyTag::constant));
    CHECK(r.passed());
    CHECK(metric(r, "constant_exact_gap") < 1e-10);
    CHECK(metric(r, "grad_constant") > 0.01);
}

TEST_CASE("kernel study reproduces the shifted Poisson kernel for constant A") {
    auto s = small(FamilyTag::constant);
    s.kernel_points = 1024;
    s.kernel_extent = 8.0;
    auto study = kernel_study(s, "unit", {0.5});
    REQUIRE(study.slices.size() == 1);
    CHECK(study.report.passed());
    CHECK_FALSE(study.fits.empty());
    for (const auto& f : study.fits) CHECK(f.slope <= -1.5);
}

TEST_CASE("suite registry") {
    auto names = suite_names();
    CHECK(std::find(names.begin(), names.end(), "all") != names.end());
    CHECK(std::find(names.begin(), names.end(), "factorization") != names.end());
    auto s = small(FamilyTag::constant);
    auto one = run_suite("phi", s, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0].name == "phi_closure");
    auto two = run_suite("symbol", s, 2);
    REQUIRE(two.size() == 1);
    CHECK(two[0].name == "symbol_bounds");
    CHECK_THROWS(run_suite("nope", s, 1));
}

TEST_CASE("failing checks are reported, not thrown") {
    auto s = small(FamilyTag::constant);
    s.family.dimension = 2;
    s.points = 16;
    auto reports = run_suite("factorization", s, 1);
    REQUIRE(reports.size() == 2);
    CHECK(std::is_sorted(reports.begin(), reports.end(), [](auto& a, auto& b) { return a.name < b.name; }));
    for (const auto& r : reports) CHECK_FALSE(r.passed());
}
