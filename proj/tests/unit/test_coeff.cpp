#include "doctest.h"

#include "dncalc/coeff.hpp"

#include <cmath>

using namespace dncalc;

namespace {

CoefficientField constant_field(const TorusGrid& g, const Eigen::MatrixXcd& m) {
    CoefficientFamily fam;
    fam.tag = FamilyTag::constant;
    fam.dimension = g.dimension();
    fam.base = m;
    return build_field(fam, g);
}

Eigen::MatrixXcd running_example() {
    Eigen::MatrixXcd m(2, 2);
    m << 2.0, 0.5, 0.3, 1.0;
    return m;
}

}  // namespace

TEST_CASE("ellipticity constants of the running example") {
    TorusGrid g(1, 2 * pi, 16);
    auto a = constant_field(g, running_example());
    REQUIRE(a.ellipticity());
    const auto& e = *a.ellipticity();
    CHECK(e.nu1 == doctest::Approx((3.0 - std::sqrt(1.64)) / 2.0).epsilon(1e-12));
    CHECK(e.nu1 == doctest::Approx(0.8597).epsilon(1e-4));
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(running_example());
    CHECK(e.nu2 == doctest::Approx(svd.singularValues()(0)).epsilon(1e-12));
    // sampled directions can only over-estimate nu1 and under-estimate nu2
    CHECK(e.nu1_sampled >= e.nu1 - 1e-12);
    CHECK(e.nu1_sampled <= e.nu1 * 1.1);
    CHECK(e.nu2_sampled <= e.nu2 + 1e-12);
    CHECK(e.nu2_sampled >= e.nu2 * 0.9);
    CHECK(*a.lipschitz() == doctest::Approx(0.0));
}

TEST_CASE("non-elliptic fields are rejected with a witness") {
    TorusGrid g(1, 2 * pi, 16);
    Eigen::MatrixXcd m(2, 2);
    m << 1.0, 0.0, 0.0, -0.1;
    CoefficientFunction fn{1, [m](int i, int j, const std::array<double, 2>&) { return m(i, j); },
                           "bad"};
    auto a = CoefficientField::sample(fn, g);
    try {
        validate(a);
        FAIL("expected EllipticityError");
    } catch (const EllipticityError& e) {
        CHECK(e.value == doctest::Approx(-0.1));
        REQUIRE(e.eta.size() == 2);
        CHECK(std::abs(e.eta[1]) == doctest::Approx(1.0));
        CHECK(e.x.size() == 1);
    }
    CHECK_THROWS_AS(validate(constant_field(g, running_example()), 50), InvalidArgument);
}

TEST_CASE("closure matrices of the running example") {
    auto m = closure_m(running_example());
    auto n = closure_n(running_example());
    Eigen::MatrixXcd em(2, 2), en(2, 2);
    em << 1.85, 0.5, -0.3, 1.0;
    en << 2.0, -0.5, -0.3, 1.0;
    CHECK((m - em).norm() < 1e-14);
    CHECK((n - en).norm() < 1e-14);
    TorusGrid g(1, 2 * pi, 16);
    auto pair = phi_closure_matrices(constant_field(g, running_example()));
    CHECK(pair.m.ellipticity()->nu1 > 0.0);
    CHECK(pair.n.ellipticity()->nu1 > 0.0);
}

TEST_CASE("adjoint is an involution") {
    TorusGrid g(1, 2 * pi, 32);
    CoefficientFamily fam;
    fam.tag = FamilyTag::general;
    auto a = build_field(fam, g);
    auto aa = adjoint(adjoint(a));
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (std::size_t p = 0; p < g.size(); ++p) {
                CHECK(aa.entry(i, j)[p] == a.entry(i, j)[p]);
                CHECK(adjoint(a).entry(j, i)[p] == std::conj(a.entry(i, j)[p]));
            }
}

TEST_CASE("builtin families stay elliptic and have their structure") {
    for (int d : {1, 2}) {
        TorusGrid g(d, 2 * pi, d == 1 ? 64 : 16);
        for (auto tag : {FamilyTag::block, FamilyTag::hermitian, FamilyTag::general}) {
            for (std::uint64_t seed = 1; seed <= 12; ++seed) {
                CoefficientFamily fam;
                fam.tag = tag;
                fam.dimension = d;
                fam.seed = seed;
                fam.amplitude = 1.0;
                fam.max_mode = 3;
                auto a = build_field(fam, g);
                CHECK(a.ellipticity()->nu1 >= 0.2);
                for (std::size_t p = 0; p < g.size(); ++p) {
                    auto m = a.at(p);
                    if (tag == FamilyTag::block) {
                        for (int j = 0; j < d; ++j) {
                            CHECK(m(j, d) == cplx(0.0));
                            CHECK(m(d, j) == cplx(0.0));
                        }
                        CHECK(m(d, d).imag() == 0.0);
                    }
                    if (tag == FamilyTag::hermitian) CHECK((m - m.adjoint()).norm() < 1e-14);
                }
            }
        }
    }
}

TEST_CASE("family regeneration is bit identical and resolution independent") {
    CoefficientFamily fam;
    fam.tag = FamilyTag::general;
    fam.seed = 42;
    TorusGrid a(1, 2 * pi, 32), b(1, 2 * pi, 64);
    auto f1 = build_field(fam, a), f2 = build_field(fam, a), fb = build_field(fam, b);
    for (std::size_t p = 0; p < a.size(); ++p) {
        CHECK(f1.entry(0, 1)[p] == f2.entry(0, 1)[p]);
        CHECK(std::abs(f1.entry(0, 1)[p] - fb.entry(0, 1)[2 * p]) < 1e-15);
    }
    // the half-shifted samples of the coarse grid are the odd nodes of the fine one
    for (std::size_t p = 0; p < a.size(); ++p)
        CHECK(std::abs(f1.staggered(0, 0, 0)[p] - fb.entry(0, 0)[2 * p + 1]) < 1e-15);
}

TEST_CASE("spectral interpolation of samples and derived quantities") {
    TorusGrid g(1, 2 * pi, 32);
    CoefficientFamily fam;
    fam.tag = FamilyTag::expressions;
    fam.expressions = {{"a11", "2 + 0.5*sin(x)"}, {"a12", "0.3*sin(x)"}, {"a22", "1"}};
    auto a = build_field(fam, g);
    CHECK(*a.lipschitz() == doctest::Approx(0.8).epsilon(0.01));  // 0.5 from a11, 0.3 from a12
    auto div = r1_divergence(a);
    for (std::size_t p = 0; p < g.size(); ++p)
        CHECK(std::abs(div[p] - 0.3 * std::cos(g.node(p, 0))) < 1e-12);

    std::vector<std::vector<cplx>> e;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            auto s = a.entry(i, j);
            e.emplace_back(s.begin(), s.end());
        }
    auto b = CoefficientField::from_samples(g, e);
    for (std::size_t p = 0; p < g.size(); ++p)
        CHECK(std::abs(b.staggered(0, 0, 0)[p] - a.staggered(0, 0, 0)[p]) < 1e-12);

    fam.expressions.erase("a22");
    CHECK_THROWS_AS(build_field(fam, g), InvalidArgument);
}
