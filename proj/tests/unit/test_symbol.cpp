#include "doctest.h"

#include "dncalc/random.hpp"
#include "dncalc/symbol.hpp"

#include <cmath>

using namespace dncalc;

namespace {

CoefficientField family_field(FamilyTag tag, const TorusGrid& g, std::uint64_t seed = 3) {
    CoefficientFamily fam;
    fam.tag = tag;
    fam.dimension = g.dimension();
    fam.seed = seed;
    return build_field(fam, g);
}

double max_table_diff(const SymbolTable& a, const SymbolTable& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.values().size(); ++i)
        m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

}  // namespace

TEST_CASE("principal symbol of the running example") {
    TorusGrid g(1, 2 * pi, 16);
    auto a = family_field(FamilyTag::constant, g);
    auto mu = mu_of(a), lam = lambda_of(a), q = q_of(a);
    FrequencyLattice lat(g);
    double s = std::sqrt(1.84);
    CHECK(s == doctest::Approx(1.356466).epsilon(1e-6));
    for (std::size_t k = 0; k < g.size(); ++k) {
        double xi = lat.xi(k, 0);
        for (std::size_t p : {0u, 5u}) {
            CHECK(std::abs(mu(p, k) - cplx(-0.4 * xi, s * std::abs(xi))) < 1e-12);
            CHECK(std::abs(lam(p, k) - cplx(-0.1 * xi, s * std::abs(xi))) < 1e-12);
            CHECK(std::abs(q(p, k) - cplx(0.4 * xi, s * std::abs(xi))) < 1e-12);
        }
    }
}

TEST_CASE("identity coefficients give the Poisson symbol") {
    TorusGrid g(2, 2 * pi, 8);
    CoefficientFamily fam;
    fam.dimension = 2;
    fam.base = Eigen::MatrixXcd::Identity(3, 3);
    auto mu = mu_of(build_field(fam, g));
    FrequencyLattice lat(g);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(std::abs(mu(0, k) - I * lat.norm(k)) < 1e-12);
}

TEST_CASE("random elliptic matrices: residual, sign and homogeneity") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        int d = 1 + trial % 2;
        Eigen::MatrixXcd a(d + 1, d + 1);
        for (int i = 0; i <= d; ++i)
            for (int j = 0; j <= d; ++j) a(i, j) = cplx(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3));
        a += 1.5 * Eigen::MatrixXcd::Identity(d + 1, d + 1);
        double xi[2] = {rng.normal(), rng.normal()};
        std::span<const double> x(xi, d);
        cplx mu = principal_root(a, x);
        CHECK(root_residual(a, x, mu) < 1e-13);
        CHECK(mu.imag() > 0.0);
        double xi2[2] = {2.5 * xi[0], 2.5 * xi[1]};
        CHECK(std::abs(principal_root(a, std::span<const double>(xi2, d)) - 2.5 * mu) <
              1e-12 * std::abs(mu));
    }
}

TEST_CASE("closure matrices reproduce lambda and q for every family") {
    TorusGrid g(1, 2 * pi, 32);
    for (auto tag : {FamilyTag::constant, FamilyTag::block, FamilyTag::hermitian, FamilyTag::general}) {
        auto a = family_field(tag, g);
        auto pair = phi_closure_matrices(a);
        auto lam = lambda_of(a), q = q_of(a);
        auto phim = mu_of(pair.m), phin = mu_of(pair.n);
        double scale = 0;
        for (auto v : lam.values()) scale = std::max(scale, std::abs(v));
        CHECK(max_table_diff(phim, lam) < 1e-12 * scale);
        CHECK(max_table_diff(phin, q) < 1e-12 * scale);
    }
}

TEST_CASE("symbol bounds hold for builtin families") {
    TorusGrid g(1, 2 * pi, 32);
    for (auto tag : {FamilyTag::constant, FamilyTag::block, FamilyTag::hermitian, FamilyTag::general}) {
        auto a = family_field(tag, g);
        auto rep = check_symbol_bounds(mu_of(a), a);
        CHECK(rep.passed());
        CHECK(rep.metrics.at("lower_constant") > 0.0);
        CHECK(rep.metrics.at("inequality_violations") == 0.0);
    }
    auto a = family_field(FamilyTag::constant, g);
    auto rep = check_symbol_bounds(mu_of(a), a);
    CHECK(rep.metrics.at("lower_constant") == doctest::Approx(std::sqrt(1.84)).epsilon(1e-12));
    CHECK(rep.metrics.at("upper_constant") == doctest::Approx(std::sqrt(1.84 + 0.16)).epsilon(1e-12));
}

TEST_CASE("xi derivatives of i|xi|") {
    TorusGrid g(1, 2 * pi, 32);
    CoefficientFamily fam;
    fam.base = Eigen::MatrixXcd::Identity(2, 2);
    auto mu = mu_of(build_field(fam, g));
    auto d1 = symbol_xi_derivative(mu, {1, 0});
    auto d2 = symbol_xi_derivative(mu, {2, 0});
    FrequencyLattice lat(g);
    for (std::size_t k = 1; k < g.size(); ++k) {
        double sgn = lat.xi(k, 0) > 0 ? 1.0 : -1.0;
        CHECK(std::abs(d1(3, k) - I * sgn) < 1e-12);
        CHECK(std::abs(d2(3, k)) < 1e-12);
    }
    CHECK(*d1.degree() == doctest::Approx(0.0));
    CHECK_THROWS_AS(symbol_xi_derivative(mu, {3, 0}), InvalidArgument);
}

TEST_CASE("x gradient of a variable symbol") {
    TorusGrid g(1, 2 * pi, 32);
    CoefficientFamily fam;
    fam.tag = FamilyTag::expressions;
    fam.expressions = {{"a11", "2 + 0.5*sin(x)"}, {"a22", "1"}};
    auto mu = mu_of(build_field(fam, g));
    auto grad = symbol_x_gradient(mu);
    REQUIRE(grad.size() == 1);
    FrequencyLattice lat(g);
    // mu = i sqrt(a11) |xi|; the sqrt is not band limited so spectral accuracy only
    for (std::size_t p = 0; p < g.size(); ++p) {
        double x = g.node(p, 0);
        for (std::size_t k : {1u, 4u, 30u}) {
            cplx expect = I * lat.norm(k) * 0.5 * std::cos(x) / (2.0 * std::sqrt(2 + 0.5 * std::sin(x)));
            CHECK(std::abs(grad[0](p, k) - expect) < 1e-10 * lat.norm(k));
        }
    }
}
