#include "doctest.h"

#include "dncalc/psdo.hpp"
#include "dncalc/random.hpp"

#include <cmath>

using namespace dncalc;

namespace {

GridFunction plane_wave(const TorusGrid& g, int k) {
    double w = 2 * pi / g.length();
    return GridFunction::sample(g, [=](const std::array<double, 2>& x) { return std::exp(I * (w * k * x[0])); });
}

double max_diff(const GridFunction& a, const GridFunction& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

CoefficientField identity_field(const TorusGrid& g) {
    CoefficientFamily fam;
    fam.dimension = g.dimension();
    fam.base = Eigen::MatrixXcd::Identity(g.dimension() + 1, g.dimension() + 1);
    fam.period = g.length();
    return build_field(fam, g);
}

CoefficientField family(FamilyTag tag, const TorusGrid& g) {
    CoefficientFamily fam;
    fam.tag = tag;
    fam.seed = 5;
    fam.period = g.length();
    return build_field(fam, g);
}

GridFunction zero_mean_random(const TorusGrid& g, std::uint64_t seed, int band) {
    Rng rng(seed);
    Spectrum s{g, std::vector<cplx>(g.size(), 0.0)};
    FrequencyLattice lat(g);
    for (std::size_t k = 1; k < g.size(); ++k)
        if (std::abs(lat.wavenumber(k, 0)) <= band) s.coefficients[k] = cplx(rng.normal(), rng.normal());
    return from_spectral(s);
}

}  // namespace

TEST_CASE("quantization of x-independent symbols is a multiplier") {
    TorusGrid g(1, 2 * pi, 32);
    auto ctx = PrincipalContext::make(identity_field(g));
    auto f = plane_wave(g, 3);
    CHECK(max_diff(quantize(ctx->mu, f), cplx(0, 3) * f) < 1e-12);

    CoefficientFamily fam;
    auto a = build_field(fam, g);
    auto mu = mu_of(a);
    auto f1 = plane_wave(g, 1);
    CHECK(max_diff(quantize(mu, f1), cplx(-0.4, std::sqrt(1.84)) * f1) < 1e-12);
    // degree one symbols annihilate constants
    auto v = family(FamilyTag::general, g);
    CHECK(l2_norm(quantize(mu_of(v), GridFunction::constant(g, 2.0))) < 1e-12);
}

TEST_CASE("principal semigroup on plane waves") {
    TorusGrid g(1, 2 * pi, 32);
    auto id = PrincipalContext::make(identity_field(g));
    for (int k : {1, 4, -7}) {
        auto h = plane_wave(g, k);
        for (double t : {0.1, 0.5, 2.0})
            CHECK(max_diff(u0_apply(*id, t, h), std::exp(-t * std::abs(k)) * h) < 1e-13);
    }
    auto v = PrincipalContext::make(family(FamilyTag::general, g));
    auto h = zero_mean_random(g, 2, 6);
    CHECK(max_diff(u0_apply(*v, 0.0, h), h) == 0.0);
    CoefficientFamily fam;
    auto run = PrincipalContext::make(build_field(fam, g));
    auto h1 = plane_wave(g, 1);
    CHECK(max_diff(u0_apply(*run, 1.0, h1), std::exp(cplx(-std::sqrt(1.84), -0.4)) * h1) < 1e-13);
    CHECK_THROWS_AS(u0_apply(*run, -1.0, h1), InvalidArgument);
}

TEST_CASE("weighted operators") {
    TorusGrid g(1, 2 * pi, 32);
    auto v = PrincipalContext::make(family(FamilyTag::hermitian, g));
    auto h = zero_mean_random(g, 3, 8);
    CHECK(max_diff(gp_apply(weights::unit(), *v, 0.7, h), u0_apply(*v, 0.7, h)) < 1e-13);

    auto id = PrincipalContext::make(identity_field(g));
    auto h5 = plane_wave(g, 5);
    double t = 0.3;
    CHECK(max_diff(gp_apply(weights::scaled_frequency(1.0), *id, t, h5),
                   (t * 5 * std::exp(-t * 5)) * h5) < 1e-13);

    CoefficientFamily fam;
    auto run = PrincipalContext::make(build_field(fam, g));
    CHECK(l2_norm(gp_apply(weights::pi_prime(run), *run, 0.5, h)) < 1e-12);
    CHECK(l2_norm(gp_apply(weights::zeta(run), *run, 0.5, h)) < 1e-12);

    // t d/dt U_0 = G_{i t mu}: compare with a centred difference in t
    double dt = 1e-5;
    auto d1 = gp_apply(weights::time_power(v, 1), *v, t, h);
    auto fd = (t / (2 * dt)) * (u0_apply(*v, t + dt, h) - u0_apply(*v, t - dt, h));
    CHECK(max_diff(d1, fd) < 1e-6 * l2_norm(h));
}

TEST_CASE("kernel of the Poisson semigroup") {
    TorusGrid g(1, 16 * pi, 512);
    auto id = PrincipalContext::make(identity_field(g));
    double t = 0.5, L = g.length();
    auto ks = kernel_slice(weights::unit(), *id, 0, t);
    double worst = 0, peak = 0, mass = 0;
    for (std::size_t q = 0; q < ks.values.size(); ++q) {
        double y = ks.offsets[q][0];
        double exact = std::sinh(2 * pi * t / L) / (L * (std::cosh(2 * pi * t / L) - std::cos(2 * pi * y / L)));
        worst = std::max(worst, std::abs(ks.values[q] - exact));
        peak = std::max(peak, exact);
        mass += ks.values[q].real() * g.spacing();
    }
    CHECK(worst < 0.01 * peak);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(ks.offsets[256][0]) < 1e-14);
}

TEST_CASE("kernel convolution reproduces the weighted operator") {
    TorusGrid g(1, 2 * pi, 64);
    auto v = PrincipalContext::make(family(FamilyTag::general, g));
    auto h = zero_mean_random(g, 9, 12);
    auto p = weights::pi_prime(v);
    double t = 0.4;
    auto direct = gp_apply(p, *v, t, h);
    for (std::size_t node : {0u, 17u, 40u}) {
        auto ks = kernel_slice(p, *v, node, t);
        cplx acc = 0.0;
        for (std::size_t q = 0; q < ks.values.size(); ++q) {
            int off = static_cast<int>(q) - 32;
            acc += g.spacing() * ks.values[q] * h[g.flat_index({static_cast<int>(node) - off, 0})];
        }
        CHECK(std::abs(acc - direct[node]) < 1e-11 * l2_norm(h));
    }
}

TEST_CASE("commutator with the gradient") {
    TorusGrid g(1, 2 * pi, 32);
    CoefficientFamily fam;
    auto run = PrincipalContext::make(build_field(fam, g));
    auto h = zero_mean_random(g, 4, 10);
    CHECK(l2_norm(commutator_u0(*run, 0.8, h)[0]) < 1e-12 * l2_norm(h));
    auto v = PrincipalContext::make(family(FamilyTag::general, g));
    CHECK(l2_norm(commutator_u0(*v, 0.0, h)[0]) < 1e-12 * l2_norm(h));
    // grad U_0 h - U_0 grad h = G_{i t d_x mu} h, up to aliasing of the grid derivative
    WeightFamily w{"it dmu", {[v](std::size_t m, std::size_t k, double t) { return I * t * v->grad_mu[0](m, k); }},
                   WeightHypothesis::none, {}};
    CHECK(max_diff(commutator_u0(*v, 0.6, h)[0], gp_apply(w, *v, 0.6, h)) < 1e-5 * l2_norm(h));
}

TEST_CASE("square functions of the identity") {
    TorusGrid g(1, 2 * pi, 64);
    auto id = PrincipalContext::make(identity_field(g));
    auto quad = TimeQuadrature::standard(g);
    auto h = zero_mean_random(g, 8, 20);
    auto r1 = square_function(weights::scaled_frequency(1.0), *id, h, quad);
    CHECK(r1.ratio == doctest::Approx(0.25).epsilon(1e-4));
    auto r2 = square_function(weights::scaled_frequency(0.5), *id, h, quad);
    CHECK(r2.ratio == doctest::Approx(0.5).epsilon(1e-3));
    for (int k : {1, 2, 8, 31}) {
        auto hk = plane_wave(g, k);
        CHECK(square_function(weights::scaled_frequency(1.0), *id, hk, quad).ratio ==
              doctest::Approx(0.25).epsilon(1e-4));
    }
    CHECK_THROWS_AS(square_function(weights::unit(), *id, h, quad), InvalidArgument);
    CHECK_THROWS_AS(square_function(weights::scaled_frequency(1.0), *id, GridFunction::constant(g, 1.0), quad),
                    ZeroModeError);

    std::vector<GridFunction> modes{plane_wave(g, 1), plane_wave(g, 3)};
    auto half = u0_half_integral(*id, modes, quad);
    CHECK(half[0] == doctest::Approx(1.0 / 4.0).epsilon(1e-3));
    CHECK(half[1] == doctest::Approx(3.0 / 8.0).epsilon(1e-3));

    auto ts = quad.nodes();
    auto sup = sup_ratio(weights::scaled_frequency(1.0), *id, modes, ts);
    CHECK(sup[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-3));
}
