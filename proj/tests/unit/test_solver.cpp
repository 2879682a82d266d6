#include "doctest.h"

#include "dncalc/cutoff.hpp"
#include "dncalc/random.hpp"
#include "dncalc/solver.hpp"

#include <Eigen/Eigenvalues>

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

CoefficientField constant_field(const TorusGrid& g, Eigen::MatrixXcd a) {
    CoefficientFamily fam;
    fam.base = a;
    return build_field(fam, g);
}

CoefficientField identity_field(const TorusGrid& g) { return constant_field(g, Eigen::MatrixXcd::Identity(2, 2)); }

CoefficientField running_field(const TorusGrid& g) {
    CoefficientFamily fam;
    return build_field(fam, g);
}

CoefficientField family(FamilyTag tag, const TorusGrid& g, std::uint64_t seed = 3) {
    CoefficientFamily fam;
    fam.tag = tag;
    fam.seed = seed;
    return build_field(fam, g);
}

GridFunction random_function(const TorusGrid& g, std::uint64_t seed, int band) {
    Rng rng(seed);
    Spectrum s{g, std::vector<cplx>(g.size(), 0.0)};
    FrequencyLattice lat(g);
    for (std::size_t k = 0; k < g.size(); ++k)
        if (std::abs(lat.wavenumber(k, 0)) <= band) s.coefficients[k] = cplx(rng.normal(), rng.normal());
    return from_spectral(s);
}

/// max over the strip of |u - exact(x, t)|
template <class F>
double strip_error(const StripSolution& s, F&& exact) {
    double e = 0;
    std::size_t N = s.grid.size();
    for (int n = 0; n <= s.levels; ++n)
        for (std::size_t m = 0; m < N; ++m)
            e = std::max(e, std::abs(s.values[n * N + m] - exact(s.grid.node(m, 0), n * s.dt)));
    return e;
}

}  // namespace

TEST_CASE("strip geometry and preconditions") {
    TorusGrid g(1, 2 * pi, 32);
    StripDiscretization disc(identity_field(g));
    CHECK(disc.height() == doctest::Approx(8 * pi));
    CHECK(disc.levels() == 128);
    CHECK(disc.dt() == doctest::Approx(g.spacing()));
    CHECK(disc.unknowns() == 127u * 32u);
    CHECK_THROWS_AS(StripDiscretization(identity_field(g), StripOptions{.height = 2 * pi}), InvalidArgument);
    TorusGrid g2(2, 2 * pi, 8);
    CoefficientFamily fam2;
    fam2.dimension = 2;
    CHECK_THROWS_AS(StripDiscretization(build_field(fam2, g2)), Unsupported);
}

TEST_CASE("identity scheme is the five point Laplacian") {
    TorusGrid g(1, 2 * pi, 16);
    StripDiscretization disc(identity_field(g));
    double h = g.spacing(), dt = disc.dt();
    std::vector<cplx> full((disc.levels() + 1) * g.size(), 0.0), out(disc.unknowns());
    std::size_t c = 5 * g.size() + 7;
    full[c] = 1.0;
    disc.apply(full, out);
    std::size_t N = g.size();
    auto at = [&](int n, int m) { return out[(n - 1) * N + m]; };
    CHECK(std::abs(at(5, 7) - (2 / (h * h) + 2 / (dt * dt))) < 1e-9);
    CHECK(std::abs(at(5, 6) + 1 / (h * h)) < 1e-9);
    CHECK(std::abs(at(4, 7) + 1 / (dt * dt)) < 1e-9);
    CHECK(std::abs(at(4, 6)) == 0.0);
    CHECK(std::abs(at(6, 8)) == 0.0);
}

TEST_CASE("stencil matches the flux form written out") {
    TorusGrid g(1, 2 * pi, 16);
    auto a = family(FamilyTag::general, g);
    StripDiscretization disc(a, StripOptions{.levels = 40});
    std::size_t N = g.size();
    int Nt = disc.levels();
    Rng rng(4);
    std::vector<cplx> u((Nt + 1) * N), out(disc.unknowns());
    for (auto& v : u) v = cplx(rng.normal(), rng.normal());
    disc.apply(u, out);
    double h = g.spacing(), dt = disc.dt();
    auto U = [&](int n, int m) { return u[n * N + (m + N) % N]; };
    auto a11 = a.staggered(0, 0, 0), a12 = a.staggered(0, 1, 0), a21 = a.entry(1, 0), a22 = a.entry(1, 1);
    double worst = 0;
    for (int n = 1; n < Nt; ++n)
        for (int m = 0; m < static_cast<int>(N); ++m) {
            auto fx = [&](int mm) {  // flux through x_{mm+1/2} at level n
                std::size_t q = (mm + N) % N;
                return a11[q] * (U(n, mm + 1) - U(n, mm)) / h +
                       a12[q] * (U(n + 1, mm) + U(n + 1, mm + 1) - U(n - 1, mm) - U(n - 1, mm + 1)) / (4 * dt);
            };
            auto ft = [&](int nn) {  // flux through t_{nn+1/2} at node m
                return a21[m] * (U(nn, m + 1) + U(nn + 1, m + 1) - U(nn, m - 1) - U(nn + 1, m - 1)) / (4 * h) +
                       a22[m] * (U(nn + 1, m) - U(nn, m)) / dt;
            };
            cplx r = -(fx(m) - fx(m - 1)) / h - (ft(n) - ft(n - 1)) / dt;
            worst = std::max(worst, std::abs(r - out[(n - 1) * N + m]) / (1 + std::abs(r)));
        }
    CHECK(worst < 1e-12);
}

TEST_CASE("identity plane waves converge at second order") {
    int k = 2;
    std::vector<double> err;
    for (int N : {32, 64}) {
        TorusGrid g(1, 2 * pi, N);
        StripDiscretization disc(identity_field(g));
        auto s = solve_dirichlet(disc, plane_wave(g, k));
        CHECK(s.residual <= 1e-10);
        CHECK(max_diff(s.trace(0), plane_wave(g, k)) == 0.0);
        err.push_back(strip_error(s, [&](double x, double t) { return std::exp(-k * t) * std::exp(I * (k * x)); }));
        auto p = poisson_apply(disc, plane_wave(g, k));
        CHECK(max_diff(p, cplx(k) * plane_wave(g, k)) < 0.02 * k);
    }
    CHECK(err[0] / err[1] > 3.5);
    CHECK(err[1] < 2e-3);
}

TEST_CASE("running example: exponential ansatz and traces") {
    cplx mu1(-0.4, std::sqrt(1.84));
    std::vector<double> err, perr;
    for (int N : {32, 64}) {
        TorusGrid g(1, 2 * pi, N);
        StripDiscretization disc(running_field(g));
        auto f = plane_wave(g, 1);
        auto s = solve_dirichlet(disc, f);
        err.push_back(strip_error(s, [&](double x, double t) { return std::exp(I * t * mu1) * std::exp(I * x); }));
        auto p = poisson_apply(disc, f);
        perr.push_back(max_diff(p, cplx(1.356466, 0.4) * f));
        auto q = q_apply(disc, f);
        CHECK(max_diff(q, cplx(1.356466, -0.4) * f) < 0.02);
        auto lam = dn_apply(disc, f);
        // Lambda = b P - r2 f'
        CHECK(max_diff(lam, p - cplx(0.3) * derivative(f, 0)) < 1e-12);
    }
    CHECK(err[0] / err[1] > 3.5);
    CHECK(perr[0] / perr[1] > 3.5);
    CHECK(perr[1] < 4e-3);
}

TEST_CASE("constants are exact") {
    TorusGrid g(1, 2 * pi, 32);
    for (auto tag : {FamilyTag::constant, FamilyTag::general, FamilyTag::hermitian}) {
        StripDiscretization disc(family(tag, g));
        auto c = GridFunction::constant(g, cplx(1.5, -0.25));
        auto s = solve_dirichlet(disc, c);
        for (auto v : s.values) CHECK(v == cplx(1.5, -0.25));
        CHECK(l2_norm(poisson_apply(disc, c)) == 0.0);
        CHECK(l2_norm(dn_apply(disc, c)) == 0.0);
    }
}

TEST_CASE("inhomogeneous problems") {
    TorusGrid g(1, 2 * pi, 32);
    auto a = family(FamilyTag::general, g);
    StripDiscretization disc(a);
    std::size_t N = g.size();
    int Nt = disc.levels();
    std::vector<cplx> zero((Nt + 1) * N, 0.0);
    auto z = solve_inhomogeneous(disc, zero);
    for (auto v : z.values) CHECK(v == cplx(0.0));

    // discrete manufactured solution supported below T/2
    Rng rng(11);
    std::vector<cplx> w((Nt + 1) * N, 0.0), src((Nt + 1) * N, 0.0), tmp(disc.unknowns());
    for (int n = 1; n < Nt / 2; ++n)
        for (std::size_t m = 0; m < N; ++m) w[n * N + m] = cplx(rng.normal(), rng.normal());
    disc.apply(w, tmp);
    std::copy(tmp.begin(), tmp.end(), src.begin() + N);
    auto s = solve_inhomogeneous(disc, src);
    double e = 0;
    for (std::size_t q = 0; q < w.size(); ++q) e = std::max(e, std::abs(s.values[q] - w[q]));
    CHECK(e < 1e-9);

    std::vector<cplx> late((Nt + 1) * N, 0.0);
    late[(Nt - 2) * N] = 1.0;
    CHECK_THROWS_AS(solve_inhomogeneous(disc, late), InvalidArgument);
}

TEST_CASE("identity source sin(x) phi(t) against a modal two-point solve") {
    auto phi = [](double t) { return t * t * SmoothCutoff::value(t / 2); };
    // reference: -u'' + u = phi on [0, T], u(0) = u(T) = 0, fine second-order grid
    double T = 8 * pi;
    int M = 200000;
    double dz = T / M;
    std::vector<double> sub(M - 1, -1 / (dz * dz)), diag(M - 1, 2 / (dz * dz) + 1), rhs(M - 1);
    for (int i = 1; i < M; ++i) rhs[i - 1] = phi(i * dz);
    for (int i = 1; i < M - 1; ++i) {
        double f = sub[i] / diag[i - 1];
        diag[i] -= f * sub[i - 1];
        rhs[i] -= f * rhs[i - 1];
    }
    std::vector<double> ref(M + 1, 0.0);
    for (int i = M - 1; i >= 1; --i) ref[i] = (rhs[i - 1] - sub[i - 1] * ref[i + 1]) / diag[i - 1];
    auto reference = [&](double t) {
        double p = t / dz;
        int i = std::min(static_cast<int>(p), M - 1);
        double th = p - i;
        return (1 - th) * ref[i] + th * ref[i + 1];
    };

    std::vector<double> err;
    for (int N : {32, 64}) {
        TorusGrid g(1, 2 * pi, N);
        StripDiscretization disc(identity_field(g));
        std::size_t n = g.size();
        int Nt = disc.levels();
        std::vector<cplx> src((Nt + 1) * n, 0.0);
        for (int l = 0; l <= Nt; ++l)
            for (std::size_t m = 0; m < n; ++m) src[l * n + m] = std::sin(g.node(m, 0)) * phi(l * disc.dt());
        auto s = solve_inhomogeneous(disc, src);
        err.push_back(strip_error(s, [&](double x, double t) { return std::sin(x) * reference(t); }));
    }
    CHECK(err[0] / err[1] > 3.5);
    CHECK(err[1] < 5e-3);
}

TEST_CASE("Dirichlet-Neumann form") {
    TorusGrid g(1, 2 * pi, 64);
    StripDiscretization id(identity_field(g));
    auto f = plane_wave(g, 2);
    cplx w = dn_weak(id, f, f);
    CHECK(std::abs(w - 2.0 * 2 * pi) < 0.02 * 4 * pi);

    auto a = family(FamilyTag::general, g);
    StripDiscretization disc(a);
    auto u = random_function(g, 1, 4), v = random_function(g, 2, 4);
    auto eu = solve_dirichlet(disc, u), ev = solve_dirichlet(disc, v);
    cplx alpha(0.3, -1.7);
    auto eau = solve_dirichlet(disc, alpha * u);
    CHECK(std::abs(dn_weak(disc, eau, ev) - alpha * dn_weak(disc, eu, ev)) < 1e-9 * std::abs(dn_weak(disc, eu, ev)));
    cplx weak = dn_weak(disc, eu, ev);
    cplx strong = inner(boundary_traces(disc, eu).lambda, v);
    CHECK(std::abs(weak - strong) < 0.05 * std::abs(weak));

    // adjoint relation <Lambda_A f, g> = <f, Lambda_{A*} g>
    StripDiscretization dadj(adjoint(a));
    cplx lhs = inner(dn_apply(disc, u), v), rhs = inner(u, dn_apply(dadj, v));
    CHECK(std::abs(lhs - rhs) < 0.01 * std::abs(lhs));
}

TEST_CASE("block coefficients: Lambda = b P") {
    TorusGrid g(1, 2 * pi, 32);
    auto a = family(FamilyTag::block, g);
    StripDiscretization disc(a);
    auto f = random_function(g, 5, 5);
    auto tr = boundary_traces(disc, solve_dirichlet(disc, f));
    CHECK(max_diff(tr.lambda, multiply(a.b(), tr.p)) < 1e-12 * l2_norm(f));

    auto one = constant_field(g, Eigen::Matrix2cd{{2.0, 0.0}, {0.0, 1.0}});
    StripDiscretization d1(one);
    auto t1 = boundary_traces(d1, solve_dirichlet(d1, f));
    CHECK(max_diff(t1.lambda, t1.p) < 1e-12 * l2_norm(f));
    // identity: Q = Lambda
    StripDiscretization id(identity_field(g));
    CHECK(max_diff(q_apply(id, f), dn_apply(id, f)) < 1e-12 * l2_norm(f));
    CHECK(max_diff(dn_apply(id, plane_wave(g, 3)), cplx(3.0) * plane_wave(g, 3)) < 0.1);
}

TEST_CASE("horizontal operator") {
    std::vector<double> err;
    for (int N : {32, 64}) {
        TorusGrid g(1, 2 * pi, N);
        CoefficientFamily fam;
        fam.tag = FamilyTag::expressions;
        fam.expressions = {{"a11", "2 + 0.5*sin(x)"}, {"a22", "1"}};
        auto a = build_field(fam, g);
        auto f = plane_wave(g, 1);
        auto exact = GridFunction::sample(g, [](const std::array<double, 2>& x) {
            return (2 + 0.5 * std::sin(x[0]) - 0.5 * I * std::cos(x[0])) * std::exp(I * x[0]);
        });
        err.push_back(max_diff(aprime_apply(a, f), exact));
        CHECK(l2_norm(aprime_apply(a, GridFunction::constant(g, 3.0))) == 0.0);
    }
    CHECK(err[0] / err[1] > 3.5);
    TorusGrid g(1, 2 * pi, 64);
    auto id = identity_field(g);
    CHECK(max_diff(aprime_apply(id, plane_wave(g, 3)), cplx(9.0) * plane_wave(g, 3)) < 0.1);
}

TEST_CASE("frozen-coefficient symbols reproduce the scheme on plane waves") {
    TorusGrid g(1, 2 * pi, 32);
    StripDiscretization disc(running_field(g));
    const auto& rho = disc.discrete_rho();
    const auto& tr = disc.discrete_trace_symbol();
    const auto& mu = disc.discrete_mu();
    FrequencyLattice lat(g);
    for (int k : {1, 3, -5, 9}) {
        auto f = plane_wave(g, k);
        std::size_t q = lat.index_of({k, 0});
        CHECK(std::abs(rho(0, q)) < 1.0);
        CHECK(mu(0, q).imag() > 0);
        CHECK(std::abs(std::exp(I * disc.dt() * mu(0, q)) - rho(0, q)) < 1e-14);
        auto p = poisson_apply(disc, f);
        CHECK(max_diff(p, tr(0, q) * f) < 1e-9 * std::abs(tr(0, q)));
        auto s = solve_dirichlet(disc, f);
        cplx ratio = s.values[g.size()] / s.values[0];
        CHECK(std::abs(ratio - rho(0, q)) < 1e-10);
    }
    CHECK(rho(0, 0) == cplx(1.0));
    CHECK(tr(0, 0) == cplx(0.0));
    // discrete mu approaches the continuum root
    cplx mu1(-0.4, std::sqrt(1.84));
    CHECK(std::abs(mu(0, lat.index_of({1, 0})) - mu1) < 0.01);

    StripDiscretization three(running_field(g), StripOptions{.trace = TraceRule::three_point});
    std::size_t q = lat.index_of({2, 0});
    auto p3 = poisson_apply(three, plane_wave(g, 2));
    CHECK(max_diff(p3, three.discrete_trace_symbol()(0, q) * plane_wave(g, 2)) < 1e-9);
}

TEST_CASE("remainder pieces") {
    TorusGrid g(1, 2 * pi, 32);
    StripDiscretization disc(running_field(g));
    auto h = random_function(g, 7, 8);
    auto r = s1_apply(disc, h);
    CHECK(l2_norm(r.s) < 1e-9 * l2_norm(r.p));
    CHECK(r.cross_check_gap < 1e-9);
    // the continuum principal part differs from the scheme by O((k dt)^2) per mode
    auto low = random_function(g, 7, 3);
    auto rc = s1_apply(disc, low, PrincipalChoice::continuum);
    CHECK(l2_norm(rc.s) < 0.1 * l2_norm(rc.p));

    auto ctx = principal_context(disc, PrincipalChoice::discrete);
    std::vector<int> lv{0, 5, 20, 40};
    auto u1 = u1_compute(disc, *ctx, h, lv);
    CHECK(l2_norm(u1[0]) == 0.0);
    CHECK(l2_norm(u1[1]) < 1e-9 * l2_norm(h));

    auto cont = principal_context(disc, PrincipalChoice::continuum);
    auto u1c = u1_compute(disc, *cont, h, lv);
    CHECK(l2_norm(u1c[0]) == 0.0);
    CHECK(l2_norm(u1c[1]) < 0.02 * l2_norm(h));

    StripDiscretization gen(family(FamilyTag::general, g));
    auto gctx = principal_context(gen, PrincipalChoice::discrete);
    CHECK(l2_norm(u1_compute(gen, *gctx, h, std::vector<int>{0})[0]) == 0.0);
    auto rg = s1_apply(gen, h);
    CHECK(rg.cross_check_gap < 0.05);
}

TEST_CASE("operator matrices") {
    TorusGrid g(1, 2 * pi, 32);
    StripDiscretization id(identity_field(g), StripOptions{.backend = SolverBackend::direct});
    auto P = assemble_operator_matrix(id, BoundaryOperator::p);
    CHECK(P.label == "P");
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(P.matrix);
    std::vector<double> ev;
    for (int i = 0; i < 32; ++i) ev.push_back(es.eigenvalues()[i].real());
    std::sort(ev.begin(), ev.end());
    CHECK(std::abs(ev[0]) < 1e-10);
    CHECK(ev[1] == doctest::Approx(1.0).epsilon(2e-3));
    CHECK(ev[2] == doctest::Approx(1.0).epsilon(2e-3));
    CHECK(ev[3] == doctest::Approx(2.0).epsilon(0.02));

    auto a = family(FamilyTag::general, g);
    StripDiscretization disc(a, StripOptions{.backend = SolverBackend::direct});
    auto f = random_function(g, 3, 16);
    for (auto which : {BoundaryOperator::p, BoundaryOperator::lambda, BoundaryOperator::q}) {
        auto M = assemble_operator_matrix(disc, which);
        Eigen::Map<const Eigen::VectorXcd> fv(f.values().data(), 32);
        Eigen::VectorXcd mf = M.matrix * fv;
        auto direct = which == BoundaryOperator::p ? poisson_apply(disc, f)
                      : which == BoundaryOperator::lambda ? dn_apply(disc, f) : q_apply(disc, f);
        Eigen::Map<const Eigen::VectorXcd> dv(direct.values().data(), 32);
        CHECK((mf - dv).norm() < 1e-10 * dv.norm());
    }

    auto herm = family(FamilyTag::hermitian, g);
    StripDiscretization dh(herm, StripOptions{.backend = SolverBackend::direct});
    auto L = assemble_operator_matrix(dh, BoundaryOperator::lambda).matrix;
    CHECK((L - L.adjoint()).norm() < 1e-2 * L.norm());
    TorusGrid big(1, 2 * pi, 1024);
    CHECK_THROWS_AS(assemble_operator_matrix(StripDiscretization(identity_field(big)), BoundaryOperator::p),
                    InvalidArgument);
}

TEST_CASE("Krylov and direct backends agree") {
    TorusGrid g(1, 2 * pi, 32);
    auto a = family(FamilyTag::general, g, 9);
    StripDiscretization kr(a), dr(a, StripOptions{.backend = SolverBackend::direct});
    auto f = random_function(g, 6, 10);
    auto sk = solve_dirichlet(kr, f), sd = solve_dirichlet(dr, f);
    double e = 0, mx = 0;
    for (std::size_t q = 0; q < sk.values.size(); ++q) {
        e = std::max(e, std::abs(sk.values[q] - sd.values[q]));
        mx = std::max(mx, std::abs(sd.values[q]));
    }
    CHECK(e < 1e-9 * mx);
    CHECK(sk.iterations > 0);
    CHECK(sk.condition_estimate >= 1.0);
    CHECK(sd.condition_estimate > 1.0);
    CHECK(sd.backend == "sparse-lu");

    StripDiscretization starved(a, StripOptions{.max_iterations = 1});
    CHECK_THROWS_AS(solve_dirichlet(starved, f), SolverError);
}

TEST_CASE("top condition: zero net flux versus mean value") {
    TorusGrid g(1, 2 * pi, 32);
    auto a = family(FamilyTag::general, g);
    auto f = random_function(g, 11, 4);
    auto top_values = [&](const StripSolution& u) { return u.trace(u.levels); };

    StripOptions zero;
    StripDiscretization dz(a, zero);
    auto uz = solve_dirichlet(dz, f);
    auto tz = top_values(uz);
    for (std::size_t m = 1; m < g.size(); ++m) CHECK(std::abs(tz[m] - tz[0]) < 1e-12);
    CHECK(std::abs(dz.top_flux(uz)) < 1e-10 * l2_norm(f));
    CHECK(std::abs(dz.top_flux(dz.lift())) > 0.0);

    StripOptions mv;
    mv.top = TopCondition::mean_value;
    StripDiscretization dm(a, mv);
    auto um = solve_dirichlet(dm, f);
    auto tm = top_values(um);
    for (std::size_t m = 0; m < g.size(); ++m) CHECK(std::abs(tm[m] - mean(f)) < 1e-12);
    CHECK(std::abs(dm.top_flux(um)) > 1e-8);
}
