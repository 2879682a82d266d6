#include "dncalc/solver.hpp"

#include "dncalc/cutoff.hpp"
#include "dncalc/fft.hpp"
#include "dncalc/random.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>
#include <numeric>

namespace dncalc {

std::string to_string(SolverBackend b) { return b == SolverBackend::krylov ? "gmres" : "sparse-lu"; }
std::string to_string(TopCondition c) { return c == TopCondition::zero_flux ? "zero-flux" : "mean-value"; }
std::string to_string(TraceRule r) { return r == TraceRule::flux ? "flux" : "three-point"; }
std::string to_string(BoundaryOperator op) {
    switch (op) {
        case BoundaryOperator::p: return "P";
        case BoundaryOperator::lambda: return "Lambda";
        case BoundaryOperator::q: return "Q";
    }
    return "?";
}

std::span<const cplx> StripSolution::level(int n) const {
    std::size_t N = grid.size();
    return std::span<const cplx>(values).subspan(static_cast<std::size_t>(n) * N, N);
}

GridFunction StripSolution::trace(int n) const {
    auto s = level(n);
    return GridFunction(grid, std::vector<cplx>(s.begin(), s.end()));
}

namespace {

using Weights = std::array<cplx, 9>;

Weights probe(const LocalCoefficients& c, double h, double dt) {
    Weights w{};
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j) {
            auto unit = [=](int a, int b) { return (a == i && b == j) ? cplx(1.0) : cplx(0.0); };
            w[(i + 1) * 3 + (j + 1)] = stencil_residual(c, unit, h, dt);
        }
    return w;
}

/// c_j(theta) = sum_i W[i][j] e^{i theta i}, j = -1, 0, 1.
std::array<cplx, 3> mode_coefficients(const Weights& w, double theta) {
    std::array<cplx, 3> c{};
    for (int i = -1; i <= 1; ++i) {
        cplx e = std::polar(1.0, theta * i);
        for (int j = -1; j <= 1; ++j) c[j + 1] += w[(i + 1) * 3 + (j + 1)] * e;
    }
    return c;
}

/// Root of cp r^2 + c0 r + cm = 0 with |r| < 1 (the decaying one), stable form.
cplx decaying_root(cplx cp, cplx c0, cplx cm) {
    cplx disc = std::sqrt(c0 * c0 - 4.0 * cp * cm);
    cplx qa = -0.5 * (c0 + disc), qb = -0.5 * (c0 - disc);
    cplx q = std::abs(qa) >= std::abs(qb) ? qa : qb;
    cplx r1 = q / cp, r2 = cm / q;
    return std::abs(r1) < std::abs(r2) ? r1 : r2;
}

double norm2(std::span<const cplx> v) {
    double s = 0;
    for (auto z : v) s += std::norm(z);
    return std::sqrt(s);
}

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
    cplx s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

}  // namespace

struct StripDiscretization::Direct {
    std::once_flag once;
    Eigen::SparseLU<Eigen::SparseMatrix<cplx>, Eigen::COLAMDOrdering<int>> lu;
    double condition = 0.0;
    bool ok = false;
};

StripDiscretization::StripDiscretization(CoefficientField a, StripOptions opts)
    : field_(std::move(a)), opts_(opts) {
    const auto& g = field_.grid();
    if (g.dimension() != 1) throw Unsupported("strip solver is implemented for d = 1 only");
    double L = g.length(), h = g.spacing();
    height_ = opts_.height > 0 ? opts_.height : 4.0 * L;
    if (height_ < 4.0 * L * (1 - 1e-12)) throw InvalidArgument("strip height must be at least 4 L");
    levels_ = opts_.levels > 0 ? opts_.levels : static_cast<int>(std::lround(height_ / h));
    if (levels_ < 4) throw InvalidArgument("strip needs at least 4 levels");
    dt_ = height_ / levels_;
    if (opts_.restart < 2 || opts_.max_iterations < 1) throw InvalidArgument("bad Krylov settings");

    std::size_t N = g.size();
    auto a11 = field_.staggered(0, 0, 0), a12 = field_.staggered(0, 1, 0);
    auto a21 = field_.entry(1, 0), a22 = field_.entry(1, 1);
    local_.resize(N);
    weights_.resize(N);
    LocalCoefficients avg{0, 0, 0, 0, 0, 0};
    for (std::size_t m = 0; m < N; ++m) {
        std::size_t l = (m + N - 1) % N;
        local_[m] = {a11[m], a11[l], a12[m], a12[l], a21[m], a22[m]};
        weights_[m] = probe(local_[m], h, dt_);
        avg.a11_right += a11[m];
        avg.a12_right += a12[m];
        avg.a21 += a21[m];
        avg.a22 += a22[m];
    }
    double inv = 1.0 / static_cast<double>(N);
    avg.a11_right *= inv;
    avg.a12_right *= inv;
    avg.a21 *= inv;
    avg.a22 *= inv;
    avg.a11_left = avg.a11_right;
    avg.a12_left = avg.a12_right;
    Weights wbar = probe(avg, h, dt_);

    // Thomas factors of the averaged scheme, one tridiagonal system per mode
    std::size_t M = static_cast<std::size_t>(levels_ - 1);
    thomas_inv_beta_.assign(N * M, 0.0);
    thomas_gamma_.assign(N * M, 0.0);
    thomas_cm_.assign(N, 0.0);
    FrequencyLattice lat(g);
    // level-major [n * N + k] so that the sweeps run over contiguous rows
    for (std::size_t k = 0; k < N; ++k) {
        auto c = mode_coefficients(wbar, 2.0 * pi * lat.wavenumber(k, 0) / g.points());
        thomas_cm_[k] = c[0];
        cplx beta = c[1];
        for (std::size_t n = 0; n < M; ++n) {
            if (n > 0) beta = c[1] - c[0] * thomas_gamma_[(n - 1) * N + k];
            thomas_inv_beta_[n * N + k] = 1.0 / beta;
            thomas_gamma_[n * N + k] = c[2] / beta;
        }
    }
    direct_ = std::make_shared<Direct>();
    symbols_ = std::make_shared<Symbols>();
    lift_ = std::make_shared<Lift>();
}

namespace {

/// Rows 1..Nt-1 of the stencil; dn/up rows are null where they are zero.
void apply_rows(const std::vector<Weights>& weights, std::size_t N, int Nt,
                const std::function<const cplx*(int)>& row, cplx* out) {
    for (int n = 1; n < Nt; ++n) {
        const cplx* dn = row(n - 1);
        const cplx* c0 = row(n);
        const cplx* up = row(n + 1);
        cplx* o = out + static_cast<std::size_t>(n - 1) * N;
        for (std::size_t m = 0; m < N; ++m) {
            std::size_t l = m == 0 ? N - 1 : m - 1, r = m + 1 == N ? 0 : m + 1;
            const Weights& w = weights[m];
            cplx acc = w[1] * c0[l] + w[4] * c0[m] + w[7] * c0[r];
            if (dn) acc += w[0] * dn[l] + w[3] * dn[m] + w[6] * dn[r];
            if (up) acc += w[2] * up[l] + w[5] * up[m] + w[8] * up[r];
            o[m] = acc;
        }
    }
}

}  // namespace

void StripDiscretization::apply(std::span<const cplx> full, std::span<cplx> interior) const {
    std::size_t N = grid().size();
    if (full.size() != static_cast<std::size_t>(levels_ + 1) * N || interior.size() != unknowns())
        throw InvalidArgument("strip apply: size mismatch");
    apply_rows(weights_, N, levels_, [&](int n) { return full.data() + static_cast<std::size_t>(n) * N; },
               interior.data());
}

void StripDiscretization::apply_interior(std::span<const cplx> x, std::span<cplx> y) const {
    std::size_t N = grid().size();
    if (x.size() != unknowns() || y.size() != unknowns()) throw InvalidArgument("strip apply: size mismatch");
    int Nt = levels_;
    apply_rows(weights_, N, Nt,
               [&](int n) -> const cplx* {
                   return (n == 0 || n == Nt) ? nullptr : x.data() + static_cast<std::size_t>(n - 1) * N;
               },
               y.data());
}

void StripDiscretization::precondition(std::span<const cplx> r, std::span<cplx> z) const {
    std::size_t N = grid().size(), M = static_cast<std::size_t>(levels_ - 1);
    int np = grid().points();
    std::vector<cplx> s(N * M);
    fft::transform(1, np, static_cast<int>(M), -1, r, s);
    const cplx* ib = thomas_inv_beta_.data();
    const cplx* ga = thomas_gamma_.data();
    const cplx* cm = thomas_cm_.data();
    for (std::size_t k = 0; k < N; ++k) s[k] *= ib[k];
    for (std::size_t n = 1; n < M; ++n) {
        cplx* cur = s.data() + n * N;
        const cplx* prev = cur - N;
        const cplx* b = ib + n * N;
        for (std::size_t k = 0; k < N; ++k) cur[k] = (cur[k] - cm[k] * prev[k]) * b[k];
    }
    for (std::size_t n = M - 1; n-- > 0;) {
        cplx* cur = s.data() + n * N;
        const cplx* next = cur + N;
        const cplx* gm = ga + n * N;
        for (std::size_t k = 0; k < N; ++k) cur[k] -= gm[k] * next[k];
    }
    fft::transform(1, np, static_cast<int>(M), +1, s, z);
    double inv = 1.0 / static_cast<double>(N);
    for (auto& v : z) v *= inv;
}

std::vector<cplx> StripDiscretization::solve_krylov(std::span<const cplx> rhs, int& iterations,
                                                    double& cond) const {
    std::size_t n = rhs.size();
    std::vector<cplx> x(n, 0.0), r(rhs.begin(), rhs.end()), w(n), z(n);
    double bnorm = norm2(rhs);
    if (bnorm == 0.0) return x;
    int m = opts_.restart;
    double target = opts_.tolerance * bnorm;
    double beta = bnorm;
    std::vector<std::vector<cplx>> V;
    while (iterations < opts_.max_iterations && beta > target) {
        if (V.empty()) V.emplace_back(n);
        for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / beta;
        Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m), R = H;
        std::vector<cplx> g(m + 1, 0.0), cs(m), sn(m);
        g[0] = beta;
        int j = 0;
        for (; j < m && iterations < opts_.max_iterations; ++j) {
            ++iterations;
            precondition(V[j], z);
            apply_interior(z, w);
            for (int i = 0; i <= j; ++i) {
                H(i, j) = dot(V[i], w);
                for (std::size_t q = 0; q < n; ++q) w[q] -= H(i, j) * V[i][q];
            }
            double hn = norm2(w);
            H(j + 1, j) = hn;
            if (static_cast<int>(V.size()) < j + 2) V.emplace_back(n);
            if (hn > 0)
                for (std::size_t q = 0; q < n; ++q) V[j + 1][q] = w[q] / hn;
            for (int i = 0; i <= j + 1; ++i) R(i, j) = H(i, j);
            for (int i = 0; i < j; ++i) {
                cplx a = R(i, j), b = R(i + 1, j);
                R(i, j) = cs[i] * a + sn[i] * b;
                R(i + 1, j) = -std::conj(sn[i]) * a + cs[i] * b;
            }
            cplx a = R(j, j), b = R(j + 1, j);
            double t = std::hypot(std::abs(a), std::abs(b));
            if (std::abs(b) == 0.0) {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else if (std::abs(a) == 0.0) {
                cs[j] = 0.0;
                sn[j] = std::conj(b) / std::abs(b);
            } else {
                cs[j] = std::abs(a) / t;
                sn[j] = (a / std::abs(a)) * std::conj(b) / t;
            }
            R(j, j) = cs[j] * a + sn[j] * b;
            R(j + 1, j) = 0.0;
            g[j + 1] = -std::conj(sn[j]) * g[j];
            g[j] = cs[j] * g[j];
            if (std::abs(g[j + 1]) <= target || hn == 0.0) {
                ++j;
                break;
            }
        }
        int k = j;
        if (k == 0) break;
        std::vector<cplx> y(k);
        for (int i = k - 1; i >= 0; --i) {
            cplx s = g[i];
            for (int l = i + 1; l < k; ++l) s -= R(i, l) * y[l];
            y[i] = s / R(i, i);
        }
        std::fill(w.begin(), w.end(), cplx(0.0));
        for (int i = 0; i < k; ++i)
            for (std::size_t q = 0; q < n; ++q) w[q] += y[i] * V[i][q];
        precondition(w, z);
        for (std::size_t q = 0; q < n; ++q) x[q] += z[q];

        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(H.topLeftCorner(k + 1, k));
        auto sv = svd.singularValues();
        if (sv(k - 1) > 0) cond = std::max(cond, sv(0) / sv(k - 1));
        else cond = std::numeric_limits<double>::infinity();

        apply_interior(x, w);
        for (std::size_t q = 0; q < n; ++q) r[q] = rhs[q] - w[q];
        beta = norm2(r);
    }
    return x;
}

std::vector<cplx> StripDiscretization::solve_direct(std::span<const cplx> rhs, double& cond) const {
    std::size_t N = grid().size(), M = static_cast<std::size_t>(levels_ - 1), n = M * N;
    std::call_once(direct_->once, [&] {
        std::vector<Eigen::Triplet<cplx>> trip;
        trip.reserve(9 * n);
        std::vector<double> colsum(n, 0.0);
        for (std::size_t lv = 0; lv < M; ++lv)
            for (std::size_t m = 0; m < N; ++m) {
                std::size_t row = lv * N + m;
                for (int i = -1; i <= 1; ++i)
                    for (int j = -1; j <= 1; ++j) {
                        long tl = static_cast<long>(lv) + j;
                        if (tl < 0 || tl >= static_cast<long>(M)) continue;
                        std::size_t xm = (m + N + i) % N;
                        std::size_t col = static_cast<std::size_t>(tl) * N + xm;
                        cplx v = weights_[m][(i + 1) * 3 + (j + 1)];
                        if (v == cplx(0.0)) continue;
                        trip.emplace_back(static_cast<int>(row), static_cast<int>(col), v);
                        colsum[col] += std::abs(v);
                    }
            }
        Eigen::SparseMatrix<cplx> A(static_cast<int>(n), static_cast<int>(n));
        A.setFromTriplets(trip.begin(), trip.end());
        A.makeCompressed();
        direct_->lu.compute(A);
        direct_->ok = direct_->lu.info() == Eigen::Success;
        if (!direct_->ok) {
            direct_->condition = std::numeric_limits<double>::infinity();
            return;
        }
        // ||A||_1 times a power-iteration estimate of ||A^{-1}||_2
        double a1 = *std::max_element(colsum.begin(), colsum.end());
        Rng rng(12345);
        Eigen::VectorXcd v(n);
        for (std::size_t q = 0; q < n; ++q) v[q] = cplx(rng.normal(), rng.normal());
        v.normalize();
        double est = 0;
        for (int it = 0; it < 3; ++it) {
            Eigen::VectorXcd u = direct_->lu.solve(v);
            est = u.norm();
            v = u / est;
        }
        direct_->condition = a1 * est;
    });
    cond = direct_->condition;
    if (!direct_->ok)
        throw SolverError("sparse LU factorization failed", std::numeric_limits<double>::infinity(),
                          cond);
    Eigen::Map<const Eigen::VectorXcd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    Eigen::VectorXcd x = direct_->lu.solve(b);
    return std::vector<cplx>(x.data(), x.data() + x.size());
}

StripSolution StripDiscretization::solve(const GridFunction& bottom, cplx top,
                                         std::span<const cplx> source) const {
    require_same_grid(bottom.grid(), grid(), "strip solve");
    std::size_t N = grid().size(), total = static_cast<std::size_t>(levels_ + 1) * N;
    if (!source.empty() && source.size() != total)
        throw InvalidArgument("source must hold (levels + 1) * N values");
    for (auto v : bottom.values())
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw InvalidArgument("boundary data is not finite");

    // work with u - top so that constants are reproduced exactly
    std::vector<cplx> full(total, 0.0);
    for (std::size_t m = 0; m < N; ++m) full[m] = bottom[m] - top;
    std::vector<cplx> rhs(unknowns()), tmp(unknowns());
    apply(full, tmp);
    for (std::size_t q = 0; q < rhs.size(); ++q)
        rhs[q] = (source.empty() ? cplx(0.0) : source[N + q]) - tmp[q];
    double scale = norm2(rhs);

    StripSolution sol{grid(), height_, dt_, levels_, {}, 0.0, 0, 1.0, to_string(opts_.backend)};
    auto run = [&](std::span<const cplx> b) {
        return opts_.backend == SolverBackend::direct
                   ? solve_direct(b, sol.condition_estimate)
                   : solve_krylov(b, sol.iterations, sol.condition_estimate);
    };
    std::vector<cplx> x = scale > 0 ? run(rhs) : std::vector<cplx>(unknowns(), 0.0);
    auto residual = [&] {
        apply_interior(x, tmp);
        for (std::size_t q = 0; q < tmp.size(); ++q) tmp[q] = rhs[q] - tmp[q];
        return scale > 0 ? norm2(tmp) / scale : 0.0;
    };
    double rel = residual();
    for (int pass = 0; pass < 3 && rel > opts_.residual_limit; ++pass) {
        auto dx = run(tmp);
        for (std::size_t q = 0; q < x.size(); ++q) x[q] += dx[q];
        rel = residual();
    }
    sol.residual = rel;
    if (!(rel <= opts_.residual_limit))
        throw SolverError("strip solve residual " + std::to_string(rel) + " above limit", rel,
                          sol.condition_estimate);

    std::copy(x.begin(), x.end(), full.begin() + N);
    for (auto& v : full) v += top;
    for (std::size_t m = 0; m < N; ++m) full[m] = bottom[m];
    sol.values = std::move(full);
    return sol;
}

void StripDiscretization::build_symbols() const {
    std::call_once(symbols_->once, [&] {
        const auto& g = grid();
        std::size_t N = g.size();
        double h = g.spacing();
        FrequencyLattice lat(g);
        auto a11 = field_.entry(0, 0), a12 = field_.entry(0, 1);
        auto a21 = field_.entry(1, 0), a22 = field_.entry(1, 1);
        std::vector<cplx> rho(N * N), tr(N * N), mu(N * N);
        for (std::size_t m = 0; m < N; ++m) {
            // face values as the stencil sees them, symmetrized so no derivative term is frozen in
            const auto& loc = local_[m];
            cplx f11 = 0.5 * (loc.a11_right + loc.a11_left), f12 = 0.5 * (loc.a12_right + loc.a12_left);
            LocalCoefficients c{f11, f11, f12, f12, a21[m], a22[m]};
            Weights w = probe(c, h, dt_);
            for (std::size_t k = 0; k < N; ++k) {
                double xi = lat.xi(k, 0), theta = xi * h;
                cplx r = 1.0;
                if (lat.wavenumber(k, 0) != 0) {
                    auto cc = mode_coefficients(w, theta);
                    r = decaying_root(cc[2], cc[1], cc[0]);
                }
                cplx p;
                if (opts_.trace == TraceRule::flux) {
                    auto u = [&](int i, int j) { return std::polar(1.0, theta * i) * std::pow(r, j); };
                    p = (flux_trace(c, u, h, dt_) + a21[m] * I * xi) / a22[m];
                } else {
                    p = -(-3.0 + 4.0 * r - r * r) / (2.0 * dt_);
                }
                rho[m * N + k] = r;
                tr[m * N + k] = p;
                mu[m * N + k] = lat.wavenumber(k, 0) == 0 ? cplx(0.0) : -I * std::log(r) / dt_;
            }
        }
        symbols_->rho = std::make_unique<SymbolTable>(g, SymbolKind::discrete, std::nullopt, std::move(rho));
        symbols_->trace = std::make_unique<SymbolTable>(g, SymbolKind::discrete, 1.0, std::move(tr));
        symbols_->mu = std::make_unique<SymbolTable>(g, SymbolKind::discrete, 1.0, std::move(mu));
    });
}

const SymbolTable& StripDiscretization::discrete_rho() const {
    build_symbols();
    return *symbols_->rho;
}
const SymbolTable& StripDiscretization::discrete_trace_symbol() const {
    build_symbols();
    return *symbols_->trace;
}
const SymbolTable& StripDiscretization::discrete_mu() const {
    build_symbols();
    return *symbols_->mu;
}

BoundaryTraces boundary_traces(const StripDiscretization& disc, const StripSolution& sol) {
    const auto& g = disc.grid();
    std::size_t N = g.size();
    double h = g.spacing(), dt = disc.dt();
    auto u0 = sol.level(0), u1 = sol.level(1), u2 = sol.level(2);
    GridFunction f = sol.trace(0);
    GridFunction fx = derivative(f, 0);
    auto a21 = disc.field().entry(1, 0), a22 = disc.field().entry(1, 1);
    std::vector<cplx> p(N), lam(N);
    for (std::size_t m = 0; m < N; ++m) {
        if (disc.options().trace == TraceRule::flux) {
            auto u = [&](int i, int j) {
                std::size_t x = (m + N + i) % N;
                return j == 0 ? u0[x] : u1[x];
            };
            lam[m] = flux_trace(disc.local(m), u, h, dt);
            p[m] = (lam[m] + a21[m] * fx[m]) / a22[m];
        } else {
            p[m] = -(-3.0 * u0[m] + 4.0 * u1[m] - u2[m]) / (2.0 * dt);
            lam[m] = a22[m] * p[m] - a21[m] * fx[m];
        }
    }
    return {GridFunction(g, std::move(p)), GridFunction(g, std::move(lam))};
}

const StripSolution& StripDiscretization::lift() const {
    std::call_once(lift_->once, [&] {
        lift_->solution = std::make_unique<StripSolution>(solve(GridFunction::zeros(grid()), 1.0));
    });
    return *lift_->solution;
}

cplx StripDiscretization::top_flux(const StripSolution& u) const {
    std::size_t N = grid().size();
    double h = grid().spacing();
    auto lo = u.level(levels_ - 1), hi = u.level(levels_);
    cplx acc = 0.0;
    for (std::size_t m = 0; m < N; ++m) {
        std::size_t r = (m + 1) % N, l = (m + N - 1) % N;
        const auto& c = local_[m];
        acc += c.a21 * (lo[r] + hi[r] - lo[l] - hi[l]) / (4.0 * h) + c.a22 * (hi[m] - lo[m]) / dt_;
    }
    return acc * h;
}

void StripDiscretization::release_top(StripSolution& u) const {
    const auto& w = lift();
    cplx c = -top_flux(u) / top_flux(w);
    if (c == cplx(0.0)) return;
    for (std::size_t q = 0; q < u.values.size(); ++q) u.values[q] += c * w.values[q];
}

StripSolution solve_dirichlet(const StripDiscretization& disc, const GridFunction& f) {
    auto u = disc.solve(f, mean(f));
    if (disc.options().top == TopCondition::zero_flux) disc.release_top(u);
    return u;
}

StripSolution solve_inhomogeneous(const StripDiscretization& disc, std::span<const cplx> source) {
    std::size_t N = disc.grid().size();
    int Nt = disc.levels();
    if (source.size() != static_cast<std::size_t>(Nt + 1) * N)
        throw InvalidArgument("source must hold (levels + 1) * N values");
    for (int n = 0; n <= Nt; ++n) {
        if (n * disc.dt() <= 0.5 * disc.height() + 1e-12) continue;
        for (std::size_t m = 0; m < N; ++m)
            if (source[static_cast<std::size_t>(n) * N + m] != cplx(0.0))
                throw InvalidArgument("source must vanish for t > T/2");
    }
    auto u = disc.solve(GridFunction::zeros(disc.grid()), 0.0, source);
    if (disc.options().top == TopCondition::zero_flux) disc.release_top(u);
    return u;
}

GridFunction poisson_apply(const StripDiscretization& disc, const GridFunction& f) {
    return boundary_traces(disc, solve_dirichlet(disc, f)).p;
}

GridFunction dn_apply(const StripDiscretization& disc, const GridFunction& f) {
    return boundary_traces(disc, solve_dirichlet(disc, f)).lambda;
}

GridFunction q_from_lambda(const CoefficientField& a, const GridFunction& f,
                           const GridFunction& lambda_f) {
    require_same_grid(a.grid(), f.grid(), "q_from_lambda");
    auto b = a.b();
    auto div = r1_divergence(a);
    std::vector<cplx> out(f.size());
    std::vector<GridFunction> grads;
    for (int j = 0; j < a.dimension(); ++j) grads.push_back(derivative(f, j));
    for (std::size_t m = 0; m < f.size(); ++m) {
        cplx s = lambda_f[m] - div[m] * f[m];
        for (int j = 0; j < a.dimension(); ++j) s -= a.r1(j)[m] * grads[j][m];
        out[m] = s / b[m];
    }
    return GridFunction(f.grid(), std::move(out));
}

GridFunction q_apply(const StripDiscretization& disc, const GridFunction& f) {
    return q_from_lambda(disc.field(), f, dn_apply(disc, f));
}

cplx dn_weak(const StripDiscretization& disc, const StripSolution& ef, const StripSolution& eg) {
    const auto& g = disc.grid();
    std::size_t N = g.size();
    int Nt = disc.levels();
    double h = g.spacing(), dt = disc.dt();
    const auto& a = disc.field();
    auto a11 = a.entry(0, 0), a12 = a.entry(0, 1), a21 = a.entry(1, 0), a22 = a.entry(1, 1);
    auto dtv = [&](const StripSolution& s, int n, std::size_t m) {
        auto at = [&](int l) { return s.values[static_cast<std::size_t>(l) * N + m]; };
        if (n == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * dt);
        if (n == Nt) return (3.0 * at(Nt) - 4.0 * at(Nt - 1) + at(Nt - 2)) / (2.0 * dt);
        return (at(n + 1) - at(n - 1)) / (2.0 * dt);
    };
    cplx total = 0;
    for (int n = 0; n <= Nt; ++n) {
        auto ux = derivative(ef.trace(n), 0), vx = derivative(eg.trace(n), 0);
        cplx lv = 0;
        for (std::size_t m = 0; m < N; ++m) {
            cplx ut = dtv(ef, n, m), vt = dtv(eg, n, m);
            lv += (a11[m] * ux[m] + a12[m] * ut) * std::conj(vx[m]) +
                  (a21[m] * ux[m] + a22[m] * ut) * std::conj(vt);
        }
        double wgt = (n == 0 || n == Nt) ? 0.5 : 1.0;
        total += wgt * lv * h;
    }
    return total * dt;
}

cplx dn_weak(const StripDiscretization& disc, const GridFunction& f, const GridFunction& g) {
    return dn_weak(disc, solve_dirichlet(disc, f), solve_dirichlet(disc, g));
}

GridFunction aprime_apply(const CoefficientField& a, const GridFunction& f) {
    require_same_grid(a.grid(), f.grid(), "aprime_apply");
    if (a.dimension() != 1) throw Unsupported("aprime_apply is implemented for d = 1 only");
    std::size_t N = f.size();
    double h = a.grid().spacing();
    auto face = a.staggered(0, 0, 0);
    std::vector<cplx> flux(N), out(N);
    for (std::size_t m = 0; m < N; ++m) flux[m] = face[m] * (f[(m + 1) % N] - f[m]) / h;
    for (std::size_t m = 0; m < N; ++m) out[m] = -(flux[m] - flux[(m + N - 1) % N]) / h;
    return GridFunction(f.grid(), std::move(out));
}

ContextPtr principal_context(const StripDiscretization& disc, PrincipalChoice choice) {
    if (choice == PrincipalChoice::continuum) return PrincipalContext::make(disc.field());
    return PrincipalContext::make(disc.field(), disc.discrete_mu());
}

StripSolution u1_field(const StripDiscretization& disc, const PrincipalContext& principal,
                       const GridFunction& h, const StripSolution* eh) {
    StripSolution out = eh ? *eh : solve_dirichlet(disc, h);
    std::size_t N = disc.grid().size();
    for (int n = 0; n <= disc.levels(); ++n) {
        double t = n * disc.dt();
        double chi = SmoothCutoff::value(t);
        if (chi == 0.0) break;
        auto u0 = u0_apply(principal, t, h);
        for (std::size_t m = 0; m < N; ++m)
            out.values[static_cast<std::size_t>(n) * N + m] -= chi * u0[m];
    }
    // both parts equal h at t = 0
    std::fill(out.values.begin(), out.values.begin() + N, cplx(0.0));
    return out;
}

std::vector<GridFunction> u1_compute(const StripDiscretization& disc,
                                     const PrincipalContext& principal, const GridFunction& h,
                                     std::span<const int> levels) {
    auto field = u1_field(disc, principal, h);
    std::vector<GridFunction> out;
    for (int n : levels) {
        if (n < 0 || n > disc.levels()) throw InvalidArgument("u1_compute: level out of range");
        out.push_back(field.trace(n));
    }
    return out;
}

RemainderResult s1_apply(const StripDiscretization& disc, const GridFunction& h,
                         PrincipalChoice choice) {
    auto eh = solve_dirichlet(disc, h);
    auto p = boundary_traces(disc, eh).p;
    GridFunction principal_part =
        choice == PrincipalChoice::discrete
            ? quantize(disc.discrete_trace_symbol(), h)
            : (-I) * quantize(mu_of(disc.field()), h);
    GridFunction s = principal_part - p;

    auto ctx = principal_context(disc, choice);
    auto u1 = u1_field(disc, *ctx, h, &eh);
    std::size_t N = h.size();
    std::vector<cplx> cross(N);
    for (std::size_t m = 0; m < N; ++m)
        cross[m] = (-3.0 * u1.values[m] + 4.0 * u1.values[N + m] - u1.values[2 * N + m]) / (2.0 * disc.dt());
    GridFunction cc(h.grid(), std::move(cross));
    double pn = l2_norm(p);
    double gap = pn > 0 ? l2_norm(s - cc) / pn : l2_norm(s - cc);
    return {s, p, cc, gap};
}

OperatorMatrix assemble_operator_matrix(const StripDiscretization& disc, BoundaryOperator which) {
    const auto& g = disc.grid();
    std::size_t N = g.size();
    if (N > 512) throw InvalidArgument("assemble_operator_matrix requires N^d <= 512");
    OperatorMatrix out{Eigen::MatrixXcd(N, N), to_string(which)};
    for (std::size_t j = 0; j < N; ++j) {
        auto e = GridFunction::zeros(g);
        e.mutable_values()[j] = 1.0;
        auto tr = boundary_traces(disc, solve_dirichlet(disc, e));
        GridFunction col = which == BoundaryOperator::p      ? tr.p
                           : which == BoundaryOperator::lambda ? tr.lambda
                                                               : q_from_lambda(disc.field(), e, tr.lambda);
        for (std::size_t i = 0; i < N; ++i) out.matrix(i, j) = col[i];
    }
    return out;
}

}  // namespace dncalc
