#include "dncalc/psdo.hpp"

#include "dncalc/cutoff.hpp"
#include "dncalc/fft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dncalc {

std::shared_ptr<const PrincipalContext> PrincipalContext::make(const CoefficientField& field,
                                                               std::optional<SymbolTable> mu) {
    SymbolTable table = mu ? *mu : mu_of(field);
    require_same_grid(table.grid(), field.grid(), "PrincipalContext");
    auto grad = symbol_x_gradient(table);
    auto ctx = std::make_shared<PrincipalContext>(PrincipalContext{
        field, table, std::move(grad), aprime_divergence(field), r1_divergence(field), 0.0});
    FrequencyLattice lat(field.grid());
    double lower = std::numeric_limits<double>::infinity();
    std::size_t n = field.grid().size();
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t k = 1; k < n; ++k) lower = std::min(lower, table(p, k).imag() / lat.norm(k));
    ctx->lower_constant = lower;
    return ctx;
}

namespace {

/// Nonzero spectral support of a batch.
std::vector<std::size_t> support(std::span<const Spectrum> ss) {
    std::vector<std::size_t> idx;
    std::size_t n = ss.front().coefficients.size();
    for (std::size_t k = 0; k < n; ++k) {
        bool nz = false;
        for (const auto& s : ss) nz = nz || s.coefficients[k] != cplx(0.0);
        if (nz) idx.push_back(k);
    }
    return idx;
}

/// out_b(x_m) = L^{-d/2} sum_k factor(m, k) s_b(k) e^{i xi_k x_m}
template <class F>
std::vector<GridFunction> apply_weighted(const TorusGrid& g, std::span<const Spectrum> ss,
                                         F&& factor) {
    std::size_t n = g.size(), nb = ss.size();
    int np = g.points();
    std::vector<cplx> w(np);
    for (int j = 0; j < np; ++j) w[j] = std::polar(1.0, 2.0 * pi * j / np);
    auto supp = support(ss);
    std::vector<std::vector<cplx>> out(nb, std::vector<cplx>(n, 0.0));
    double scale = 1.0 / std::pow(g.length(), 0.5 * g.dimension());
    std::vector<std::array<int, 2>> kidx(supp.size());
    for (std::size_t q = 0; q < supp.size(); ++q) kidx[q] = g.multi_index(supp[q]);
    std::vector<cplx> acc(nb);
    for (std::size_t m = 0; m < n; ++m) {
        auto mi = g.multi_index(m);
        std::fill(acc.begin(), acc.end(), cplx(0.0));
        for (std::size_t q = 0; q < supp.size(); ++q) {
            std::size_t k = supp[q];
            long ph = (static_cast<long>(mi[0]) * kidx[q][0] + static_cast<long>(mi[1]) * kidx[q][1]) % np;
            cplx f = factor(m, k) * w[ph];
            for (std::size_t b = 0; b < nb; ++b) acc[b] += f * ss[b].coefficients[k];
        }
        for (std::size_t b = 0; b < nb; ++b) out[b][m] = acc[b] * scale;
    }
    std::vector<GridFunction> res;
    res.reserve(nb);
    for (auto& o : out) res.emplace_back(g, std::move(o));
    return res;
}

std::vector<Spectrum> spectra(std::span<const GridFunction> hs) {
    std::vector<Spectrum> ss;
    ss.reserve(hs.size());
    for (const auto& h : hs) ss.push_back(to_spectral(h));
    return ss;
}

}  // namespace

GridFunction quantize(const SymbolTable& sigma, const GridFunction& f) {
    require_same_grid(sigma.grid(), f.grid(), "quantize");
    Spectrum s = to_spectral(f);
    return apply_weighted(f.grid(), std::span<const Spectrum>(&s, 1),
                          [&](std::size_t m, std::size_t k) { return sigma(m, k); })
        .front();
}

GridFunction u0_apply(const PrincipalContext& ctx, double t, const GridFunction& h) {
    if (t < 0) throw InvalidArgument("u0_apply needs t >= 0");
    require_same_grid(ctx.mu.grid(), h.grid(), "u0_apply");
    if (t == 0.0) return h;
    Spectrum s = to_spectral(h);
    return apply_weighted(h.grid(), std::span<const Spectrum>(&s, 1),
                          [&](std::size_t m, std::size_t k) { return std::exp(I * t * ctx.mu(m, k)); })
        .front();
}

namespace {
WeightFamily bind(const WeightFamily& p, const PrincipalContext& ctx);
}  // namespace

std::vector<std::vector<GridFunction>> gp_apply_batch(const WeightFamily& p0,
                                                      const PrincipalContext& ctx, double t,
                                                      std::span<const GridFunction> hs) {
    if (hs.empty()) return {};
    auto p = bind(p0, ctx);
    for (const auto& h : hs) require_same_grid(ctx.mu.grid(), h.grid(), "gp_apply");
    auto ss = spectra(hs);
    const auto& g = hs.front().grid();
    std::vector<std::vector<GridFunction>> res(hs.size());
    for (const auto& comp : p.components) {
        auto out = apply_weighted(g, ss, [&](std::size_t m, std::size_t k) {
            return comp(m, k, t) * std::exp(I * t * ctx.mu(m, k));
        });
        for (std::size_t b = 0; b < hs.size(); ++b) res[b].push_back(std::move(out[b]));
    }
    return res;
}

GridFunction gp_apply(const WeightFamily& p0, const PrincipalContext& ctx, double t,
                      const GridFunction& h, std::size_t component) {
    auto p = bind(p0, ctx);
    if (component >= p.components.size()) throw InvalidArgument("weight component out of range");
    WeightFamily one{p.tag, {p.components[component]}, p.hypothesis, p.exponents};
    return gp_apply_batch(one, ctx, t, std::span<const GridFunction>(&h, 1)).front().front();
}

namespace weights {

WeightFamily unit() {
    return {"unit", {[](std::size_t, std::size_t, double) { return cplx(1.0); }},
            WeightHypothesis::none, {}};
}

WeightFamily scaled_frequency(double l) {
    // no callable yet: the lattice norm is bound to the context grid when applied
    return {"t_xi^" + std::to_string(l), {}, WeightHypothesis::square_function, {l}};
}

namespace {

struct Geometry {
    TorusGrid grid;
    FrequencyLattice lat;
    explicit Geometry(const TorusGrid& g) : grid(g), lat(g) {}
};

// (A' v)_i at node m
cplx aprime_row_dot(const CoefficientField& a, int i, std::size_t m,
                    const std::vector<cplx>& v) {
    cplx s = 0.0;
    for (int j = 0; j < a.dimension(); ++j) s += a.entry(i, j)[m] * v[j];
    return s;
}

}  // namespace

WeightFamily time_power(const ContextPtr& ctx, int k) {
    return {"t^" + std::to_string(k) + " d_t^" + std::to_string(k),
            {[ctx, k](std::size_t m, std::size_t f, double t) {
                return std::pow(I * t * ctx->mu(m, f), k);
            }},
            WeightHypothesis::square_function,
            {static_cast<double>(k)}};
}

WeightFamily pi_prime(const ContextPtr& ctx) {
    WeightFamily w{"pi_prime", {}, WeightHypothesis::square_function, {1.0}};
    int d = ctx->field.dimension();
    for (int i = 0; i < d; ++i)
        w.components.push_back([ctx, i, d](std::size_t m, std::size_t f, double t) {
            std::vector<cplx> g(d);
            for (int j = 0; j < d; ++j) g[j] = ctx->grad_mu[j](m, f);
            return I * t * aprime_row_dot(ctx->field, i, m, g);
        });
    return w;
}

WeightFamily zeta(const ContextPtr& ctx) {
    auto geo = std::make_shared<Geometry>(ctx->field.grid());
    WeightFamily w{"zeta", {}, WeightHypothesis::square_function, {0.5, 1.5}};
    w.components.push_back([ctx, geo](std::size_t m, std::size_t f, double t) -> cplx {
        double r = geo->lat.norm(f);
        if (r == 0.0) return 0.0;
        const auto& a = ctx->field;
        int d = a.dimension();
        auto xi = geo->lat.xi(f);
        cplx mu = ctx->mu(m, f);
        cplx lin = 0.0, quad = 0.0, ax = 0.0;
        for (int j = 0; j < d; ++j) {
            cplx axi = 0.0;
            for (int k = 0; k < d; ++k) axi += a.entry(j, k)[m] * xi[k];
            cplx gj = ctx->grad_mu[j](m, f);
            lin += (a.r1(j)[m] + a.r2(j)[m]) * gj;
            quad += axi * gj;
            ax += ctx->aprime_div[j][m] * xi[j];
        }
        cplx z = I * (lin + I * t * quad) + I * ax;
        cplx dz = -quad;
        double sr = std::sqrt(r);
        return std::sqrt(t) * SmoothCutoff::value(t) * (z * sr / (I * mu) + dz * sr / (mu * mu));
    });
    return w;
}

WeightFamily q_weight(const ContextPtr& ctx, double eps) {
    auto geo = std::make_shared<Geometry>(ctx->field.grid());
    WeightFamily w{"q_weight", {}, WeightHypothesis::none, {}};
    int d = ctx->field.dimension();
    for (int i = 0; i < d; ++i)
        w.components.push_back([ctx, geo, eps, i, d](std::size_t m, std::size_t f, double t) {
            double r = geo->lat.norm(f);
            std::vector<cplx> g(d);
            for (int j = 0; j < d; ++j) g[j] = ctx->grad_mu[j](m, f);
            return I * std::pow(1.0 + r * r, -0.5 * (1.0 + eps)) * (1.0 + I * t * ctx->mu(m, f)) *
                   aprime_row_dot(ctx->field, i, m, g);
        });
    return w;
}

}  // namespace weights

namespace {

/// scaled_frequency carries no callable; bind it to the context grid here.
WeightFamily bind(const WeightFamily& p, const PrincipalContext& ctx) {
    if (!p.components.empty()) return p;
    if (p.tag.rfind("t_xi^", 0) != 0) throw InvalidArgument("weight has no components");
    auto geo = std::make_shared<FrequencyLattice>(ctx.field.grid());
    double l = p.exponents.at(0);
    WeightFamily b = p;
    b.components.push_back([geo, l](std::size_t, std::size_t f, double t) {
        double r = geo->norm(f);
        return cplx(r == 0.0 ? 0.0 : std::pow(t * r, l));
    });
    return b;
}

}  // namespace


KernelSlice kernel_slice(const WeightFamily& p0, const PrincipalContext& ctx, std::size_t node,
                         double t, std::size_t component) {
    if (!(t > 0)) throw InvalidArgument("kernel_slice needs t > 0");
    auto p = bind(p0, ctx);
    const auto& g = ctx.field.grid();
    if (node >= g.size()) throw InvalidArgument("kernel node out of range");
    const auto& comp = p.components.at(component);
    std::size_t n = g.size();
    std::vector<cplx> c(n), y(n);
    for (std::size_t k = 0; k < n; ++k) c[k] = comp(node, k, t) * std::exp(I * t * ctx.mu(node, k));
    fft::backward(g.dimension(), g.points(), c, y);
    double scale = 1.0 / std::pow(g.length(), g.dimension());
    KernelSlice ks{g, node, t, {}, {}};
    ks.offsets.resize(n);
    ks.values.resize(n);
    int np = g.points();
    double h = g.spacing();
    for (std::size_t q = 0; q < n; ++q) {
        auto mi = g.multi_index(q);  // centered index j - N/2 maps to wrapped j - N/2
        std::array<int, 2> off{mi[0] - np / 2, g.dimension() == 2 ? mi[1] - np / 2 : 0};
        std::size_t src = g.flat_index(off);
        ks.offsets[q] = {off[0] * h, off[1] * h};
        ks.values[q] = y[src] * scale;
    }
    return ks;
}

std::vector<GridFunction> commutator_u0(const PrincipalContext& ctx, double t,
                                        const GridFunction& h) {
    std::vector<GridFunction> out;
    auto u = u0_apply(ctx, t, h);
    for (int ax = 0; ax < h.grid().dimension(); ++ax)
        out.push_back(derivative(u, ax) - u0_apply(ctx, t, derivative(h, ax)));
    return out;
}

TimeQuadrature TimeQuadrature::standard(const TorusGrid& g) {
    return {1e-3 * g.length() / g.points(), 10.0 * g.length(), std::pow(2.0, 0.125)};
}

std::vector<double> TimeQuadrature::nodes() const {
    if (!(t_min > 0 && t_max > t_min && ratio > 1)) throw InvalidArgument("bad time quadrature");
    std::vector<double> ts;
    for (double t = t_min; t <= t_max * (1 + 1e-12); t *= ratio) ts.push_back(t);
    return ts;
}

namespace {

void require_zero_mean_batch(std::span<const GridFunction> hs, const char* where) {
    for (const auto& h : hs) {
        double m = std::abs(mean(h));
        double n = l2_norm(h) / std::sqrt(h.grid().length());
        if (m > 1e-10 * std::max(n, 1e-300) && m > 1e-300)
            throw ZeroModeError(std::string(where) + ": input must have zero mean", m);
    }
}

}  // namespace

std::vector<SquareFunctionResult> square_function(const WeightFamily& p0,
                                                  const PrincipalContext& ctx,
                                                  std::span<const GridFunction> hs,
                                                  const TimeQuadrature& quad) {
    if (p0.hypothesis != WeightHypothesis::square_function || p0.exponents.empty())
        throw InvalidArgument("weight '" + p0.tag +
                              "' is not tagged for the square-function hypothesis "
                              "(needs declared exponents l_k > 0)");
    for (double l : p0.exponents)
        if (!(l > 0)) throw InvalidArgument("weight '" + p0.tag + "' has a nonpositive exponent");
    require_zero_mean_batch(hs, "square_function");
    auto p = bind(p0, ctx);
    auto ts = quad.nodes();
    double lw = std::log(quad.ratio);
    std::vector<SquareFunctionResult> res(hs.size());
    std::vector<double> first(hs.size(), 0.0);
    for (std::size_t j = 0; j < ts.size(); ++j) {
        double w = (j == 0 || j + 1 == ts.size()) ? 0.5 * lw : lw;
        auto g = gp_apply_batch(p, ctx, ts[j], hs);
        for (std::size_t b = 0; b < hs.size(); ++b) {
            double v = 0.0;
            for (auto& comp : g[b]) v += std::pow(l2_norm(comp), 2);
            res[b].integral += w * v;
            if (j == 0) first[b] = v;
        }
    }
    double lmin = *std::min_element(p.exponents.begin(), p.exponents.end());
    double xi_min = 2.0 * pi / ctx.field.grid().length();
    for (std::size_t b = 0; b < hs.size(); ++b) {
        double h2 = std::pow(l2_norm(hs[b]), 2);
        res[b].ratio = res[b].integral / h2;
        res[b].lower_tail = first[b] / (2.0 * lmin) / h2;
        res[b].upper_tail = std::exp(-2.0 * ctx.lower_constant * quad.t_max * xi_min);
        res[b].samples = ts.size();
    }
    return res;
}

SquareFunctionResult square_function(const WeightFamily& p, const PrincipalContext& ctx,
                                     const GridFunction& h, const TimeQuadrature& quad) {
    return square_function(p, ctx, std::span<const GridFunction>(&h, 1), quad).front();
}

std::vector<double> sup_ratio(const WeightFamily& p0, const PrincipalContext& ctx,
                              std::span<const GridFunction> hs, std::span<const double> times) {
    auto p = bind(p0, ctx);
    std::vector<double> best(hs.size(), 0.0);
    for (double t : times) {
        auto g = gp_apply_batch(p, ctx, t, hs);
        for (std::size_t b = 0; b < hs.size(); ++b) {
            double v = 0.0;
            for (auto& comp : g[b]) v += std::pow(l2_norm(comp), 2);
            best[b] = std::max(best[b], std::sqrt(v) / l2_norm(hs[b]));
        }
    }
    return best;
}

std::vector<double> u0_half_integral(const PrincipalContext& ctx, std::span<const GridFunction> hs,
                                     const TimeQuadrature& quad) {
    auto ts = quad.nodes();
    double lw = std::log(quad.ratio);
    std::vector<double> acc(hs.size(), 0.0);
    auto one = weights::unit();
    for (std::size_t j = 0; j < ts.size(); ++j) {
        double w = ((j == 0 || j + 1 == ts.size()) ? 0.5 * lw : lw) * ts[j];  // dt = t dlog t
        auto g = gp_apply_batch(one, ctx, ts[j], hs);
        for (std::size_t b = 0; b < hs.size(); ++b) {
            double n = sobolev_norm(g[b][0], 0.5, SobolevKind::homogeneous);
            acc[b] += w * std::exp(-2.0 * ts[j]) * n * n;
        }
    }
    for (std::size_t b = 0; b < hs.size(); ++b) acc[b] /= std::pow(l2_norm(hs[b]), 2);
    return acc;
}

}  // namespace dncalc
