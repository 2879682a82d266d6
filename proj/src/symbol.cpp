#include "dncalc/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dncalc {

std::string to_string(SymbolKind k) {
    switch (k) {
        case SymbolKind::mu: return "mu";
        case SymbolKind::lambda: return "lambda";
        case SymbolKind::q: return "q";
        case SymbolKind::derived: return "derived";
        case SymbolKind::discrete: return "discrete";
    }
    return "unknown";
}

SymbolTable::SymbolTable(TorusGrid grid, SymbolKind kind, std::optional<double> degree,
                         std::vector<cplx> values)
    : grid_(grid), kind_(kind), degree_(degree), values_(std::move(values)) {
    if (values_.size() != grid_.size() * grid_.size())
        throw InvalidArgument("symbol table size mismatch");
}

namespace {

struct Quadratic {
    cplx b, lin, quad;  // b mu^2 + lin mu + quad
};

Quadratic quadratic(const Eigen::MatrixXcd& a, std::span<const double> xi) {
    int d = static_cast<int>(a.rows()) - 1;
    Quadratic q{a(d, d), 0.0, 0.0};
    for (int i = 0; i < d; ++i) {
        q.lin += (a(i, d) + a(d, i)) * xi[i];
        for (int j = 0; j < d; ++j) q.quad += a(i, j) * xi[i] * xi[j];
    }
    return q;
}

}  // namespace

cplx principal_root(const Eigen::MatrixXcd& a, std::span<const double> xi) {
    auto q = quadratic(a, xi);
    cplx vxi = q.lin / q.b;
    cplx inside = q.quad / q.b - 0.25 * vxi * vxi;
    return -0.5 * vxi + I * std::sqrt(inside);
}

double root_residual(const Eigen::MatrixXcd& a, std::span<const double> xi, cplx mu) {
    auto q = quadratic(a, xi);
    double scale = std::abs(q.b) * std::norm(mu) + std::abs(q.lin) * std::abs(mu) + std::abs(q.quad);
    if (scale == 0.0) return 0.0;
    return std::abs(q.b * mu * mu + q.lin * mu + q.quad) / scale;
}

namespace {

template <class F>
SymbolTable build(const CoefficientField& a, SymbolKind kind, F&& post) {
    const auto& g = a.grid();
    FrequencyLattice lat(g);
    std::size_t n = g.size();
    int d = a.dimension();
    std::vector<cplx> values(n * n);
    for (std::size_t p = 0; p < n; ++p) {
        Eigen::MatrixXcd m = a.at(p);
        for (std::size_t k = 0; k < n; ++k) {
            auto xi = lat.xi(k);
            std::span<const double> x(xi.data(), d);
            cplx mu = principal_root(m, x);
            if (k != 0) {
                double res = root_residual(m, x, mu);
                if (!(res < 1e-10)) {
                    std::ostringstream os;
                    os << "principal root residual " << res << " at node " << p;
                    throw SymbolError(os.str(), res);
                }
                if (!(mu.imag() > 0.0)) throw SymbolError("principal root has Im <= 0", res);
            }
            values[p * n + k] = post(m, x, mu);
        }
    }
    return SymbolTable(g, kind, 1.0, std::move(values));
}

}  // namespace

SymbolTable mu_of(const CoefficientField& a) {
    return build(a, SymbolKind::mu,
                 [](const Eigen::MatrixXcd&, std::span<const double>, cplx mu) { return mu; });
}

SymbolTable lambda_of(const CoefficientField& a) {
    return build(a, SymbolKind::lambda,
                 [](const Eigen::MatrixXcd& m, std::span<const double> xi, cplx mu) {
                     int d = static_cast<int>(m.rows()) - 1;
                     cplx v = m(d, d) * mu;
                     for (int j = 0; j < d; ++j) v += m(d, j) * xi[j];
                     return v;
                 });
}

SymbolTable q_of(const CoefficientField& a) {
    return build(a, SymbolKind::q,
                 [](const Eigen::MatrixXcd& m, std::span<const double> xi, cplx mu) {
                     int d = static_cast<int>(m.rows()) - 1;
                     cplx v = mu;
                     for (int j = 0; j < d; ++j) v += (m(j, d) + m(d, j)) * xi[j] / m(d, d);
                     return v;
                 });
}

EstimateReport check_symbol_bounds(const SymbolTable& sigma, const CoefficientField& a) {
    require_same_grid(sigma.grid(), a.grid(), "check_symbol_bounds");
    const auto& g = a.grid();
    FrequencyLattice lat(g);
    int d = a.dimension();
    double nu1 = a.ellipticity() ? a.ellipticity()->nu1 : validate(a).nu1;

    double upper = 0.0, lower = std::numeric_limits<double>::infinity();
    double margin = std::numeric_limits<double>::infinity();
    std::size_t violations = 0;
    for (std::size_t p = 0; p < g.size(); ++p) {
        Eigen::MatrixXcd m = a.at(p);
        cplx b = m(d, d);
        for (std::size_t k = 1; k < g.size(); ++k) {
            auto xi = lat.xi(k);
            double r = lat.norm(k);
            cplx s = sigma(p, k);
            upper = std::max(upper, std::abs(s) / r);
            lower = std::min(lower, s.imag() / r);
            cplx axx = 0.0, vxi = 0.0;
            for (int i = 0; i < d; ++i) {
                vxi += (m(i, d) + m(d, i)) * xi[i] / b;
                for (int j = 0; j < d; ++j) axx += m(i, j) * xi[i] * xi[j];
            }
            double lhs = (axx - 0.25 * b * vxi * vxi).real();
            double rhs = nu1 * (r * r + 0.25 * std::norm(vxi));
            margin = std::min(margin, (lhs - rhs) / rhs);
            if (lhs < rhs * (1.0 - 1e-12)) ++violations;
        }
    }
    EstimateReport rep;
    rep.name = "symbol_bounds_" + to_string(sigma.kind());
    rep.statement = "C' |xi| <= Im sigma, |sigma| <= C |xi|, quadratic-form lower bound";
    rep.family = a.description();
    rep.grid = {{"dimension", d}, {"length", g.length()}, {"points", g.points()}};
    rep.set("upper_constant", upper);
    rep.set("lower_constant", lower);
    rep.set("nu1", nu1);
    rep.set("inequality_margin", margin);
    rep.set("inequality_violations", static_cast<double>(violations));
    rep.require("lower_constant", Comparison::greater, 0.0);
    rep.require("upper_constant", Comparison::less, std::numeric_limits<double>::infinity());
    rep.require("inequality_violations", Comparison::less_equal, 0.0);
    return rep;
}

std::vector<SymbolTable> symbol_x_gradient(const SymbolTable& sigma) {
    const auto& g = sigma.grid();
    std::size_t n = g.size();
    std::vector<SymbolTable> out;
    for (int ax = 0; ax < g.dimension(); ++ax) {
        std::vector<cplx> vals(n * n);
        std::vector<cplx> col(n);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t p = 0; p < n; ++p) col[p] = sigma(p, k);
            auto dcol = derivative(GridFunction(g, col), ax);
            for (std::size_t p = 0; p < n; ++p) vals[p * n + k] = dcol[p];
        }
        out.emplace_back(g, SymbolKind::derived, sigma.degree(), std::move(vals));
    }
    return out;
}

namespace {

SymbolTable xi_diff_axis(const SymbolTable& s, int axis, int order) {
    const auto& g = s.grid();
    FrequencyLattice lat(g);
    std::size_t n = g.size();
    int np = g.points();
    double dxi = 2.0 * pi / g.length();
    std::vector<cplx> vals(n * n);
    for (std::size_t k = 0; k < n; ++k) {
        auto kv = lat.wavenumbers(k);
        int kk = kv[axis];
        auto at = [&](int shift) {
            auto k2 = kv;
            k2[axis] = kk + shift;
            return lat.index_of(k2);
        };
        // stencil offsets and weights along the axis
        std::vector<std::pair<int, double>> st;
        if (order == 1) {
            if (kk == -np / 2)
                st = {{0, -1.5}, {1, 2.0}, {2, -0.5}};
            else if (kk == np / 2 - 1)
                st = {{0, 1.5}, {-1, -2.0}, {-2, 0.5}};
            else
                st = {{1, 0.5}, {-1, -0.5}};
        } else {
            if (kk == -np / 2)
                st = {{0, 2.0}, {1, -5.0}, {2, 4.0}, {3, -1.0}};
            else if (kk == np / 2 - 1)
                st = {{0, 2.0}, {-1, -5.0}, {-2, 4.0}, {-3, -1.0}};
            else
                st = {{1, 1.0}, {0, -2.0}, {-1, 1.0}};
        }
        std::vector<std::pair<std::size_t, double>> idx;
        for (auto [off, w] : st) idx.push_back({at(off), w});
        double scale = order == 1 ? 1.0 / dxi : 1.0 / (dxi * dxi);
        for (std::size_t p = 0; p < n; ++p) {
            cplx acc = 0.0;
            for (auto [j, w] : idx) acc += w * s(p, j);
            vals[p * n + k] = acc * scale;
        }
    }
    std::optional<double> deg;
    if (s.degree()) deg = *s.degree() - order;
    return SymbolTable(g, SymbolKind::derived, deg, std::move(vals));
}

}  // namespace

SymbolTable symbol_xi_derivative(const SymbolTable& sigma, std::array<int, 2> alpha) {
    int d = sigma.grid().dimension();
    if (alpha[0] < 0 || alpha[1] < 0 || (d == 1 && alpha[1] != 0))
        throw InvalidArgument("bad multi-index");
    if (alpha[0] + alpha[1] > d + 1) throw InvalidArgument("xi-derivative order exceeds d + 1");
    SymbolTable out = sigma;
    for (int ax = 0; ax < d; ++ax) {
        int left = alpha[ax];
        while (left >= 2) {
            out = xi_diff_axis(out, ax, 2);
            left -= 2;
        }
        if (left == 1) out = xi_diff_axis(out, ax, 1);
    }
    return out;
}

}  // namespace dncalc
