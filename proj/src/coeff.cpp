#include "dncalc/coeff.hpp"

#include "dncalc/expr.hpp"
#include "dncalc/random.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dncalc {


CoefficientField CoefficientField::sample(const CoefficientFunction& fn, const TorusGrid& grid) {
    if (fn.dimension != grid.dimension())
        throw InvalidArgument("coefficient dimension does not match grid");
    CoefficientField a(grid);
    a.description_ = fn.description;
    int n = grid.dimension() + 1;
    double h = grid.spacing();
    a.nodal_.assign(n * n, std::vector<cplx>(grid.size()));
    a.staggered_.assign(grid.dimension(),
                        std::vector<std::vector<cplx>>(n * n, std::vector<cplx>(grid.size())));
    for (std::size_t p = 0; p < grid.size(); ++p) {
        auto x = grid.coordinates(p);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a.nodal_[i * n + j][p] = fn.entry(i, j, x);
        for (int ax = 0; ax < grid.dimension(); ++ax) {
            auto xs = x;
            xs[ax] += 0.5 * h;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) a.staggered_[ax][i * n + j][p] = fn.entry(i, j, xs);
        }
    }
    return a;
}

CoefficientField CoefficientField::from_samples(const TorusGrid& grid,
                                                std::vector<std::vector<cplx>> entries,
                                                std::string description) {
    int n = grid.dimension() + 1;
    if (entries.size() != static_cast<std::size_t>(n * n))
        throw InvalidArgument("coefficient samples need (d+1)^2 entries");
    for (auto& e : entries)
        if (e.size() != grid.size()) throw InvalidArgument("coefficient sample size mismatch");
    CoefficientField a(grid);
    a.description_ = std::move(description);
    a.nodal_ = std::move(entries);
    a.staggered_.resize(grid.dimension());
    for (int ax = 0; ax < grid.dimension(); ++ax)
        for (int e = 0; e < n * n; ++e) {
            GridFunction f(grid, a.nodal_[e]);
            double h = grid.spacing();
            auto g = fractional_multiplier(f, [ax, h](const std::array<double, 2>& xi) {
                return std::exp(cplx(0.0, xi[ax] * 0.5 * h));
            });
            a.staggered_[ax].emplace_back(g.values().begin(), g.values().end());
        }
    return a;
}

std::span<const cplx> CoefficientField::entry(int i, int j) const {
    int n = order();
    if (i < 0 || j < 0 || i >= n || j >= n) throw InvalidArgument("coefficient index");
    return nodal_[i * n + j];
}

std::span<const cplx> CoefficientField::staggered(int i, int j, int axis) const {
    int n = order();
    if (i < 0 || j < 0 || i >= n || j >= n || axis < 0 || axis >= dimension())
        throw InvalidArgument("coefficient index");
    return staggered_[axis][i * n + j];
}

Eigen::MatrixXcd CoefficientField::at(std::size_t node) const {
    int n = order();
    Eigen::MatrixXcd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = nodal_[i * n + j][node];
    return m;
}

bool CoefficientField::is_constant(double tol) const {
    auto check = [tol](const std::vector<cplx>& v) {
        for (auto c : v)
            if (std::abs(c - v[0]) > tol * (1.0 + std::abs(v[0]))) return false;
        return true;
    };
    for (auto& e : nodal_)
        if (!check(e)) return false;
    for (auto& ax : staggered_)
        for (std::size_t e = 0; e < ax.size(); ++e)
            for (auto c : ax[e])
                if (std::abs(c - nodal_[e][0]) > tol * (1.0 + std::abs(nodal_[e][0])))
                    return false;
    return true;
}

CoefficientField CoefficientField::validated(std::size_t samples, std::uint64_t seed) const {
    CoefficientField c = *this;
    c.ellipticity_ = validate(*this, samples, seed);
    c.lipschitz_ = lipschitz_estimate(*this);
    return c;
}

EllipticityEstimate validate(const CoefficientField& a, std::size_t samples, std::uint64_t seed) {
    if (samples < 100) throw InvalidArgument("ellipticity validation needs at least 100 samples");
    const auto& g = a.grid();
    int n = a.order();

    // unit directions in C^n: canonical vectors then Halton points pushed through Box-Muller
    std::vector<Eigen::VectorXcd> dirs;
    for (int k = 0; k < n; ++k) dirs.push_back(Eigen::VectorXcd::Unit(n, k));
    static const unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
    for (std::size_t s = 0; s < samples; ++s) {
        Eigen::VectorXcd v(n);
        std::uint64_t idx = s + 1 + seed;
        for (int k = 0; k < n; ++k) {
            double u[4];
            for (int q = 0; q < 4; ++q)
                u[q] = std::clamp(radical_inverse(idx, primes[4 * k % 8 + q]), 1e-12, 1.0);
            double r1 = std::sqrt(-2.0 * std::log(u[0])), r2 = std::sqrt(-2.0 * std::log(u[2]));
            v(k) = cplx(r1 * std::cos(2 * pi * u[1]), r2 * std::cos(2 * pi * u[3]));
        }
        if (v.norm() > 1e-12) dirs.push_back(v / v.norm());
    }

    EllipticityEstimate est;
    est.nu1 = est.nu1_sampled = std::numeric_limits<double>::infinity();
    est.directions = dirs.size();
    for (std::size_t p = 0; p < g.size(); ++p) {
        Eigen::MatrixXcd m = a.at(p);
        Eigen::MatrixXcd herm = 0.5 * (m + m.adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm);
        double lo = es.eigenvalues()(0);
        if (lo < est.nu1) {
            est.nu1 = lo;
            est.witness_node = p;
            auto ev = es.eigenvectors().col(0);
            est.witness_eta.assign(ev.data(), ev.data() + n);
        }
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
        est.nu2 = std::max(est.nu2, svd.singularValues()(0));
        for (auto& d : dirs) {
            cplx q = d.dot(m * d);  // conj(d)^T m d
            est.nu1_sampled = std::min(est.nu1_sampled, q.real());
            est.nu2_sampled = std::max(est.nu2_sampled, (m * d).norm());
        }
    }
    if (!(est.nu1 > 0.0)) {
        auto x = g.coordinates(est.witness_node);
        std::ostringstream os;
        os << "coefficient field is not elliptic: Re<A eta, eta> = " << est.nu1 << " at x = ("
           << x[0];
        if (g.dimension() == 2) os << ", " << x[1];
        os << ")";
        throw EllipticityError(os.str(), std::vector<double>(x.begin(), x.begin() + g.dimension()),
                               est.witness_eta, est.nu1);
    }
    return est;
}

double lipschitz_estimate(const CoefficientField& a) {
    const auto& g = a.grid();
    int n = a.order();
    double h = g.spacing(), total = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            auto e = a.entry(i, j);
            double worst = 0.0;
            for (std::size_t p = 0; p < g.size(); ++p) {
                auto m = g.multi_index(p);
                for (int ax = 0; ax < g.dimension(); ++ax) {
                    auto m2 = m;
                    m2[ax] += 1;
                    worst = std::max(worst, std::abs(e[g.flat_index(m2)] - e[p]) / h);
                }
            }
            total += worst;
        }
    return total;
}

CoefficientField transform_entries(
    const CoefficientField& a, const std::function<Eigen::MatrixXcd(const Eigen::MatrixXcd&)>& f,
    std::string description) {
    CoefficientField c(a.grid_);
    c.description_ = std::move(description);
    int n = a.order();
    auto map_set = [&](const std::vector<std::vector<cplx>>& src) {
        std::vector<std::vector<cplx>> dst(n * n, std::vector<cplx>(a.grid_.size()));
        Eigen::MatrixXcd m(n, n);
        for (std::size_t p = 0; p < a.grid_.size(); ++p) {
            for (int e = 0; e < n * n; ++e) m(e / n, e % n) = src[e][p];
            Eigen::MatrixXcd r = f(m);
            for (int e = 0; e < n * n; ++e) dst[e][p] = r(e / n, e % n);
        }
        return dst;
    };
    c.nodal_ = map_set(a.nodal_);
    for (auto& ax : a.staggered_) c.staggered_.push_back(map_set(ax));
    return c;
}

CoefficientField adjoint(const CoefficientField& a) {
    return transform_entries(
        a, [](const Eigen::MatrixXcd& m) { return Eigen::MatrixXcd(m.adjoint()); },
        "adjoint of " + a.description());
}

Eigen::MatrixXcd closure_m(const Eigen::MatrixXcd& a) {
    int n = static_cast<int>(a.rows()), d = n - 1;
    cplx b = a(d, d), bc = std::conj(b);
    Eigen::MatrixXcd m(n, n);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = std::norm(b) * a(i, j) - bc * a(d, i) * a(j, d);
    for (int i = 0; i < d; ++i) {
        m(i, d) = bc * a(i, d);   // last column from r1
        m(d, i) = -bc * a(d, i);  // last row from r2
    }
    m(d, d) = bc;
    return m;
}

Eigen::MatrixXcd closure_n(const Eigen::MatrixXcd& a) {
    int n = static_cast<int>(a.rows()), d = n - 1;
    Eigen::MatrixXcd m = a;
    for (int i = 0; i < d; ++i) {
        m(i, d) = -a(i, d);
        m(d, i) = -a(d, i);
    }
    return m;
}

ClosurePair phi_closure_matrices(const CoefficientField& a) {
    return {transform_entries(a, closure_m, "M of " + a.description()).validated(),
            transform_entries(a, closure_n, "N of " + a.description()).validated()};
}

std::vector<cplx> r1_divergence(const CoefficientField& a) {
    const auto& g = a.grid();
    int d = a.dimension();
    std::vector<cplx> out(g.size(), 0.0);
    for (int j = 0; j < d; ++j) {
        auto e = a.entry(j, d);
        auto dr = derivative(GridFunction(g, std::vector<cplx>(e.begin(), e.end())), j);
        for (std::size_t p = 0; p < g.size(); ++p) out[p] += dr[p];
    }
    return out;
}

std::vector<std::vector<cplx>> aprime_divergence(const CoefficientField& a) {
    const auto& g = a.grid();
    int d = a.dimension();
    std::vector<std::vector<cplx>> out(d, std::vector<cplx>(g.size(), 0.0));
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
            auto e = a.entry(k, j);
            auto dr = derivative(GridFunction(g, std::vector<cplx>(e.begin(), e.end())), k);
            for (std::size_t p = 0; p < g.size(); ++p) out[j][p] += dr[p];
        }
    return out;
}

std::string to_string(FamilyTag tag) {
    switch (tag) {
        case FamilyTag::constant: return "constant";
        case FamilyTag::block: return "block";
        case FamilyTag::hermitian: return "hermitian";
        case FamilyTag::general: return "general";
        case FamilyTag::expressions: return "expressions";
    }
    return "unknown";
}

FamilyTag parse_family_tag(const std::string& s) {
    if (s == "constant") return FamilyTag::constant;
    if (s == "block") return FamilyTag::block;
    if (s == "hermitian") return FamilyTag::hermitian;
    if (s == "general" || s == "general-lipschitz") return FamilyTag::general;
    if (s == "expressions" || s == "user-config") return FamilyTag::expressions;
    throw InvalidArgument("unknown coefficient family '" + s + "'");
}

Eigen::MatrixXcd default_base(FamilyTag tag, int dimension) {
    using C = cplx;
    if (dimension == 1) {
        Eigen::MatrixXcd m(2, 2);
        switch (tag) {
            case FamilyTag::block: m << 2.0, 0.0, 0.0, 1.0; break;
            case FamilyTag::hermitian: m << 2.0, C(0.4, 0.3), C(0.4, -0.3), 1.2; break;
            case FamilyTag::general: m << C(2.0, 0.3), C(0.5, -0.2), C(0.3, 0.1), C(1.0, -0.2); break;
            default: m << 2.0, 0.5, 0.3, 1.0; break;
        }
        return m;
    }
    if (dimension != 2) throw InvalidArgument("family dimension must be 1 or 2");
    Eigen::MatrixXcd m(3, 3);
    switch (tag) {
        case FamilyTag::block: m << 2.0, 0.3, 0.0, 0.3, 1.5, 0.0, 0.0, 0.0, 1.0; break;
        case FamilyTag::hermitian:
            m << 2.0, C(0.2, 0.1), C(0.4, 0.3), C(0.2, -0.1), 1.5, C(0.1, -0.2), C(0.4, -0.3),
                C(0.1, 0.2), 1.2;
            break;
        case FamilyTag::general:
            m << C(2.0, 0.2), 0.3, C(0.5, -0.2), C(0.1, 0.1), C(1.5, -0.1), 0.2, C(0.3, 0.1),
                C(0.1, -0.1), C(1.0, -0.2);
            break;
        default: m << 2.0, 0.3, 0.5, 0.2, 1.5, 0.1, 0.3, 0.4, 1.0; break;
    }
    return m;
}

namespace {

struct Term {
    cplx coef;
    int mode;
    int axis;
    bool sine;
};

double min_hermitian_eig(const Eigen::MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()));
    return es.eigenvalues()(0);
}

CoefficientFunction expression_function(const CoefficientFamily& fam) {
    int n = fam.dimension + 1;
    std::vector<std::optional<Expression>> ex(n * n);
    for (auto& [key, text] : fam.expressions) {
        if (key.size() != 3 || key[0] != 'a' || key[1] < '1' || key[2] < '1' ||
            key[1] > '0' + n || key[2] > '0' + n)
            throw InvalidArgument("unknown coefficient entry '" + key + "'");
        ex[(key[1] - '1') * n + (key[2] - '1')] = Expression::parse(text);
    }
    for (int i = 0; i < n; ++i)
        if (!ex[i * n + i])
            throw InvalidArgument("diagonal entry a" + std::to_string(i + 1) +
                                  std::to_string(i + 1) + " is required");
    CoefficientFunction fn;
    fn.dimension = fam.dimension;
    fn.description = "expressions";
    fn.entry = [ex, n](int i, int j, const std::array<double, 2>& x) -> cplx {
        const auto& e = ex[i * n + j];
        return e ? e->evaluate(x) : cplx(0.0);
    };
    return fn;
}

}  // namespace

CoefficientFunction CoefficientFamily::function() const {
    if (tag == FamilyTag::expressions) return expression_function(*this);
    int d = dimension, n = d + 1;
    Eigen::MatrixXcd a0 = base ? *base : default_base(tag, d);
    if (a0.rows() != n || a0.cols() != n) throw InvalidArgument("base matrix has the wrong size");
    if (!(amplitude > 0.0 && amplitude <= 1.0)) throw InvalidArgument("amplitude must be in (0, 1]");
    if (max_mode < 1 || terms < 1) throw InvalidArgument("max_mode and terms must be >= 1");

    std::vector<std::vector<Term>> pert(n * n);
    if (tag != FamilyTag::constant) {
        double nu0 = min_hermitian_eig(a0);
        if (nu0 <= 0.2) throw InvalidArgument("base matrix leaves no ellipticity budget");
        Rng rng(seed);
        auto draw = [&](bool complex_coef) {
            std::vector<Term> ts;
            for (int t = 0; t < terms; ++t) {
                Term term;
                double re = rng.uniform(-1.0, 1.0);
                double im = complex_coef ? rng.uniform(-1.0, 1.0) : 0.0;
                term.coef = cplx(re, im);
                term.mode = rng.integer(1, max_mode);
                term.axis = rng.integer(0, d - 1);
                term.sine = rng.uniform() < 0.5;
                ts.push_back(term);
            }
            return ts;
        };
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                bool horizontal = i < d && j < d;
                switch (tag) {
                    case FamilyTag::block:
                        if (horizontal || (i == d && j == d)) pert[i * n + j] = draw(false);
                        break;
                    case FamilyTag::hermitian:
                        if (i == j)
                            pert[i * n + j] = draw(false);
                        else if (i < j) {
                            pert[i * n + j] = draw(true);
                            auto mirror = pert[i * n + j];
                            for (auto& t : mirror) t.coef = std::conj(t.coef);
                            pert[j * n + i] = mirror;
                        }
                        break;
                    default: pert[i * n + j] = draw(true); break;
                }
            }
        double frob = 0.0;
        for (auto& ts : pert) {
            double b = 0.0;
            for (auto& t : ts) b += std::abs(t.coef);
            frob += b * b;
        }
        double scale = frob > 0.0 ? amplitude * (nu0 - 0.2) / std::sqrt(frob) : 0.0;
        for (auto& ts : pert)
            for (auto& t : ts) t.coef *= scale;
    }

    CoefficientFunction fn;
    fn.dimension = d;
    fn.description = to_string(tag);
    double w = 2.0 * pi / period;
    fn.entry = [a0, pert, n, w](int i, int j, const std::array<double, 2>& x) -> cplx {
        cplx v = a0(i, j);
        for (const auto& t : pert[i * n + j]) {
            double arg = w * t.mode * x[t.axis];
            v += t.coef * (t.sine ? std::sin(arg) : std::cos(arg));
        }
        return v;
    };
    return fn;
}

CoefficientField build_field(const CoefficientFamily& family, const TorusGrid& grid) {
    if (family.dimension != grid.dimension())
        throw InvalidArgument("family dimension does not match grid");
    double ratio = grid.length() / family.period;
    if (family.tag != FamilyTag::expressions &&
        (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1))
        throw InvalidArgument("grid length must be an integer multiple of the coefficient period");
    return CoefficientField::sample(family.function(), grid).validated();
}

}  // namespace dncalc
