#include "dncalc/grid.hpp"

#include "dncalc/fft.hpp"

#include <cmath>
#include <string>

namespace dncalc {

TorusGrid::TorusGrid(int dimension, double length, int points)
    : dim_(dimension), length_(length), points_(points) {
    if (dimension != 1 && dimension != 2)
        throw InvalidArgument("grid dimension must be 1 or 2, got " + std::to_string(dimension));
    if (!(length > 0.0) || !std::isfinite(length))
        throw InvalidArgument("grid length must be positive");
    if (points < 8 || points % 2 != 0)
        throw InvalidArgument("grid points must be even and >= 8, got " + std::to_string(points));
    size_ = dimension == 1 ? static_cast<std::size_t>(points)
                           : static_cast<std::size_t>(points) * points;
}

double TorusGrid::cell_volume() const {
    double h = spacing();
    return dim_ == 1 ? h : h * h;
}

std::array<int, 2> TorusGrid::multi_index(std::size_t flat) const {
    if (dim_ == 1) return {static_cast<int>(flat), 0};
    return {static_cast<int>(flat % points_), static_cast<int>(flat / points_)};
}

std::size_t TorusGrid::flat_index(std::array<int, 2> idx) const {
    auto wrap = [this](int i) { return ((i % points_) + points_) % points_; };
    if (dim_ == 1) return static_cast<std::size_t>(wrap(idx[0]));
    return static_cast<std::size_t>(wrap(idx[0])) +
           static_cast<std::size_t>(points_) * static_cast<std::size_t>(wrap(idx[1]));
}

double TorusGrid::node(std::size_t flat, int axis) const {
    return multi_index(flat)[axis] * spacing();
}

std::array<double, 2> TorusGrid::coordinates(std::size_t flat) const {
    auto m = multi_index(flat);
    double h = spacing();
    return {m[0] * h, dim_ == 2 ? m[1] * h : 0.0};
}

int FrequencyLattice::wavenumber(std::size_t flat, int axis) const {
    int j = grid_.multi_index(flat)[axis];
    int n = grid_.points();
    return j < n / 2 ? j : j - n;
}

std::array<int, 2> FrequencyLattice::wavenumbers(std::size_t flat) const {
    return {wavenumber(flat, 0), grid_.dimension() == 2 ? wavenumber(flat, 1) : 0};
}

double FrequencyLattice::xi(std::size_t flat, int axis) const {
    return 2.0 * pi * wavenumber(flat, axis) / grid_.length();
}

std::array<double, 2> FrequencyLattice::xi(std::size_t flat) const {
    return {xi(flat, 0), grid_.dimension() == 2 ? xi(flat, 1) : 0.0};
}

double FrequencyLattice::norm(std::size_t flat) const {
    auto x = xi(flat);
    return std::hypot(x[0], x[1]);
}

std::size_t FrequencyLattice::index_of(std::array<int, 2> k) const {
    int n = grid_.points();
    for (int a = 0; a < grid_.dimension(); ++a)
        if (k[a] < -n / 2 || k[a] >= n / 2)
            throw InvalidArgument("wavenumber outside the frequency lattice");
    return grid_.flat_index(k);
}

void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* where) {
    if (!(a == b)) throw GridMismatch(std::string(where) + ": grids differ");
}

GridFunction::GridFunction(TorusGrid grid, std::vector<cplx> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
        throw InvalidArgument("grid function size does not match grid");
}

GridFunction GridFunction::zeros(const TorusGrid& grid) {
    return GridFunction(grid, std::vector<cplx>(grid.size(), 0.0));
}

GridFunction GridFunction::constant(const TorusGrid& grid, cplx value) {
    return GridFunction(grid, std::vector<cplx>(grid.size(), value));
}

GridFunction GridFunction::sample(const TorusGrid& grid,
                                  const std::function<cplx(const std::array<double, 2>&)>& f) {
    std::vector<cplx> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid.coordinates(i));
    return GridFunction(grid, std::move(v));
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
    require_same_grid(grid_, other.grid_, "operator+=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
    require_same_grid(grid_, other.grid_, "operator-=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

GridFunction& GridFunction::operator*=(cplx s) {
    for (auto& v : values_) v *= s;
    return *this;
}

GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator*(cplx s, GridFunction a) { return a *= s; }

GridFunction multiply(std::span<const cplx> m, const GridFunction& f) {
    if (m.size() != f.size()) throw InvalidArgument("multiplier size mismatch");
    std::vector<cplx> v(f.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = m[i] * f[i];
    return GridFunction(f.grid(), std::move(v));
}

namespace {
// f_hat = sqrt(h^d / N^d) * DFT(f); the inverse uses the reciprocal factor.
double spectral_scale(const TorusGrid& g) {
    return std::sqrt(g.cell_volume() / static_cast<double>(g.size()));
}
}  // namespace

Spectrum to_spectral(const GridFunction& f) {
    const auto& g = f.grid();
    std::vector<cplx> out(g.size());
    fft::forward(g.dimension(), g.points(), f.values(), out);
    double s = spectral_scale(g);
    for (auto& c : out) c *= s;
    return {g, std::move(out)};
}

GridFunction from_spectral(const Spectrum& s) {
    const auto& g = s.grid;
    if (s.coefficients.size() != g.size()) throw InvalidArgument("spectrum size mismatch");
    std::vector<cplx> out(g.size());
    fft::backward(g.dimension(), g.points(), s.coefficients, out);
    // sum_k c_k L^{-d/2} e^{i xi x}
    double scale = 1.0 / std::pow(g.length(), 0.5 * g.dimension());
    for (auto& c : out) c *= scale;
    return GridFunction(g, std::move(out));
}

Spectrum resample(const Spectrum& s, const TorusGrid& target) {
    if (s.grid.dimension() != target.dimension() ||
        std::abs(s.grid.length() - target.length()) > 1e-12 * target.length())
        throw GridMismatch("resample requires equal dimension and length");
    FrequencyLattice src(s.grid);
    int nt = target.points();
    Spectrum out{target, std::vector<cplx>(target.size(), 0.0)};
    for (std::size_t i = 0; i < s.coefficients.size(); ++i) {
        auto k = src.wavenumbers(i);
        bool inside = true;
        for (int a = 0; a < target.dimension(); ++a)
            if (k[a] < -nt / 2 || k[a] >= nt / 2) inside = false;
        if (inside) out.coefficients[target.flat_index(k)] = s.coefficients[i];
    }
    return out;
}

cplx inner(const GridFunction& f, const GridFunction& g) {
    require_same_grid(f.grid(), g.grid(), "inner");
    cplx acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * std::conj(g[i]);
    return acc * f.grid().cell_volume();
}

double l2_norm(const GridFunction& f) { return std::sqrt(std::max(0.0, inner(f, f).real())); }

cplx mean(const GridFunction& f) {
    cplx acc = 0.0;
    for (auto v : f.values()) acc += v;
    return acc / static_cast<double>(f.size());
}

GridFunction fractional_multiplier(const GridFunction& f,
                                   const std::function<cplx(const std::array<double, 2>&)>& m) {
    auto s = to_spectral(f);
    FrequencyLattice lat(f.grid());
    for (std::size_t i = 0; i < s.coefficients.size(); ++i) s.coefficients[i] *= m(lat.xi(i));
    return from_spectral(s);
}

GridFunction derivative(const GridFunction& f, int axis) {
    if (axis < 0 || axis >= f.grid().dimension()) throw InvalidArgument("derivative axis");
    return fractional_multiplier(f, [axis](const std::array<double, 2>& xi) {
        return cplx(0.0, xi[axis]);
    });
}

namespace {
void require_zero_mean(const Spectrum& s, const char* where) {
    double total = 0.0;
    for (auto c : s.coefficients) total += std::norm(c);
    double m = std::abs(s.coefficients[0]);
    if (m > 1e-12 * std::sqrt(total) && m > 1e-300)
        throw ZeroModeError(std::string(where) + ": input has a nonzero mean", m);
}
}  // namespace

GridFunction riesz_power(const GridFunction& f, double s) {
    auto sp = to_spectral(f);
    if (s < 0.0) require_zero_mean(sp, "riesz_power");
    FrequencyLattice lat(f.grid());
    for (std::size_t i = 0; i < sp.coefficients.size(); ++i) {
        double r = lat.norm(i);
        if (r == 0.0)
            sp.coefficients[i] = s == 0.0 ? sp.coefficients[i] : 0.0;
        else
            sp.coefficients[i] *= std::pow(r, s);
    }
    return from_spectral(sp);
}

GridFunction bessel_power(const GridFunction& f, double s) {
    return fractional_multiplier(f, [s](const std::array<double, 2>& xi) {
        return cplx(std::pow(1.0 + xi[0] * xi[0] + xi[1] * xi[1], 0.5 * s), 0.0);
    });
}

double sobolev_norm(const Spectrum& sp, double s, SobolevKind kind) {
    FrequencyLattice lat(sp.grid);
    if (kind == SobolevKind::homogeneous && s < 0.0) require_zero_mean(sp, "sobolev_norm");
    double acc = 0.0;
    for (std::size_t i = 0; i < sp.coefficients.size(); ++i) {
        double r2 = lat.norm(i);
        r2 *= r2;
        double w;
        if (kind == SobolevKind::inhomogeneous)
            w = std::pow(1.0 + r2, s);
        else
            w = r2 == 0.0 ? 0.0 : std::pow(r2, s);
        acc += w * std::norm(sp.coefficients[i]);
    }
    return std::sqrt(acc);
}

double sobolev_norm(const GridFunction& f, double s, SobolevKind kind) {
    return sobolev_norm(to_spectral(f), s, kind);
}

}  // namespace dncalc
