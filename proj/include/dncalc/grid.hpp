#pragma once

#include "dncalc/common.hpp"

#include <array>
#include <functional>
#include <span>
#include <vector>

namespace dncalc {

/// Uniform periodic grid on the torus [0, L)^d with N points per axis, d in {1, 2}.
/// Flat node index is m0 + N*m1. The same flat layout is used for frequencies.
class TorusGrid {
public:
    TorusGrid(int dimension, double length, int points);

    int dimension() const { return dim_; }
    double length() const { return length_; }
    int points() const { return points_; }
    double spacing() const { return length_ / points_; }
    double cell_volume() const;
    std::size_t size() const { return size_; }

    std::array<int, 2> multi_index(std::size_t flat) const;
    std::size_t flat_index(std::array<int, 2> idx) const;
    double node(std::size_t flat, int axis) const;
    std::array<double, 2> coordinates(std::size_t flat) const;

    bool operator==(const TorusGrid& other) const = default;

private:
    int dim_;
    double length_;
    int points_;
    std::size_t size_;
};

/// Integer lattice k in [-N/2, N/2 - 1]^d with xi = 2 pi k / L, stored in FFT order.
class FrequencyLattice {
public:
    explicit FrequencyLattice(const TorusGrid& grid) : grid_(grid) {}

    std::size_t size() const { return grid_.size(); }
    int wavenumber(std::size_t flat, int axis) const;
    std::array<int, 2> wavenumbers(std::size_t flat) const;
    double xi(std::size_t flat, int axis) const;
    std::array<double, 2> xi(std::size_t flat) const;
    double norm(std::size_t flat) const;
    /// Flat FFT-order index of an integer wavevector (must lie in the lattice).
    std::size_t index_of(std::array<int, 2> k) const;

private:
    TorusGrid grid_;
};

class GridFunction {
public:
    GridFunction(TorusGrid grid, std::vector<cplx> values);
    static GridFunction zeros(const TorusGrid& grid);
    static GridFunction constant(const TorusGrid& grid, cplx value);
    static GridFunction sample(const TorusGrid& grid,
                               const std::function<cplx(const std::array<double, 2>&)>& f);

    const TorusGrid& grid() const { return grid_; }
    std::span<const cplx> values() const { return values_; }
    std::vector<cplx>& mutable_values() { return values_; }
    std::size_t size() const { return values_.size(); }
    cplx operator[](std::size_t i) const { return values_[i]; }

    GridFunction& operator+=(const GridFunction& other);
    GridFunction& operator-=(const GridFunction& other);
    GridFunction& operator*=(cplx s);

private:
    TorusGrid grid_;
    std::vector<cplx> values_;
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator*(cplx s, GridFunction a);
/// Pointwise product with nodal samples of a multiplier.
GridFunction multiply(std::span<const cplx> m, const GridFunction& f);

/// Coefficients in the orthonormal basis L^{-d/2} e^{i xi x}, FFT order.
struct Spectrum {
    TorusGrid grid;
    std::vector<cplx> coefficients;
};

Spectrum to_spectral(const GridFunction& f);
GridFunction from_spectral(const Spectrum& s);
/// Zero-pads or truncates to another grid with the same dimension and length.
Spectrum resample(const Spectrum& s, const TorusGrid& target);

/// <f, g> = h^d sum f conj(g).
cplx inner(const GridFunction& f, const GridFunction& g);
double l2_norm(const GridFunction& f);
cplx mean(const GridFunction& f);

GridFunction derivative(const GridFunction& f, int axis);
GridFunction fractional_multiplier(const GridFunction& f,
                                   const std::function<cplx(const std::array<double, 2>&)>& m);
/// (-Delta)^{s/2}. For s < 0 the input must have zero mean.
GridFunction riesz_power(const GridFunction& f, double s);
/// (I - Delta)^{s/2}.
GridFunction bessel_power(const GridFunction& f, double s);

enum class SobolevKind { inhomogeneous, homogeneous };

/// Inhomogeneous: weights (1+|xi|^2)^s. Homogeneous: |xi|^{2s}, zero mode excluded,
/// nonzero mean rejected for s < 0.
double sobolev_norm(const GridFunction& f, double s, SobolevKind kind = SobolevKind::inhomogeneous);
double sobolev_norm(const Spectrum& f, double s, SobolevKind kind = SobolevKind::inhomogeneous);

void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* where);

}  // namespace dncalc
