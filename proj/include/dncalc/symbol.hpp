#pragma once

#include "dncalc/coeff.hpp"
#include "dncalc/grid.hpp"
#include "dncalc/report.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dncalc {

enum class SymbolKind { mu, lambda, q, derived, discrete };

std::string to_string(SymbolKind k);

/// sigma(x_m, xi_k) on nodes x frequencies, node-major (node * size + freq).
class SymbolTable {
public:
    SymbolTable(TorusGrid grid, SymbolKind kind, std::optional<double> degree,
                std::vector<cplx> values);

    const TorusGrid& grid() const { return grid_; }
    SymbolKind kind() const { return kind_; }
    std::optional<double> degree() const { return degree_; }
    std::size_t nodes() const { return grid_.size(); }
    std::size_t frequencies() const { return grid_.size(); }

    cplx operator()(std::size_t node, std::size_t freq) const {
        return values_[node * grid_.size() + freq];
    }
    std::span<const cplx> values() const { return values_; }
    std::span<const cplx> row(std::size_t node) const {
        return std::span<const cplx>(values_).subspan(node * grid_.size(), grid_.size());
    }

private:
    TorusGrid grid_;
    SymbolKind kind_;
    std::optional<double> degree_;
    std::vector<cplx> values_;
};

/// Root of b mu^2 + (r1 + r2).xi mu + <A' xi, xi> = 0 given by
/// -v.xi/2 + i sqrt(<A' xi, xi>/b - (v.xi)^2/4), v = (r1 + r2)/b, principal square root.
cplx principal_root(const Eigen::MatrixXcd& a, std::span<const double> xi);
/// Relative residual of the quadratic at a root candidate.
double root_residual(const Eigen::MatrixXcd& a, std::span<const double> xi, cplx mu);

/// Throws SymbolError when the residual exceeds 1e-10 or Im mu <= 0 off xi = 0.
SymbolTable mu_of(const CoefficientField& a);
/// b mu + r2.xi
SymbolTable lambda_of(const CoefficientField& a);
/// mu + v.xi
SymbolTable q_of(const CoefficientField& a);

/// Upper constant C (|sigma| <= C|xi|), lower constant C' (Im sigma >= C'|xi|) and
/// the pointwise inequality Re(<A'xi,xi> - b/4 (v.xi)^2) >= nu1 (|xi|^2 + |v.xi|^2/4).
EstimateReport check_symbol_bounds(const SymbolTable& sigma, const CoefficientField& a);

/// Spectral x-derivatives, one table per axis.
std::vector<SymbolTable> symbol_x_gradient(const SymbolTable& sigma);

/// Finite differences on the lattice: centered inside, one-sided second order at the
/// lattice edges. Total order <= d + 1. Values at xi = 0 are meaningless (kink).
SymbolTable symbol_xi_derivative(const SymbolTable& sigma, std::array<int, 2> alpha);

}  // namespace dncalc
