#pragma once

#include "dncalc/coeff.hpp"
#include "dncalc/grid.hpp"
#include "dncalc/psdo.hpp"
#include "dncalc/symbol.hpp"

#include <Eigen/Dense>

#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace dncalc {

enum class SolverBackend { krylov, direct };
/// flux: half-cell flux balance at t = 0 (conormal trace consistent with the scheme);
/// three_point: -(-3 u0 + 4 u1 - u2) / (2 dt).
enum class TraceRule { flux, three_point };

/// Top of the strip. zero_flux: u(., T) is the constant that makes the net vertical flux
/// vanish (the limit of the bounded half-space solution); mean_value: u(., T) = mean(f).
enum class TopCondition { zero_flux, mean_value };

std::string to_string(SolverBackend b);
std::string to_string(TopCondition c);
std::string to_string(TraceRule r);

struct StripOptions {
    double height = 0.0;  // 0 selects 4 L
    int levels = 0;       // 0 selects dt ~ h
    SolverBackend backend = SolverBackend::krylov;
    TraceRule trace = TraceRule::flux;
    TopCondition top = TopCondition::zero_flux;
    double tolerance = 1e-12;       // Krylov stopping target, relative
    double residual_limit = 1e-10;  // explicit residual acceptance, relative
    int restart = 40;
    int max_iterations = 800;
};

/// Coefficients seen by the stencil at one node: a11, a12 on the two x-faces, a21, a22 at the node.
struct LocalCoefficients {
    cplx a11_right, a11_left, a12_right, a12_left, a21, a22;
};

struct StripSolution {
    TorusGrid grid;
    double height = 0.0;
    double dt = 0.0;
    int levels = 0;
    std::vector<cplx> values;  // (levels + 1) * N, level-major
    double residual = 0.0;     // explicit, relative
    int iterations = 0;
    double condition_estimate = 0.0;
    std::string backend;

    std::span<const cplx> level(int n) const;
    GridFunction trace(int n) const;
};

/// Conservative divergence-form scheme for -div(A grad u) on torus x [0, T], d = 1.
/// Nodes t_n = n dt, n = 0..Nt; interior unknowns are levels 1..Nt-1.
class StripDiscretization {
public:
    explicit StripDiscretization(CoefficientField a, StripOptions opts = {});

    const CoefficientField& field() const { return field_; }
    const TorusGrid& grid() const { return field_.grid(); }
    const StripOptions& options() const { return opts_; }
    double height() const { return height_; }
    int levels() const { return levels_; }
    double dt() const { return dt_; }
    std::size_t unknowns() const { return static_cast<std::size_t>(levels_ - 1) * grid().size(); }
    const LocalCoefficients& local(std::size_t m) const { return local_[m]; }

    /// Applies the stencil to a full field (levels 0..Nt) and writes levels 1..Nt-1.
    void apply(std::span<const cplx> full, std::span<cplx> interior) const;
    /// Same with zero boundary rows.
    void apply_interior(std::span<const cplx> x, std::span<cplx> y) const;
    /// Exact inverse of the x-averaged constant-coefficient scheme.
    void precondition(std::span<const cplx> r, std::span<cplx> z) const;

    /// u(., 0) = bottom, u(., T) = top, scheme residual = source on interior levels.
    /// source is empty or (Nt + 1) * N values (boundary rows ignored).
    StripSolution solve(const GridFunction& bottom, cplx top, std::span<const cplx> source = {}) const;

    /// Solution with u(., 0) = 0 and u(., T) = 1, computed once.
    const StripSolution& lift() const;
    /// h * sum over x of the vertical flux (A grad u)_t on the half-level below T.
    cplx top_flux(const StripSolution& u) const;
    /// Adds the multiple of lift() that cancels top_flux.
    void release_top(StripSolution& u) const;

    /// Per-mode data of the frozen-coefficient scheme (at each node):
    /// rho = decaying root of the level recurrence, trace = P-symbol of the trace rule,
    /// mu = -i log(rho) / dt so that rho^n = exp(i t_n mu).
    const SymbolTable& discrete_rho() const;
    const SymbolTable& discrete_trace_symbol() const;
    const SymbolTable& discrete_mu() const;

private:
    CoefficientField field_;
    StripOptions opts_;
    double height_;
    int levels_;
    double dt_;
    std::vector<LocalCoefficients> local_;
    std::vector<std::array<cplx, 9>> weights_;  // [(i + 1) * 3 + (j + 1)], x-offset i, level-offset j
    std::vector<cplx> thomas_inv_beta_, thomas_gamma_, thomas_cm_;

    struct Direct;
    std::shared_ptr<Direct> direct_;
    struct Symbols {
        std::once_flag once;
        std::unique_ptr<SymbolTable> rho, trace, mu;
    };
    std::shared_ptr<Symbols> symbols_;
    struct Lift {
        std::once_flag once;
        std::unique_ptr<StripSolution> solution;
    };
    std::shared_ptr<Lift> lift_;

    void build_symbols() const;
    std::vector<cplx> solve_krylov(std::span<const cplx> rhs, int& iterations, double& cond) const;
    std::vector<cplx> solve_direct(std::span<const cplx> rhs, double& cond) const;
};

/// Interior stencil residual -(FX_{m+1/2} - FX_{m-1/2})/h - (FT_{n+1/2} - FT_{n-1/2})/dt
/// with u(i, j) the value at x-offset i, level-offset j.
template <class U>
cplx stencil_residual(const LocalCoefficients& c, U&& u, double h, double dt) {
    cplx fx_r = c.a11_right * (u(1, 0) - u(0, 0)) / h +
                c.a12_right * (u(0, 1) + u(1, 1) - u(0, -1) - u(1, -1)) / (4.0 * dt);
    cplx fx_l = c.a11_left * (u(0, 0) - u(-1, 0)) / h +
                c.a12_left * (u(-1, 1) + u(0, 1) - u(-1, -1) - u(0, -1)) / (4.0 * dt);
    cplx ft_u = c.a21 * (u(1, 0) + u(1, 1) - u(-1, 0) - u(-1, 1)) / (4.0 * h) +
                c.a22 * (u(0, 1) - u(0, 0)) / dt;
    cplx ft_d = c.a21 * (u(1, -1) + u(1, 0) - u(-1, -1) - u(-1, 0)) / (4.0 * h) +
                c.a22 * (u(0, 0) - u(0, -1)) / dt;
    return -(fx_r - fx_l) / h - (ft_u - ft_d) / dt;
}

/// Conormal trace -(A grad u)_t at t = 0 from a half-cell flux balance on [0, dt/2].
template <class U>
cplx flux_trace(const LocalCoefficients& c, U&& u, double h, double dt) {
    cplx ft = c.a21 * (u(1, 0) + u(1, 1) - u(-1, 0) - u(-1, 1)) / (4.0 * h) +
              c.a22 * (u(0, 1) - u(0, 0)) / dt;
    cplx fx_r = c.a11_right * (u(1, 0) - u(0, 0)) / h +
                c.a12_right * (u(0, 1) - u(0, 0) + u(1, 1) - u(1, 0)) / (2.0 * dt);
    cplx fx_l = c.a11_left * (u(0, 0) - u(-1, 0)) / h +
                c.a12_left * (u(-1, 1) - u(-1, 0) + u(0, 1) - u(0, 0)) / (2.0 * dt);
    return -ft - 0.5 * dt * (fx_r - fx_l) / h;
}

struct BoundaryTraces {
    GridFunction p;       // P_A f
    GridFunction lambda;  // Lambda_A f
};

BoundaryTraces boundary_traces(const StripDiscretization& disc, const StripSolution& sol);

/// u(., 0) = f; the top follows options().top.
StripSolution solve_dirichlet(const StripDiscretization& disc, const GridFunction& f);
/// u(., 0) = 0, top as in solve_dirichlet; the source must vanish for t > T/2.
StripSolution solve_inhomogeneous(const StripDiscretization& disc, std::span<const cplx> source);

GridFunction poisson_apply(const StripDiscretization& disc, const GridFunction& f);
GridFunction dn_apply(const StripDiscretization& disc, const GridFunction& f);
/// Q f = Lambda f / b - (r1/b) f' - (r1'/b) f
GridFunction q_from_lambda(const CoefficientField& a, const GridFunction& f,
                           const GridFunction& lambda_f);
GridFunction q_apply(const StripDiscretization& disc, const GridFunction& f);
/// <A grad E f, grad E g> over the strip, trapezoid in t, spectral in x.
cplx dn_weak(const StripDiscretization& disc, const GridFunction& f, const GridFunction& g);
cplx dn_weak(const StripDiscretization& disc, const StripSolution& ef, const StripSolution& eg);
/// -(a11 f')' with the strip's face coefficients (d = 1).
GridFunction aprime_apply(const CoefficientField& a, const GridFunction& f);

enum class PrincipalChoice { discrete, continuum };

/// principal_part returns the context realizing U_0 for the chosen principal symbol.
ContextPtr principal_context(const StripDiscretization& disc, PrincipalChoice choice);

/// U_1 = E h - chi U_0 h on every level of the strip.
StripSolution u1_field(const StripDiscretization& disc, const PrincipalContext& principal,
                       const GridFunction& h, const StripSolution* eh = nullptr);
std::vector<GridFunction> u1_compute(const StripDiscretization& disc,
                                     const PrincipalContext& principal, const GridFunction& h,
                                     std::span<const int> levels);

struct RemainderResult {
    GridFunction s;               // -P h - (principal trace symbol)(., D) h
    GridFunction p;               // P h
    GridFunction cross_check;     // one-sided derivative of U_1 at t = 0
    double cross_check_gap = 0.0;  // ||s - cross_check|| / ||P h||
};

/// Discrete choice: s = -P_h h + pi_h(., D) h with pi_h the trace-rule symbol of the
/// frozen scheme. Continuum choice: s = -P h - i mu(., D) h.
RemainderResult s1_apply(const StripDiscretization& disc, const GridFunction& h,
                         PrincipalChoice choice = PrincipalChoice::discrete);

enum class BoundaryOperator { p, lambda, q };
std::string to_string(BoundaryOperator op);

struct OperatorMatrix {
    Eigen::MatrixXcd matrix;
    std::string label;
};

/// Columns are the operator applied to nodal unit vectors. Requires N <= 512.
OperatorMatrix assemble_operator_matrix(const StripDiscretization& disc, BoundaryOperator which);

}  // namespace dncalc
