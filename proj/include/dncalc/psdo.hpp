#pragma once

#include "dncalc/coeff.hpp"
#include "dncalc/grid.hpp"
#include "dncalc/symbol.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dncalc {

/// Read-only symbol data shared by every operator built from one coefficient field.
struct PrincipalContext {
    CoefficientField field;
    SymbolTable mu;
    std::vector<SymbolTable> grad_mu;           // d_x_j mu
    std::vector<std::vector<cplx>> aprime_div;  // a'_j = sum_k d_k a_kj
    std::vector<cplx> r1_div;                   // div r1
    double lower_constant = 0.0;                // min Im mu / |xi|

    /// Uses mu_of(field) unless an override table (same grid) is supplied.
    static std::shared_ptr<const PrincipalContext> make(const CoefficientField& field,
                                                        std::optional<SymbolTable> mu = {});
};

using ContextPtr = std::shared_ptr<const PrincipalContext>;

/// Which quantitative hypothesis a weight was built to satisfy.
enum class WeightHypothesis { none, bounded, square_function };

/// p(x_m, xi_k, t), possibly vector valued (one callable per component).
struct WeightFamily {
    std::string tag;
    std::vector<std::function<cplx(std::size_t node, std::size_t freq, double t)>> components;
    WeightHypothesis hypothesis = WeightHypothesis::none;
    std::vector<double> exponents;  // powers l_k of (t|xi|) in the declared bound
};

namespace weights {
WeightFamily unit();
/// (t|xi|)^l
WeightFamily scaled_frequency(double l);
/// (i t mu)^k, giving t^k (d/dt)^k U_0
WeightFamily time_power(const ContextPtr& ctx, int k);
/// i t A' grad_x mu, one component per horizontal axis
WeightFamily pi_prime(const ContextPtr& ctx);
/// t^{1/2} chi(t) (zeta |xi|^{1/2}/(i mu) + d_t zeta |xi|^{1/2}/mu^2),
/// zeta = i (r1 + r2 + i t A' xi).grad_x mu + i a'.xi
WeightFamily zeta(const ContextPtr& ctx);
/// i (1+|xi|^2)^{-(1+eps)/2} (1 + i t mu) A' grad_x mu
WeightFamily q_weight(const ContextPtr& ctx, double eps);
}  // namespace weights

/// sigma(., D) f with the symbol evaluated at the output point.
GridFunction quantize(const SymbolTable& sigma, const GridFunction& f);

GridFunction u0_apply(const PrincipalContext& ctx, double t, const GridFunction& h);
GridFunction gp_apply(const WeightFamily& p, const PrincipalContext& ctx, double t,
                      const GridFunction& h, std::size_t component = 0);
/// All components for a batch of inputs: result[input][component].
std::vector<std::vector<GridFunction>> gp_apply_batch(const WeightFamily& p,
                                                      const PrincipalContext& ctx, double t,
                                                      std::span<const GridFunction> hs);

struct KernelSlice {
    TorusGrid grid;
    std::size_t node;
    double t;
    std::vector<std::array<double, 2>> offsets;  // y, centered: (j - N/2) h per axis
    std::vector<cplx> values;                     // K(x, y, t), unit mass for p = 1
};

/// K(x, y, t) = L^{-d} sum_k p e^{i t mu(x, xi_k)} e^{i y xi_k}, so that
/// (G_p h)(x) = sum_y h^d K(x, y, t) h(x - y).
KernelSlice kernel_slice(const WeightFamily& p, const PrincipalContext& ctx, std::size_t node,
                         double t, std::size_t component = 0);

/// grad(U_0 h) - U_0(grad h), one entry per axis.
std::vector<GridFunction> commutator_u0(const PrincipalContext& ctx, double t,
                                        const GridFunction& h);

struct TimeQuadrature {
    double t_min;
    double t_max;
    double ratio;
    static TimeQuadrature standard(const TorusGrid& grid);
    std::vector<double> nodes() const;
};

struct SquareFunctionResult {
    double integral = 0.0;    // int_0^inf ||G_p(t) h||^2 dt/t
    double ratio = 0.0;       // integral / ||h||^2
    double lower_tail = 0.0;  // estimate of the omitted (0, t_min) part, relative
    double upper_tail = 0.0;  // bound exp(-2 C' t_max |xi_min|)
    std::size_t samples = 0;
};

/// Refuses weights not tagged for the square-function hypothesis; h must be zero-mean.
std::vector<SquareFunctionResult> square_function(const WeightFamily& p,
                                                  const PrincipalContext& ctx,
                                                  std::span<const GridFunction> hs,
                                                  const TimeQuadrature& quad);
SquareFunctionResult square_function(const WeightFamily& p, const PrincipalContext& ctx,
                                     const GridFunction& h, const TimeQuadrature& quad);

/// max over the given times of ||G_p(t) h|| / ||h||, for each input.
std::vector<double> sup_ratio(const WeightFamily& p, const PrincipalContext& ctx,
                              std::span<const GridFunction> hs, std::span<const double> times);

/// int_0^inf ||e^{-t} U_0(t) h||^2_{H-dot^{1/2}} dt / ||h||^2 for each input.
std::vector<double> u0_half_integral(const PrincipalContext& ctx, std::span<const GridFunction> hs,
                                     const TimeQuadrature& quad);

}  // namespace dncalc
