#pragma once

#include "dncalc/common.hpp"
#include "dncalc/grid.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dncalc {

/// Analytic (d+1)x(d+1) matrix field. Entries are 0-based; index d is the vertical one.
struct CoefficientFunction {
    int dimension = 1;
    std::function<cplx(int i, int j, const std::array<double, 2>& x)> entry;
    std::string description;
};

struct EllipticityEstimate {
    double nu1 = 0.0;          // min over nodes of lambda_min(Re A)
    double nu2 = 0.0;          // max over nodes of the largest singular value
    double nu1_sampled = 0.0;  // min over sampled unit directions
    double nu2_sampled = 0.0;
    std::size_t directions = 0;
    std::size_t witness_node = 0;
    std::vector<cplx> witness_eta;
};

/// Samples of A at the nodes and at the half-shifted points x + h/2 e_axis.
class CoefficientField {
public:
    static CoefficientField sample(const CoefficientFunction& fn, const TorusGrid& grid);
    /// Nodal samples only, entries[i*(d+1)+j]; half-point values by spectral interpolation.
    static CoefficientField from_samples(const TorusGrid& grid,
                                         std::vector<std::vector<cplx>> entries,
                                         std::string description = "samples");

    const TorusGrid& grid() const { return grid_; }
    int dimension() const { return grid_.dimension(); }
    int order() const { return grid_.dimension() + 1; }
    const std::string& description() const { return description_; }

    std::span<const cplx> entry(int i, int j) const;
    std::span<const cplx> staggered(int i, int j, int axis) const;
    Eigen::MatrixXcd at(std::size_t node) const;

    std::span<const cplx> b() const { return entry(dimension(), dimension()); }
    std::span<const cplx> r1(int j) const { return entry(j, dimension()); }
    std::span<const cplx> r2(int j) const { return entry(dimension(), j); }

    bool is_constant(double tol = 1e-14) const;

    const std::optional<EllipticityEstimate>& ellipticity() const { return ellipticity_; }
    std::optional<double> lipschitz() const { return lipschitz_; }
    /// Copy carrying validation metadata. Throws EllipticityError.
    CoefficientField validated(std::size_t samples = 256, std::uint64_t seed = 0) const;

private:
    CoefficientField(TorusGrid grid) : grid_(grid) {}

    TorusGrid grid_;
    std::string description_;
    std::vector<std::vector<cplx>> nodal_;
    std::vector<std::vector<std::vector<cplx>>> staggered_;  // [axis][entry]
    std::optional<EllipticityEstimate> ellipticity_;
    std::optional<double> lipschitz_;

    friend CoefficientField adjoint(const CoefficientField&);
    friend CoefficientField transform_entries(
        const CoefficientField&, const std::function<Eigen::MatrixXcd(const Eigen::MatrixXcd&)>&,
        std::string);
};

/// Exact nu1 / nu2 from eigen and singular values plus a sampled cross-check.
/// Requires samples >= 100. Throws EllipticityError with a witness if nu1 <= 0.
EllipticityEstimate validate(const CoefficientField& a, std::size_t samples = 256,
                             std::uint64_t seed = 0);

/// Sum over entries of the max forward-difference slope.
double lipschitz_estimate(const CoefficientField& a);

/// Pointwise conjugate transpose.
CoefficientField adjoint(const CoefficientField& a);

/// Applies a pointwise matrix map to nodal and staggered samples.
CoefficientField transform_entries(
    const CoefficientField& a, const std::function<Eigen::MatrixXcd(const Eigen::MatrixXcd&)>& f,
    std::string description);

/// Pointwise closure matrices whose principal roots reproduce lambda_A and q_A.
Eigen::MatrixXcd closure_m(const Eigen::MatrixXcd& a);
Eigen::MatrixXcd closure_n(const Eigen::MatrixXcd& a);

struct ClosurePair {
    CoefficientField m;
    CoefficientField n;
};
/// Both matrices validated; ellipticity failures propagate.
ClosurePair phi_closure_matrices(const CoefficientField& a);

/// Divergence of the last column, sum_j d_j a_{j,d} (spectral).
std::vector<cplx> r1_divergence(const CoefficientField& a);
/// a'_j = sum_k d_k a_{kj} over the horizontal block (spectral).
std::vector<std::vector<cplx>> aprime_divergence(const CoefficientField& a);

enum class FamilyTag { constant, block, hermitian, general, expressions };

std::string to_string(FamilyTag tag);
FamilyTag parse_family_tag(const std::string& s);

/// Builtin families: c0 + sum of cos/sin(2 pi m x_axis / period) terms with an
/// amplitude budget that keeps nu1 >= 0.2 by construction.
struct CoefficientFamily {
    FamilyTag tag = FamilyTag::constant;
    int dimension = 1;
    double period = 2.0 * pi;
    std::uint64_t seed = 1;
    double amplitude = 0.5;  // fraction of the admissible budget, in (0, 1]
    int max_mode = 2;
    int terms = 2;
    std::optional<Eigen::MatrixXcd> base;
    std::map<std::string, std::string> expressions;  // "a11", "a12", ... (1-based)

    CoefficientFunction function() const;
};

Eigen::MatrixXcd default_base(FamilyTag tag, int dimension);
/// Samples and validates.
CoefficientField build_field(const CoefficientFamily& family, const TorusGrid& grid);

}  // namespace dncalc
