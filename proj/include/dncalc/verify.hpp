#pragma once

#include "dncalc/coeff.hpp"
#include "dncalc/grid.hpp"
#include "dncalc/psdo.hpp"
#include "dncalc/report.hpp"
#include "dncalc/solver.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dncalc {

/// Random band-limited functions c_k ~ (1 + |k|)^{-decay} N(0, 1) + i N(0, 1), |k| <= band,
/// scaled to unit H^sobolev norm. Members are defined by their Fourier coefficients, so
/// the same member realized on two grids is the same trigonometric polynomial.
struct EnsembleSpec {
    std::uint64_t seed = 1;
    int count = 16;
    int band = 32;
    double decay = 3.0;
    double sobolev = 1.0;
    bool zero_mean = false;
};

class Ensemble {
public:
    explicit Ensemble(EnsembleSpec spec);
    const EnsembleSpec& spec() const { return spec_; }
    std::size_t size() const { return coefficients_.size(); }
    /// Grid must resolve the band (band < N/2). d = 1 only.
    GridFunction realize(std::size_t member, const TorusGrid& grid) const;
    std::vector<GridFunction> realize_all(const TorusGrid& grid) const;
    std::map<std::string, double> descriptor() const;

private:
    EnsembleSpec spec_;
    std::vector<std::vector<cplx>> coefficients_;  // [member][k + band]
};

/// e^{ikx} / sqrt(L), unit L^2 norm.
GridFunction unit_mode(const TorusGrid& grid, int k);

struct VerifySettings {
    CoefficientFamily family;
    double length = 2.0 * pi;
    int points = 256;
    double height = 0.0;  // 0 selects 4 L
    int levels = 0;       // 0 selects dt = h
    std::uint64_t seed = 1;
    int ensemble = 64;        // members for the domain and norm-equivalence sweeps
    int samples = 16;         // members for the factorization residuals
    int pairs = 8;            // pairs for the form and adjoint checks
    int strip_samples = 4;    // separable products for the strip factorization
    int semigroup_points = 128;
    int phi_points = 64;      // grid of the assembled J_A matrix
    bool refine = false;      // adds a third level 4N
    int kernel_points = 4096;
    double kernel_extent = 32.0;  // kernel torus length in units of L
    std::vector<double> kernel_times{0.25, 0.5, 1.0};
    TraceRule trace = TraceRule::flux;
    TopCondition top = TopCondition::zero_flux;
    SolverBackend backend = SolverBackend::krylov;
    std::map<std::string, double> tolerances;

    double tolerance(const std::string& key, double fallback) const;
    /// N, 2N and with refine 4N.
    std::vector<int> resolutions() const;
    StripOptions strip_options(int points) const;
    int levels_for(int points) const;
};

EstimateReport check_symbol(const VerifySettings& s);
EstimateReport check_phi_closure(const VerifySettings& s);
EstimateReport check_extension_convergence(const VerifySettings& s);
EstimateReport check_factorization_boundary(const VerifySettings& s);
EstimateReport check_factorization_strip(const VerifySettings& s);
EstimateReport check_dn_consistency(const VerifySettings& s);
EstimateReport check_adjoint_relation(const VerifySettings& s);
EstimateReport check_domain_equivalence(const VerifySettings& s, std::vector<double> orders = {0.0, 0.5, 1.0});
EstimateReport check_remainder_bounds(const VerifySettings& s);
EstimateReport check_u1_estimate(const VerifySettings& s);
EstimateReport check_quadratic_estimates(const VerifySettings& s);
EstimateReport check_kernel_decay(const VerifySettings& s);
EstimateReport check_dn_semigroup(const VerifySettings& s);

struct KernelFitRecord {
    double t = 0.0;
    std::size_t node = 0;
    std::string window;  // "far" or "near"
    double ymin = 0.0;
    double ymax = 0.0;
    double slope = 0.0;
    double intercept = 0.0;  // log-envelope = intercept + slope log|y|
};

struct KernelStudy {
    std::vector<KernelSlice> slices;  // one per time, at node 0
    std::vector<KernelFitRecord> fits;
    EstimateReport report;
};

/// Kernel slices of one weight (unit, pi-prime, zeta, q-weight) on the kernel torus with
/// envelope decay fits. Constant fields are also compared with the closed-form Poisson kernel.
KernelStudy kernel_study(const VerifySettings& s, const std::string& weight, std::vector<double> times);

/// Suites: all, symbol, oracle, phi, factorization, dn, domain, remainder, kernel,
/// quadratic, semigroup. Reports come back sorted by name.
std::vector<std::string> suite_names();
std::vector<EstimateReport> run_suite(const std::string& suite, const VerifySettings& s, int jobs = 1);

/// Sector half-angle (degrees) of a spectrum, skipping the eigenvalue closest to 0.
double sector_angle(const Eigen::VectorXcd& eigenvalues);

}  // namespace dncalc
