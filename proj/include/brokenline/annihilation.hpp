#pragma once

#include <utility>
#include <vector>

#include "brokenline/grid.hpp"
#include "brokenline/resolvent.hpp"

namespace brokenline {

/// Geometric epsilon ladder for the zero-energy limit
/// u = lim (Delta_d + eps^2)^{-1} k_lambda.
struct EpsilonSequence {
    double base = 0.1;
    double ratio = 0.5;
    int count = 8;
    /// Median increment-ratio at or above which the ladder is declared
    /// non-Cauchy (an error for d > 2).
    double noncauchy_ratio = 0.95;
};

/// Which resolvent realizes the limit: tridiagonal solves of the discrete
/// operator (default: exact for the discrete Laplacian, so downstream
/// identities hold to truncation order) or the explicit Bessel kernel.
enum class CorrectorRoute { Discrete, Kernel };

struct CorrectorField {
    double d = 0, lambda = 0;
    GridFunction u;      // extrapolated limit
    GridFunction grad_u; // discrete derivative of u
    /// ||(Delta + eps^2) u_eps - k_lambda||_2 / ||k_lambda||_2 at the
    /// smallest eps, over interior nodes.
    double residual = 0;
    /// Ratios ||u_{j+2}-u_{j+1}|| / ||u_{j+1}-u_j|| along the ladder.
    std::vector<double> increment_ratios;
    /// Tagged for d <= 2, where the continuum limit is log-divergent (d=2)
    /// or the coefficients blow up (d<2); the field is still returned.
    bool limit_unstable = false;
    CorrectorRoute route = CorrectorRoute::Discrete;
};

/// k_lambda(x) = k(lambda |x|) sampled on the grid.
GridFunction k_lambda_function(const GridPtr& grid, double lambda);

/// Build the corrector field.  For d > 2 a non-Cauchy epsilon ladder is a
/// NumericalError; for d <= 2 it downgrades to the limit_unstable tag.
/// The kernel route requires a cache.
CorrectorField build_corrector(const GridPtr& grid, double lambda, const EpsilonSequence& eps,
                               CorrectorRoute route = CorrectorRoute::Discrete,
                               ResolventCache* cache = nullptr);

struct AnnihilationResult {
    double defect = 0;    // |<f', Phi'>| / (||f'||_2 ||Phi'||_2 + floor)
    double pairing = 0;   // <f', Phi'> through the stiffness form
    double f_energy = 0;  // ||f'||_2
    double phi_energy = 0;
    bool limit_unstable = false;
};

/// Test the harmonic-annihilation identity: with Phi = k_lambda + lambda^2 u,
/// the energy pairing <f', Phi'> vanishes for f in S_0.  The pairing is the
/// exact P1 stiffness form, so for f vanishing at the junction the junction
/// flux jump of k_lambda drops out identically and only truncation error
/// remains.
AnnihilationResult annihilation_check(const GridFunction& f, double lambda,
                                      const EpsilonSequence& eps = {}, double floor = 1e-14);

/// f plus a smooth plateau of height c at the junction; the result leaves
/// S_0 and exposes the boundary term the identity depends on.
GridFunction perturb_at_junction(const GridFunction& f, double height, double width);

struct GradientBoundProbe {
    double d = 0, delta = 0, lambda = 0;
    double fitted_constant = 0; // 95th-percentile ratio |grad u| / envelope
    double max_ratio = 0;
    const char* branch = "";    // which envelope branch governed
};

/// Probe the corrector-gradient envelopes over sampled (x, lambda):
/// |grad u| <= C lambda^{1-d-delta} x^{2-d-delta} for d >= 3 (0<=delta<=1),
/// with the lambda^{-2} branch for 2<d<3, delta <= 3-d.  Returns one probe
/// per delta with the fitted comparability constant.
std::vector<GradientBoundProbe> gradient_bound_probe(const GridPtr& grid,
                                                     const std::vector<double>& deltas,
                                                     const std::vector<double>& lambdas,
                                                     const EpsilonSequence& eps = {},
                                                     double percentile = 0.95);

/// Low-energy kk bilinear form
///   B(f,g) = int f'(x) int_0^1 d/dx[k(lambda|x|)] (int k(lambda|y|) g dmu)
///            F(lambda) dlambda dmu(x)
/// with F = A or B by branch pairing.  blocks_min_lambda floors the dyadic
/// ladder in lambda.
double bilinear_low_energy_kk(const GridFunction& f, const GridFunction& g,
                              double blocks_min_lambda = 1e-8);

/// The same triple integral with the x-integration deferred: returns
/// R(x) = int_0^1 d/dx[k(lambda|x|)] (int k g dmu) F(lambda) dlambda, so that
/// <f', R>_mu reproduces bilinear_low_energy_kk by reordering the same sums.
GridFunction low_energy_kk_gradient(const GridFunction& g, double blocks_min_lambda = 1e-8);

struct TOperatorResult {
    GridFunction th;
    double q = 0, qprime = 0;
    double fitted_constant = 0; // 95th-percentile of |Th(x)| / envelope(x)
    double max_ratio = 0;
};

/// The weighted low-energy operator behind the Hardy-route estimates,
///   T h = |x| int_0^1 lambda^2 F(lambda) k(lambda|x|) (int k(lambda|y|) h dmu) dlambda,
/// with the companion pointwise-bound fit against |x|^{2-d-d/q'} (d > 2) or
/// |x|^{-d/q'} (d <= 2).
TOperatorResult t_operator(const GridFunction& h, double q, double blocks_min_lambda = 1e-8,
                           double percentile = 0.95);

/// Points (s, s^{qprime} mu{|Th| > s}) with s taken from |Th| sampled at
/// log-spaced radii; flat profiles witness the weak-type bound.
std::vector<std::pair<double, double>> weak_type_profile(const GridFunction& th, double qprime,
                                                         int levels = 40);

/// ||f / |x| ||_p / ||f'||_p; rejects zero-derivative input.
double hardy_ratio(const GridFunction& f, double p);

} // namespace brokenline
