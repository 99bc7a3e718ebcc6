#pragma once

#include <utility>
#include <vector>

#include "brokenline/grid.hpp"
#include "brokenline/resolvent.hpp"

namespace brokenline {

/// Lambda-quadrature layout for the resolvent functional calculus:
/// dyadic blocks anchored at lambda_switch covering (0, lambda_max], each
/// integrated by Gauss rules that double until the block stabilizes, plus
/// a closed [0, lambda_min] stub and an analytic operator tail beyond
/// lambda_max.  Below lambda_switch the resolvent is applied through the
/// explicit Bessel kernel; above it (and below the assembly floor) through
/// the tridiagonal solve of the same discrete operator.
struct QuadratureScheme {
    double lambda_min = 1e-6;
    double lambda_switch = 1.0;
    double lambda_max = 0.0;       // 0 = auto from the spectral bound
    double lambda_max_factor = 10; // auto lambda_max = factor * sqrt(bound)
    /// The kernel is the infinite-line object; below lambda ~ 1/(L - reach)
    /// it parts company with the Dirichlet-truncated operator, so blocks
    /// under kernel_min_factor / L are integrated through the solves.  The
    /// path is chosen per block, never inside one.
    double kernel_min_factor = 8.0;
    int gauss_points = 16;
    int max_doublings = 4;
    double rel_tol = 1e-6;
    int tail_terms = 3;
    bool extend_to_zero = true;
};

struct QuadBlock {
    double lo = 0, hi = 0;
    int points = 0;
    double contribution = 0; // weighted L2 norm of the block integral
};

struct QuadratureReport {
    std::vector<QuadBlock> blocks;
    double tail_norm = 0;
    double lambda_max = 0;
    bool converged = true;
    long kernel_evals = 0; // integrand evaluations on the kernel path
    long solve_evals = 0;  // integrand evaluations on the tridiagonal path
};

/// Dyadic block boundaries for the scheme on (0, lambda_max]; resolved
/// lambda_max included in .second.
std::pair<std::vector<std::pair<double, double>>, double>
quadrature_blocks(const QuadratureScheme& scheme, const Grid& grid);

/// Partition the scheme's blocks at lambda0 into (low, high); a block
/// straddling lambda0 is split there.
std::pair<std::vector<std::pair<double, double>>, std::vector<std::pair<double, double>>>
high_low_split(const QuadratureScheme& scheme, const Grid& grid, double lambda0 = 1.0);

/// Delta_d^{1/2} f = (2/pi) int_0^inf [f - lambda^2 (Delta_d+lambda^2)^{-1} f] dlambda,
/// truncated-limit semantics realized by [lambda_min, lambda_max] plus the
/// stub and the analytic tail.  Throws NumericalError when a block fails
/// to stabilize within max_doublings.
GridFunction sqrt_laplacian(const GridFunction& f, const QuadratureScheme& scheme,
                            ResolventCache& cache, Exec exec = Exec::Parallel,
                            QuadratureReport* report = nullptr);

/// Delta_d^{-1/2} f = (2/pi) int_0^inf (Delta_d+lambda^2)^{-1} f dlambda.
GridFunction inv_sqrt_laplacian(const GridFunction& f, const QuadratureScheme& scheme,
                                ResolventCache& cache, Exec exec = Exec::Parallel,
                                QuadratureReport* report = nullptr);

/// Riesz transform: derivative of inv_sqrt_laplacian.
GridFunction riesz_transform(const GridFunction& f, const QuadratureScheme& scheme,
                             ResolventCache& cache, Exec exec = Exec::Parallel,
                             QuadratureReport* report = nullptr);

/// Gauss-Legendre nodes/weights on [-1, 1], cached per order.
const std::pair<std::vector<double>, std::vector<double>>& gauss_rule(int n);

/// Scalar probe of the block-plus-tail layout: evaluates
/// (2/pi) int_0^inf theta/(theta+lambda^2) dlambda, which must equal
/// sqrt(theta); used to validate the scheme in isolation.
double scalar_sqrt_probe(double theta, const QuadratureScheme& scheme, const Grid& grid);

} // namespace brokenline
