#pragma once

#include <memory>
#include <string>
#include <vector>

#include "brokenline/errors.hpp"

namespace brokenline {

/// Dimension parameter d of the weighted measure |r|^{d-1} dr.  The whole
/// model assumes d > 1; d need not be an integer.
class Dimension {
public:
    explicit Dimension(double d) : d_(d) {
        if (!(d > 1.0)) throw ValidationError("Dimension: require d > 1, got " + std::to_string(d));
    }
    double value() const { return d_; }
    /// Order |d/2 - 1| of the decaying Bessel solution.
    double nu() const { return d_ / 2.0 - 1.0 < 0 ? 1.0 - d_ / 2.0 : d_ / 2.0 - 1.0; }
    /// Signed order d/2 - 1 of the growing Bessel solution (negative for d < 2).
    double mu() const { return d_ / 2.0 - 1.0; }

private:
    double d_;
};

enum class Spacing { Uniform, Geometric };

/// Discretization of the broken line (-inf,-1] u [1,inf) truncated to
/// [-L,-1] u [1,L], with -1 and +1 identified as one shared junction node.
///
/// Internally the two branches are glued into a single path coordinate
/// t = |r| - 1 signed by branch, so the junction is an ordinary interior
/// node and the discrete Laplacian is tridiagonal.  Node quadrature
/// weights are trapezoid weights against the exact cell measure
/// int |r|^{d-1} dr, so the weights sum to mu([-L,-1] u [1,L]) exactly.
class Grid {
public:
    /// nodes_per_branch >= 64; L > 1.  Geometric spacing concentrates
    /// nodes at the junction with spacing at |r|=L at most spacing_ratio
    /// times the junction spacing.
    static std::shared_ptr<const Grid> build(Dimension d, double L, int nodes_per_branch,
                                             Spacing spacing, double spacing_ratio = 10.0);

    double dimension() const { return d_; }
    double truncation() const { return L_; }
    Spacing spacing() const { return spacing_; }

    /// Total degrees of freedom, 2*nodes_per_branch - 1.
    int size() const { return static_cast<int>(t_.size()); }
    int junction_index() const { return junction_; }

    /// Glued path coordinate, strictly increasing, zero at the junction.
    const std::vector<double>& glued() const { return t_; }
    /// Radial coordinate |r| = 1 + |t| per node.
    const std::vector<double>& radius() const { return absr_; }
    /// Branch sign: -1 on the negative branch, +1 on the positive, 0 at the junction.
    const std::vector<int>& branch() const { return sign_; }
    /// Signed coordinate r (the junction reports +1).
    double coordinate(int i) const { return sign_[i] < 0 ? -absr_[i] : absr_[i]; }

    /// Quadrature weight of node i for the measure |r|^{d-1} dr.
    const std::vector<double>& weights() const { return w_; }
    /// Exact measure of cell c (between nodes c and c+1).
    const std::vector<double>& cell_measure() const { return cellw_; }
    /// Width of cell c in the glued coordinate.
    const std::vector<double>& cell_width() const { return cellh_; }

    double min_spacing() const { return hmin_; }
    double max_spacing() const { return hmax_; }

    /// Stable identifier used as a cache key.
    std::uint64_t id() const { return id_; }

private:
    Grid() = default;
    double d_ = 0, L_ = 0;
    Spacing spacing_ = Spacing::Geometric;
    int junction_ = 0;
    std::vector<double> t_, absr_, w_, cellw_, cellh_;
    std::vector<int> sign_;
    double hmin_ = 0, hmax_ = 0;
    std::uint64_t id_ = 0;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Real values on the nodes of a Grid; the computational stand-in for a
/// function on the broken line.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(GridPtr grid, std::vector<double> values);
    /// Zero function on the given grid.
    explicit GridFunction(GridPtr grid);

    const GridPtr& grid() const { return grid_; }
    int size() const { return static_cast<int>(values_.size()); }
    double operator[](int i) const { return values_[i]; }
    double& operator[](int i) { return values_[i]; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    /// Membership test for S_0: vanishing value at the shared junction node.
    bool in_s0(double tol = 0.0) const;

private:
    GridPtr grid_;
    std::vector<double> values_;
};

GridPtr build_grid(Dimension d, double L, int nodes_per_branch, Spacing spacing,
                   double spacing_ratio = 10.0);

/// (sum_i w_i |f_i|^p)^{1/p}; p in [1, inf).
double weighted_lp_norm(const GridFunction& f, double p);

/// Weighted inner product sum_i w_i f_i g_i.
double weighted_dot(const GridFunction& f, const GridFunction& g);

/// Second-order difference derivative: three-point central stencil in the
/// interior (at the junction this averages the two branch one-sided
/// derivatives with spacing weights), one-sided at +-L.
GridFunction derivative(const GridFunction& f);

/// Discrete weighted Laplacian -f'' - (d-1)/|r| f', assembled from the P1
/// stiffness form so it is exactly symmetric for the weighted inner
/// product; the junction row is the usual interior row of the glued path
/// and enforces flux continuity.
GridFunction apply_laplacian(const GridFunction& f);

/// Stiffness (energy) pairing  sum_cells W_c (df)(dg)/h^2 = <f', g'>_mu
/// evaluated exactly on the P1 interpolants.  Equals <apply_laplacian(f), g>_mu.
double energy_pairing(const GridFunction& f, const GridFunction& g);

/// Tridiagonal solve of (Delta_d + lambda^2) u = f with Dirichlet ends.
GridFunction solve_shifted(const GridFunction& f, double lambda_sq);

/// Gershgorin upper bound for the largest eigenvalue of the discrete Laplacian.
double laplacian_spectral_bound(const Grid& grid);

/// Smooth compactly supported test families, all members in S_0.
struct TestFamily {
    std::string name;                                  // dilate | straddle | hardy_stress
    std::vector<std::pair<double, double>> parameters; // (center, scale) per member
    std::vector<GridFunction> members;
};

/// Build a named family on the grid.  Supported names:
///  - "dilate": bumps psi((|x|-c)/s) on the positive branch, marching outward;
///  - "straddle": odd bumps crossing the junction, zero at +-1;
///  - "hardy_stress": plateau ~1 on 2<=|x|<=n with a smooth entry ramp on
///    [1,2] and a logarithmic exit ramp on [n,2n]  (center = n).
/// Throws ValidationError when a member's support does not fit inside the
/// grid with at least one node spacing of margin.
TestFamily make_family(const std::string& name, const GridPtr& grid,
                       const std::vector<std::pair<double, double>>& parameters);

/// The default S_0 family used by the verification suites: four dilates
/// and two junction straddlers sized to the grid.
TestFamily default_s0_family(const GridPtr& grid);

/// The standard mollifier profile exp(1/(t^2-1)) on (-1,1), zero outside.
double bump_profile(double t);

} // namespace brokenline
