#pragma once

#include <functional>
#include <memory>

#include "brokenline/grid.hpp"

namespace brokenline {

/// Dense symmetric eigendecomposition of the discrete weighted Laplacian
/// with Dirichlet rows at +-L removed; the independent ground truth for
/// every functional-calculus quadrature.
///
/// The operator M^{-1}S is symmetrized as T = M^{-1/2} S M^{-1/2}; its
/// eigenvectors pulled back by M^{-1/2} are orthonormal for the weighted
/// inner product.
class SpectralOracle {
public:
    /// Dense solve; rejects grids above max_size total nodes.
    static std::shared_ptr<const SpectralOracle> build(const GridPtr& grid, int max_size = 10000);

    const GridPtr& grid() const { return grid_; }
    int modes() const { return static_cast<int>(theta_.size()); }
    /// Ascending eigenvalues, clamped to [0, inf); a clamp beyond -1e-10 throws.
    const std::vector<double>& eigenvalues() const { return theta_; }
    /// k-th eigenfunction, orthonormal under the weighted inner product.
    GridFunction eigenfunction(int k) const;

    /// Apply fn(Delta_d) through the eigenbasis.
    GridFunction apply_function(const GridFunction& f, const std::function<double(double)>& fn) const;

    GridFunction sqrt_apply(const GridFunction& f) const;
    GridFunction inv_sqrt_apply(const GridFunction& f) const;
    /// (Delta_d + lambda^2)^{-1} f via the eigenbasis.
    GridFunction resolvent_apply(const GridFunction& f, double lambda) const;

    /// max_k |T q_k - theta_k q_k| / theta_max over sampled eigenpairs.
    double reconstruction_residual() const { return residual_; }

private:
    SpectralOracle() = default;
    GridPtr grid_;
    std::vector<double> theta_;
    // dense storage of eigenvectors in the symmetrized basis, column major
    std::vector<double> q_;
    std::vector<double> sqw_; // sqrt(node weight) on interior nodes
    double residual_ = 0;
};

using SpectralOraclePtr = std::shared_ptr<const SpectralOracle>;

SpectralOraclePtr build_spectral_oracle(const GridPtr& grid, int max_size = 10000);

} // namespace brokenline
