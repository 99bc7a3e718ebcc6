#include "brokenline/spectral.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace brokenline {

std::shared_ptr<const SpectralOracle> SpectralOracle::build(const GridPtr& grid, int max_size) {
    const int N = grid->size();
    if (N > max_size)
        throw ValidationError("SpectralOracle: grid size " + std::to_string(N) +
                              " exceeds dense-eigensolve cap " + std::to_string(max_size));
    const int m = N - 2; // Dirichlet rows at +-L removed
    const auto& W = grid->cell_measure();
    const auto& h = grid->cell_width();
    const auto& w = grid->weights();

    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int k = 0; k < m; ++k) {
        const int i = k + 1;
        T(k, k) = (W[i - 1] / (h[i - 1] * h[i - 1]) + W[i] / (h[i] * h[i])) / w[i];
        if (k + 1 < m) {
            const double off = -W[i] / (h[i] * h[i]) / std::sqrt(w[i] * w[i + 1]);
            T(k, k + 1) = off;
            T(k + 1, k) = off;
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    if (es.info() != Eigen::Success) throw NumericalError("SpectralOracle: eigensolve failed");

    auto oracle = std::shared_ptr<SpectralOracle>(new SpectralOracle());
    oracle->grid_ = grid;
    oracle->theta_.resize(m);
    for (int k = 0; k < m; ++k) {
        double th = es.eigenvalues()[k];
        if (th < -1e-10) throw NumericalError("SpectralOracle: negative eigenvalue " + std::to_string(th));
        oracle->theta_[k] = th < 0 ? 0.0 : th;
    }
    oracle->q_.resize(static_cast<std::size_t>(m) * m);
    for (int k = 0; k < m; ++k)
        for (int r = 0; r < m; ++r) oracle->q_[static_cast<std::size_t>(k) * m + r] = es.eigenvectors()(r, k);
    oracle->sqw_.resize(m);
    for (int k = 0; k < m; ++k) oracle->sqw_[k] = std::sqrt(w[k + 1]);

    // spot-check the factorization on a spread of eigenpairs
    const double tmax = oracle->theta_.back() > 0 ? oracle->theta_.back() : 1.0;
    double worst = 0.0;
    for (int k : {0, m / 4, m / 2, (3 * m) / 4, m - 1}) {
        Eigen::VectorXd qk(m);
        for (int r = 0; r < m; ++r) qk[r] = oracle->q_[static_cast<std::size_t>(k) * m + r];
        worst = std::max(worst, (T * qk - oracle->theta_[k] * qk).norm() / tmax);
    }
    oracle->residual_ = worst;
    if (worst > 1e-8) throw NumericalError("SpectralOracle: reconstruction residual above 1e-8");
    return oracle;
}

GridFunction SpectralOracle::eigenfunction(int k) const {
    const int m = modes();
    if (k < 0 || k >= m) throw ValidationError("SpectralOracle: eigenfunction index out of range");
    GridFunction out(grid_);
    for (int r = 0; r < m; ++r) out[r + 1] = q_[static_cast<std::size_t>(k) * m + r] / sqw_[r];
    return out;
}

GridFunction SpectralOracle::apply_function(const GridFunction& f,
                                            const std::function<double(double)>& fn) const {
    if (f.grid()->id() != grid_->id()) throw ValidationError("SpectralOracle: grid mismatch");
    const int m = modes();
    // y = M^{1/2} f restricted to the interior
    std::vector<double> y(m);
    for (int r = 0; r < m; ++r) y[r] = f[r + 1] * sqw_[r];
    // c = Q^T y, scaled, mapped back
    std::vector<double> out(m, 0.0);
    for (int k = 0; k < m; ++k) {
        const double* qk = &q_[static_cast<std::size_t>(k) * m];
        double c = 0.0;
        for (int r = 0; r < m; ++r) c += qk[r] * y[r];
        c *= fn(theta_[k]);
        if (c == 0.0) continue;
        for (int r = 0; r < m; ++r) out[r] += c * qk[r];
    }
    GridFunction g(grid_);
    for (int r = 0; r < m; ++r) g[r + 1] = out[r] / sqw_[r];
    return g;
}

GridFunction SpectralOracle::sqrt_apply(const GridFunction& f) const {
    return apply_function(f, [](double th) { return std::sqrt(th); });
}

GridFunction SpectralOracle::inv_sqrt_apply(const GridFunction& f) const {
    return apply_function(f, [](double th) { return th > 0 ? 1.0 / std::sqrt(th) : 0.0; });
}

GridFunction SpectralOracle::resolvent_apply(const GridFunction& f, double lambda) const {
    const double l2 = lambda * lambda;
    return apply_function(f, [l2](double th) { return 1.0 / (th + l2); });
}

SpectralOraclePtr build_spectral_oracle(const GridPtr& grid, int max_size) {
    return SpectralOracle::build(grid, max_size);
}

} // namespace brokenline
