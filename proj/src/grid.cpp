#include "brokenline/grid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>

namespace brokenline {

namespace {

std::atomic<std::uint64_t> g_next_grid_id{1};

// Exact measure of one cell: int_a^b rho^{d-1} drho = (b^d - a^d)/d,
// evaluated in a cancellation-friendly form for narrow cells.
double cell_mu(double a, double b, double d) {
    // b^d - a^d = a^d * expm1(d*log(b/a))
    return std::pow(a, d) * std::expm1(d * std::log(b / a)) / d;
}

} // namespace

std::shared_ptr<const Grid> Grid::build(Dimension dim, double L, int n, Spacing spacing,
                                        double spacing_ratio) {
    const double d = dim.value();
    if (!std::isfinite(L) || !(L > 1.0)) throw ValidationError("build_grid: L must exceed 1");
    if (n < 64) throw ValidationError("build_grid: need at least 64 nodes per branch");
    if (!(spacing_ratio >= 1.0)) throw ValidationError("build_grid: spacing_ratio must be >= 1");

    // Radial node positions on one branch, rho_0 = 1 ... rho_{n-1} = L.
    std::vector<double> rho(n);
    if (spacing == Spacing::Uniform || spacing_ratio == 1.0) {
        for (int k = 0; k < n; ++k) rho[k] = 1.0 + (L - 1.0) * k / (n - 1);
    } else {
        const double q = std::pow(spacing_ratio, 1.0 / (n - 2));
        const double h0 = (L - 1.0) * (q - 1.0) / (std::pow(q, n - 1) - 1.0);
        rho[0] = 1.0;
        double h = h0;
        for (int k = 1; k < n; ++k) {
            rho[k] = rho[k - 1] + h;
            h *= q;
        }
        rho[n - 1] = L; // absorb rounding drift
    }

    auto g = std::shared_ptr<Grid>(new Grid());
    const int N = 2 * n - 1;
    g->d_ = d;
    g->L_ = L;
    g->spacing_ = spacing;
    g->junction_ = n - 1;
    g->t_.resize(N);
    g->absr_.resize(N);
    g->sign_.resize(N);
    for (int i = 0; i < N; ++i) {
        if (i < n - 1) { // negative branch, outermost first
            g->t_[i] = -(rho[n - 1 - i] - 1.0);
            g->absr_[i] = rho[n - 1 - i];
            g->sign_[i] = -1;
        } else if (i == n - 1) {
            g->t_[i] = 0.0;
            g->absr_[i] = 1.0;
            g->sign_[i] = 0;
        } else {
            g->t_[i] = rho[i - (n - 1)] - 1.0;
            g->absr_[i] = rho[i - (n - 1)];
            g->sign_[i] = +1;
        }
    }

    g->cellh_.resize(N - 1);
    g->cellw_.resize(N - 1);
    g->hmin_ = 1e300;
    g->hmax_ = 0.0;
    for (int c = 0; c < N - 1; ++c) {
        const double h = g->t_[c + 1] - g->t_[c];
        const double a = std::min(g->absr_[c], g->absr_[c + 1]);
        const double b = std::max(g->absr_[c], g->absr_[c + 1]);
        g->cellh_[c] = h;
        g->cellw_[c] = cell_mu(a, b, d);
        g->hmin_ = std::min(g->hmin_, h);
        g->hmax_ = std::max(g->hmax_, h);
        if (!(h > 0.0)) throw NumericalError("build_grid: node ordering degenerate");
    }

    g->w_.assign(N, 0.0);
    for (int c = 0; c < N - 1; ++c) {
        g->w_[c] += 0.5 * g->cellw_[c];
        g->w_[c + 1] += 0.5 * g->cellw_[c];
    }
    g->id_ = g_next_grid_id.fetch_add(1);
    return g;
}

GridPtr build_grid(Dimension d, double L, int n, Spacing spacing, double spacing_ratio) {
    return Grid::build(d, L, n, spacing, spacing_ratio);
}

GridFunction::GridFunction(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw ValidationError("GridFunction: null grid");
    if (static_cast<int>(values_.size()) != grid_->size())
        throw ValidationError("GridFunction: value count does not match grid");
    for (double v : values_)
        if (!std::isfinite(v)) throw ValidationError("GridFunction: non-finite value");
}

GridFunction::GridFunction(GridPtr grid) : grid_(std::move(grid)) {
    if (!grid_) throw ValidationError("GridFunction: null grid");
    values_.assign(grid_->size(), 0.0);
}

bool GridFunction::in_s0(double tol) const {
    return std::abs(values_[grid_->junction_index()]) <= tol;
}

double weighted_lp_norm(const GridFunction& f, double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw ValidationError("weighted_lp_norm: p must be in [1, inf)");
    const auto& w = f.grid()->weights();
    double s = 0.0;
    for (int i = 0; i < f.size(); ++i) s += w[i] * std::pow(std::abs(f[i]), p);
    return std::pow(s, 1.0 / p);
}

double weighted_dot(const GridFunction& f, const GridFunction& g) {
    const auto& w = f.grid()->weights();
    double s = 0.0;
    for (int i = 0; i < f.size(); ++i) s += w[i] * f[i] * g[i];
    return s;
}

GridFunction derivative(const GridFunction& f) {
    const Grid& g = *f.grid();
    const auto& t = g.glued();
    const int N = g.size();
    GridFunction out(f.grid());
    for (int i = 1; i < N - 1; ++i) {
        const double dl = t[i] - t[i - 1], dr = t[i + 1] - t[i];
        out[i] = -dr / (dl * (dl + dr)) * f[i - 1] + (dr - dl) / (dl * dr) * f[i] +
                 dl / (dr * (dl + dr)) * f[i + 1];
    }
    {
        const double h0 = t[1] - t[0], h1 = t[2] - t[1];
        out[0] = -(2 * h0 + h1) / (h0 * (h0 + h1)) * f[0] + (h0 + h1) / (h0 * h1) * f[1] -
                 h0 / (h1 * (h0 + h1)) * f[2];
        const double g1 = t[N - 1] - t[N - 2], g2 = t[N - 2] - t[N - 3];
        out[N - 1] = (2 * g1 + g2) / (g1 * (g1 + g2)) * f[N - 1] - (g1 + g2) / (g1 * g2) * f[N - 2] +
                     g1 / (g2 * (g1 + g2)) * f[N - 3];
    }
    return out;
}

GridFunction apply_laplacian(const GridFunction& f) {
    const Grid& g = *f.grid();
    const auto& W = g.cell_measure();
    const auto& h = g.cell_width();
    const auto& w = g.weights();
    const int N = g.size();
    GridFunction out(f.grid());
    // (Sf)_i / w_i with tridiagonal stiffness S_{i,i+1} = -W_c/h_c^2.
    for (int i = 0; i < N; ++i) {
        double s = 0.0;
        if (i > 0) s += W[i - 1] / (h[i - 1] * h[i - 1]) * (f[i] - f[i - 1]);
        if (i < N - 1) s += W[i] / (h[i] * h[i]) * (f[i] - f[i + 1]);
        out[i] = s / w[i];
    }
    return out;
}

double energy_pairing(const GridFunction& f, const GridFunction& g) {
    const Grid& grid = *f.grid();
    const auto& W = grid.cell_measure();
    const auto& h = grid.cell_width();
    double s = 0.0;
    for (int c = 0; c < grid.size() - 1; ++c)
        s += W[c] * (f[c + 1] - f[c]) * (g[c + 1] - g[c]) / (h[c] * h[c]);
    return s;
}

GridFunction solve_shifted(const GridFunction& f, double lambda_sq) {
    const Grid& g = *f.grid();
    const auto& W = g.cell_measure();
    const auto& h = g.cell_width();
    const auto& w = g.weights();
    const int N = g.size();
    if (N < 3) throw ValidationError("solve_shifted: grid too small");
    // Interior tridiagonal system (S + lambda^2 M) u = M f, u(+-L) = 0.
    const int m = N - 2;
    std::vector<double> diag(m), lower(m - 1), rhs(m);
    for (int k = 0; k < m; ++k) {
        const int i = k + 1;
        diag[k] = W[i - 1] / (h[i - 1] * h[i - 1]) + W[i] / (h[i] * h[i]) + lambda_sq * w[i];
        rhs[k] = w[i] * f[i];
        if (k < m - 1) lower[k] = -W[i] / (h[i] * h[i]);
    }
    // Thomas elimination; the matrix is SPD so no pivoting is needed.
    for (int k = 1; k < m; ++k) {
        const double l = lower[k - 1] / diag[k - 1];
        diag[k] -= l * lower[k - 1];
        rhs[k] -= l * rhs[k - 1];
    }
    GridFunction out(f.grid());
    out[N - 2] = rhs[m - 1] / diag[m - 1];
    for (int k = m - 2; k >= 0; --k) out[k + 1] = (rhs[k] - lower[k] * out[k + 2]) / diag[k];
    out[0] = out[N - 1] = 0.0;
    return out;
}

double laplacian_spectral_bound(const Grid& g) {
    const auto& W = g.cell_measure();
    const auto& h = g.cell_width();
    const auto& w = g.weights();
    double bound = 0.0;
    for (int i = 0; i < g.size(); ++i) {
        double row = 0.0;
        if (i > 0) row += 2.0 * W[i - 1] / (h[i - 1] * h[i - 1]);
        if (i < g.size() - 1) row += 2.0 * W[i] / (h[i] * h[i]);
        bound = std::max(bound, row / w[i]);
    }
    return bound;
}

double bump_profile(double t) {
    if (!(std::abs(t) < 1.0)) return 0.0;
    return std::exp(1.0 / (t * t - 1.0));
}

namespace {

double smoothstep(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return u * u * (3.0 - 2.0 * u);
}

double stress_profile(double x, double n) {
    if (x <= 1.0 || x >= 2.0 * n) return 0.0;
    if (x < 2.0) return smoothstep(x - 1.0);
    if (x <= n) return 1.0;
    return std::log(2.0 * n / x) / std::log(2.0);
}

// Require at least one node strictly outside [lo,hi] on each side within
// the same branch region; realizes the "margin >= one node spacing" rule.
void check_support_margin(const Grid& g, double lo, double hi, const std::string& who) {
    if (!(hi <= g.truncation()) || !(lo >= -g.truncation()))
        throw ValidationError(who + ": support [" + std::to_string(lo) + ", " + std::to_string(hi) +
                              "] overflows the grid (L = " + std::to_string(g.truncation()) + ")");
    bool margin_lo = false, margin_hi = false;
    for (int i = 0; i < g.size(); ++i) {
        const double x = g.coordinate(i);
        if (x < lo) margin_lo = true;
        if (x > hi) margin_hi = true;
    }
    if (!margin_lo || !margin_hi)
        throw ValidationError(who + ": support touches the grid boundary, no margin left");
}

} // namespace

TestFamily make_family(const std::string& name, const GridPtr& grid,
                       const std::vector<std::pair<double, double>>& parameters) {
    if (parameters.empty()) throw ValidationError("make_family: empty parameter list");
    TestFamily fam;
    fam.name = name;
    fam.parameters = parameters;
    const Grid& g = *grid;
    for (auto [c, s] : parameters) {
        GridFunction f(grid);
        if (name == "dilate") {
            if (!(s > 0.0)) throw ValidationError("make_family: dilate scale must be positive");
            check_support_margin(g, c - s, c + s, "dilate member");
            if (!(c - s > 1.0)) throw ValidationError("dilate member: support must stay off the junction");
            for (int i = 0; i < g.size(); ++i)
                if (g.branch()[i] > 0) f[i] = bump_profile((g.radius()[i] - c) / s);
        } else if (name == "straddle") {
            if (!(s > 0.0)) throw ValidationError("make_family: straddle scale must be positive");
            check_support_margin(g, -(1.0 + s), 1.0 + s, "straddle member");
            for (int i = 0; i < g.size(); ++i) {
                const double u = g.glued()[i] / s;
                f[i] = u * bump_profile(u);
            }
        } else if (name == "hardy_stress") {
            if (!(c >= 2.0)) throw ValidationError("make_family: hardy_stress needs plateau end >= 2");
            check_support_margin(g, -2.0 * c, 2.0 * c, "hardy_stress member");
            for (int i = 0; i < g.size(); ++i) f[i] = stress_profile(g.radius()[i], c);
        } else if (name == "obstruction") {
            // power-profile stressor |y|^{alpha} with a smooth entry ramp on
            // [1,2] and exit on [c, 2c]; positive branch only.  The scale
            // parameter is the exponent alpha (0 selects the kernel profile
            // 1-d); alpha = -d/p makes the member L^p-critical.
            if (!(c >= 2.0)) throw ValidationError("make_family: obstruction needs cutoff >= 2");
            check_support_margin(g, -2.0 * c, 2.0 * c, "obstruction member");
            const double alpha = s == 0.0 ? 1.0 - grid->dimension() : s;
            for (int i = 0; i < g.size(); ++i) {
                if (g.branch()[i] <= 0) continue;
                const double x = g.radius()[i];
                if (x >= 2.0 * c) continue;
                const double ramp = smoothstep(x - 1.0) * smoothstep((2.0 * c - x) / c);
                f[i] = ramp * std::pow(x, alpha);
            }
        } else if (name == "harmonic_tail") {
            // truncated odd harmonic sgn(x) H_d(|x|): vanishes at the
            // junction with matched flux, exactly harmonic inside the cut,
            // smoothly brought to zero on [c, 2c].  The canonical witness
            // for the one-sided failure of the Riesz inequality.
            if (!(c >= 2.0)) throw ValidationError("make_family: harmonic_tail needs cutoff >= 2");
            check_support_margin(g, -2.0 * c, 2.0 * c, "harmonic_tail member");
            const double d = grid->dimension();
            auto hd = [d](double x) {
                if (std::abs(d - 2.0) < 1e-12) return std::log(x);
                return (std::pow(x, 2.0 - d) - 1.0) / (2.0 - d);
            };
            for (int i = 0; i < g.size(); ++i) {
                const int sgn = g.branch()[i];
                if (sgn == 0) continue;
                const double x = g.radius()[i];
                if (x >= 2.0 * c) continue;
                f[i] = sgn * hd(x) * smoothstep((2.0 * c - x) / c);
            }
        } else {
            throw ValidationError("make_family: unknown family '" + name + "'");
        }
        fam.members.push_back(std::move(f));
    }
    return fam;
}

TestFamily default_s0_family(const GridPtr& grid) {
    const double L = grid->truncation();
    // keep the dilates well inside the truncated domain: the Dirichlet end
    // must sit far beyond the support so resolvent tails die out first
    std::vector<std::pair<double, double>> dil;
    for (double c = 4.0; 1.25 * c <= 0.4 * L; c *= 2.0) {
        dil.emplace_back(c, c / 4.0);
        if (dil.size() == 4) break;
    }
    if (dil.empty()) dil.emplace_back(0.3 * L, 0.075 * L);
    TestFamily fam = make_family("dilate", grid, dil);
    TestFamily str = make_family("straddle", grid, {{0.0, 1.0}, {0.0, 2.0}});
    fam.name = "default_s0";
    for (std::size_t i = 0; i < str.members.size(); ++i) {
        fam.parameters.push_back(str.parameters[i]);
        fam.members.push_back(std::move(str.members[i]));
    }
    return fam;
}

} // namespace brokenline
