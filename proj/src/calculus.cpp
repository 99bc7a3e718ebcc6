#include "brokenline/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace brokenline {

namespace {

constexpr double kPi = 3.141592653589793238462643383279503;

std::mutex g_rule_mutex;
std::map<int, std::pair<std::vector<double>, std::vector<double>>> g_rules;

} // namespace

const std::pair<std::vector<double>, std::vector<double>>& gauss_rule(int n) {
    std::lock_guard<std::mutex> lock(g_rule_mutex);
    auto it = g_rules.find(n);
    if (it != g_rules.end()) return it->second;
    std::vector<double> x(n), w(n);
    // Newton iteration on Legendre P_n from the Chebyshev initial guess.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    return g_rules.emplace(n, std::make_pair(std::move(x), std::move(w))).first->second;
}

std::pair<std::vector<std::pair<double, double>>, double>
quadrature_blocks(const QuadratureScheme& s, const Grid& grid) {
    if (!(s.lambda_min > 0) || !(s.lambda_switch > s.lambda_min))
        throw ValidationError("QuadratureScheme: need 0 < lambda_min < lambda_switch");
    double lmax = s.lambda_max;
    if (lmax <= 0) lmax = s.lambda_max_factor * std::sqrt(laplacian_spectral_bound(grid));
    if (!(lmax > s.lambda_switch)) throw ValidationError("QuadratureScheme: lambda_max too small");

    std::vector<std::pair<double, double>> blocks;
    if (s.extend_to_zero) blocks.emplace_back(0.0, s.lambda_min);
    // dyadic ladder anchored at lambda_switch, descending to lambda_min
    std::vector<std::pair<double, double>> down;
    double hi = s.lambda_switch;
    while (hi > s.lambda_min) {
        const double lo = std::max(hi / 2.0, s.lambda_min);
        down.emplace_back(lo, hi);
        hi = lo;
    }
    for (auto it = down.rbegin(); it != down.rend(); ++it) blocks.push_back(*it);
    // ascending to lambda_max
    double lo = s.lambda_switch;
    while (lo < lmax) {
        const double bhi = std::min(lo * 2.0, lmax);
        blocks.emplace_back(lo, bhi);
        lo = bhi;
    }
    return {blocks, lmax};
}

std::pair<std::vector<std::pair<double, double>>, std::vector<std::pair<double, double>>>
high_low_split(const QuadratureScheme& s, const Grid& grid, double lambda0) {
    auto [blocks, lmax] = quadrature_blocks(s, grid);
    if (!(lambda0 > 0) || !(lambda0 < lmax))
        throw ValidationError("high_low_split: lambda0 must lie inside (0, lambda_max)");
    std::vector<std::pair<double, double>> low, high;
    for (auto [lo, hi] : blocks) {
        if (hi <= lambda0)
            low.emplace_back(lo, hi);
        else if (lo >= lambda0)
            high.emplace_back(lo, hi);
        else {
            low.emplace_back(lo, lambda0);
            high.emplace_back(lambda0, hi);
        }
    }
    return {low, high};
}

namespace {

enum class Integrand { SqrtPart, Resolvent };

// Integrand at one lambda: either (Delta+l^2)^{-1} f or f - l^2 (Delta+l^2)^{-1} f.
GridFunction eval_at(const GridFunction& f, double lambda, Integrand kind, bool use_kernel,
                     ResolventCache& cache) {
    GridFunction r = use_kernel ? apply_resolvent(f, lambda, cache)
                                : solve_shifted(f, lambda * lambda);
    if (kind == Integrand::Resolvent) return r;
    GridFunction out(f.grid());
    const double l2 = lambda * lambda;
    for (int i = 0; i < f.size(); ++i) out[i] = f[i] - l2 * r[i];
    return out;
}

// Where the kernel path is trustworthy for this input.  Two constraints:
// the explicit kernel is the infinite-line object, so against the
// Dirichlet-truncated operator its resolvent differs by
// ~e^{-2 lambda (L - b)} with b the radius holding the input's mass
// (boundary-reaching inputs go through the solves at small lambda); and
// the trapezoid sum must resolve the e^{-lambda |x-y|} kernel scale on the
// graded mesh, capping lambda by the spacing at the input's reach.
struct KernelWindow {
    double lo = 0, hi = 0;
};

KernelWindow kernel_window(const GridFunction& f, const QuadratureScheme& s) {
    const Grid& g = *f.grid();
    const double L = g.truncation();
    KernelWindow w;
    w.lo = std::max(kLambdaFloor, s.kernel_min_factor / L);
    w.hi = s.lambda_switch;
    double total = 0.0;
    for (int i = 0; i < f.size(); ++i) total += g.weights()[i] * f[i] * f[i];
    if (total == 0.0) return w;
    // smallest radius containing all but 1e-8 of the squared mass
    std::vector<std::pair<double, double>> by_radius;
    by_radius.reserve(f.size());
    for (int i = 0; i < f.size(); ++i)
        by_radius.emplace_back(g.radius()[i], g.weights()[i] * f[i] * f[i]);
    std::sort(by_radius.begin(), by_radius.end());
    double reach = 1.0, tail = 0.0;
    for (std::size_t i = by_radius.size(); i-- > 0;) {
        tail += by_radius[i].second;
        if (tail > 1e-8 * total) {
            reach = by_radius[i].first;
            break;
        }
    }
    const double margin = L - reach;
    if (margin < 0.05 * L) {
        w.lo = 2.0 * s.lambda_switch; // boundary-supported input: solves only
        return w;
    }
    w.lo = std::max(w.lo, 6.0 / margin);
    // local spacing at the reach radius caps the resolvable lambda
    double h_reach = g.min_spacing();
    for (int c = 0; c < g.size() - 1; ++c)
        if (std::min(g.radius()[c], g.radius()[c + 1]) <= reach)
            h_reach = std::max(h_reach, g.cell_width()[c]);
    w.hi = std::min(w.hi, 0.5 / h_reach);
    return w;
}

// Bessel-kernel path only on whole blocks inside its validity window.
bool block_uses_kernel(double lo, double hi, const KernelWindow& w) {
    return lo >= w.lo && hi <= w.hi * (1.0 + 1e-12);
}

double l2norm(const GridFunction& f) { return weighted_lp_norm(f, 2.0); }

// Gauss integral of the integrand over [lo, hi] with n points.  Node
// evaluations are independent and run in parallel; the weighted sum is
// taken in fixed node order afterwards, so results do not depend on the
// thread count.
GridFunction block_integral(const GridFunction& f, double lo, double hi, int n, Integrand kind,
                            bool use_kernel, ResolventCache& cache, Exec exec,
                            QuadratureReport* rep) {
    const auto& [xs, ws] = gauss_rule(n);
    const double c = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
    std::vector<GridFunction> vals(n);
    const bool par = exec == Exec::Parallel;
#pragma omp parallel for schedule(dynamic) if (par)
    for (int q = 0; q < n; ++q) {
        const double lambda = c + hw * xs[q];
        vals[q] = eval_at(f, lambda, kind, use_kernel, cache);
    }
    if (rep) (use_kernel ? rep->kernel_evals : rep->solve_evals) += n;
    GridFunction acc(f.grid());
    for (int q = 0; q < n; ++q)
        for (int i = 0; i < acc.size(); ++i) acc[i] += hw * ws[q] * vals[q][i];
    return acc;
}

GridFunction laplacian_dirichlet(const GridFunction& f) {
    GridFunction g = apply_laplacian(f);
    g[0] = 0.0;
    g[g.size() - 1] = 0.0;
    return g;
}

// Operator form of the atan remainder beyond lambda_max:
//   sqrt tail:      (2/pi) sum_k (-1)^k Delta^{k+1} f / ((2k+1) L^{2k+1})
//   resolvent tail: (2/pi) sum_k (-1)^k Delta^{k}   f / ((2k+1) L^{2k+1})
// Term norms must decrease (L is above the spectral radius); a growing
// term means lambda_max was forced too low and is an error.
GridFunction analytic_tail(const GridFunction& f, double lmax, int terms, Integrand kind,
                           QuadratureReport* rep) {
    GridFunction acc(f.grid());
    GridFunction power = kind == Integrand::SqrtPart ? laplacian_dirichlet(f) : f;
    double prev = 1e300;
    for (int k = 0; k < terms; ++k) {
        const double coef = (k % 2 ? -1.0 : 1.0) / ((2.0 * k + 1.0) * std::pow(lmax, 2 * k + 1));
        const double tn = std::abs(coef) * l2norm(power);
        if (tn > prev) throw NumericalError("analytic tail diverging; raise lambda_max");
        prev = tn;
        for (int i = 0; i < acc.size(); ++i) acc[i] += coef * power[i];
        if (k + 1 < terms) power = laplacian_dirichlet(power);
    }
    if (rep) rep->tail_norm = (2.0 / kPi) * l2norm(acc);
    for (int i = 0; i < acc.size(); ++i) acc[i] *= 2.0 / kPi;
    return acc;
}

GridFunction integrate(const GridFunction& f, Integrand kind, const QuadratureScheme& s,
                       ResolventCache& cache, Exec exec, QuadratureReport* rep) {
    auto [blocks, lmax] = quadrature_blocks(s, *f.grid());
    if (rep) {
        *rep = QuadratureReport{};
        rep->lambda_max = lmax;
    }
    const double fscale = l2norm(f);
    const KernelWindow window = kernel_window(f, s);
    GridFunction total(f.grid());
    bool all_converged = true;
    for (auto [lo, hi] : blocks) {
        const bool use_kernel = block_uses_kernel(lo, hi, window);
        int n = s.gauss_points;
        GridFunction cur = block_integral(f, lo, hi, n, kind, use_kernel, cache, exec, rep);
        bool converged = false;
        for (int r = 0; r < s.max_doublings; ++r) {
            GridFunction fine = block_integral(f, lo, hi, 2 * n, kind, use_kernel, cache, exec, rep);
            double diff = 0.0;
            for (int i = 0; i < cur.size(); ++i) {
                const double e = fine[i] - cur[i];
                diff += f.grid()->weights()[i] * e * e;
            }
            diff = std::sqrt(diff);
            cur = std::move(fine);
            n *= 2;
            if (diff <= s.rel_tol * (l2norm(cur) + 0.01 * fscale)) {
                converged = true;
                break;
            }
        }
        if (rep) rep->blocks.push_back(QuadBlock{lo, hi, n, l2norm(cur)});
        if (!converged) {
            all_converged = false;
            if (rep) rep->converged = false;
        }
        for (int i = 0; i < total.size(); ++i) total[i] += cur[i];
    }
    for (int i = 0; i < total.size(); ++i) total[i] *= 2.0 / kPi;
    GridFunction tail = analytic_tail(f, lmax, s.tail_terms, kind, rep);
    for (int i = 0; i < total.size(); ++i) total[i] += tail[i];
    if (!all_converged)
        throw NumericalError("quadrature failed to stabilize within max_doublings");
    return total;
}

} // namespace

GridFunction sqrt_laplacian(const GridFunction& f, const QuadratureScheme& s, ResolventCache& cache,
                            Exec exec, QuadratureReport* rep) {
    return integrate(f, Integrand::SqrtPart, s, cache, exec, rep);
}

GridFunction inv_sqrt_laplacian(const GridFunction& f, const QuadratureScheme& s,
                                ResolventCache& cache, Exec exec, QuadratureReport* rep) {
    return integrate(f, Integrand::Resolvent, s, cache, exec, rep);
}

GridFunction riesz_transform(const GridFunction& f, const QuadratureScheme& s,
                             ResolventCache& cache, Exec exec, QuadratureReport* rep) {
    return derivative(inv_sqrt_laplacian(f, s, cache, exec, rep));
}

double scalar_sqrt_probe(double theta, const QuadratureScheme& s, const Grid& grid) {
    auto [blocks, lmax] = quadrature_blocks(s, grid);
    double acc = 0.0;
    for (auto [lo, hi] : blocks) {
        int n = s.gauss_points;
        auto eval = [&](int pts) {
            const auto& [xs, ws] = gauss_rule(pts);
            const double c = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
            double v = 0.0;
            for (int q = 0; q < pts; ++q) {
                const double lambda = c + hw * xs[q];
                v += hw * ws[q] * theta / (theta + lambda * lambda);
            }
            return v;
        };
        double cur = eval(n);
        for (int r = 0; r < s.max_doublings; ++r) {
            const double fine = eval(2 * n);
            n *= 2;
            const bool done = std::abs(fine - cur) <= s.rel_tol * (std::abs(fine) + 1e-30);
            cur = fine;
            if (done) break;
        }
        acc += cur;
    }
    // tail: atan series of int_L^inf theta/(theta+l^2) dl
    double tail = 0.0;
    for (int k = 0; k < s.tail_terms; ++k)
        tail += (k % 2 ? -1.0 : 1.0) * std::pow(theta, k + 1) /
                ((2.0 * k + 1.0) * std::pow(lmax, 2 * k + 1));
    return (2.0 / kPi) * (acc + tail);
}

} // namespace brokenline
