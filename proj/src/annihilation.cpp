#include "brokenline/annihilation.hpp"

#include <algorithm>
#include <cmath>

#include "brokenline/bessel.hpp"
#include "brokenline/calculus.hpp"

namespace brokenline {

GridFunction k_lambda_function(const GridPtr& grid, double lambda) {
    if (!(lambda > 0)) throw ValidationError("k_lambda_function: lambda must be positive");
    GridFunction f(grid);
    const double d = grid->dimension();
    for (int i = 0; i < f.size(); ++i) f[i] = bessel::k_radial(d, lambda * grid->radius()[i]);
    return f;
}

namespace {

double diff_norm(const GridFunction& a, const GridFunction& b) {
    double s = 0.0;
    const auto& w = a.grid()->weights();
    for (int i = 0; i < a.size(); ++i) {
        const double e = a[i] - b[i];
        s += w[i] * e * e;
    }
    return std::sqrt(s);
}

} // namespace

CorrectorField build_corrector(const GridPtr& grid, double lambda, const EpsilonSequence& eps,
                               CorrectorRoute route, ResolventCache* cache) {
    if (!(lambda > 0) || lambda > 1.0)
        throw ValidationError("build_corrector: lambda must lie in (0, 1]");
    if (eps.count < 4) throw ValidationError("build_corrector: need at least 4 epsilon values");
    if (route == CorrectorRoute::Kernel && cache == nullptr)
        throw ValidationError("build_corrector: kernel route needs a resolvent cache");
    const double d = grid->dimension();

    const GridFunction klam = k_lambda_function(grid, lambda);
    std::vector<GridFunction> u;
    u.reserve(eps.count);
    double e = eps.base;
    double smallest = e;
    for (int j = 0; j < eps.count; ++j) {
        if (route == CorrectorRoute::Discrete)
            u.push_back(solve_shifted(klam, e * e));
        else
            u.push_back(apply_resolvent(klam, e, *cache));
        smallest = e;
        e *= eps.ratio;
    }

    CorrectorField out;
    out.d = d;
    out.lambda = lambda;
    out.route = route;

    std::vector<double> inc(u.size() - 1);
    for (std::size_t j = 0; j + 1 < u.size(); ++j) inc[j] = diff_norm(u[j + 1], u[j]);
    for (std::size_t j = 0; j + 1 < inc.size(); ++j)
        out.increment_ratios.push_back(inc[j] > 0 ? inc[j + 1] / inc[j] : 0.0);

    std::vector<double> sorted = out.increment_ratios;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    if (d > 2.0) {
        if (median >= eps.noncauchy_ratio)
            throw NumericalError("build_corrector: epsilon ladder is non-Cauchy for d > 2");
    } else {
        out.limit_unstable = true;
    }

    // Richardson in eps^2 (the expansion of the resolvent in eps), two levels.
    const double r2 = eps.ratio * eps.ratio;
    const double w1 = 1.0 / (1.0 / r2 - 1.0);
    std::vector<GridFunction> lvl1;
    for (std::size_t j = 0; j + 1 < u.size(); ++j) {
        GridFunction v(grid);
        for (int i = 0; i < v.size(); ++i)
            v[i] = u[j + 1][i] + w1 * (u[j + 1][i] - u[j][i]);
        lvl1.push_back(std::move(v));
    }
    const double r4 = r2 * r2;
    const double w2 = 1.0 / (1.0 / r4 - 1.0);
    GridFunction ufin(grid);
    {
        const GridFunction& a = lvl1[lvl1.size() - 2];
        const GridFunction& b = lvl1[lvl1.size() - 1];
        for (int i = 0; i < ufin.size(); ++i) ufin[i] = b[i] + w2 * (b[i] - a[i]);
    }
    out.u = std::move(ufin);
    out.grad_u = derivative(out.u);

    // residual of the defining equation at the smallest eps, interior nodes
    {
        const GridFunction& ul = u.back();
        GridFunction lap = apply_laplacian(ul);
        double num = 0.0, den = 0.0;
        const auto& w = grid->weights();
        for (int i = 1; i < grid->size() - 1; ++i) {
            const double r = lap[i] + smallest * smallest * ul[i] - klam[i];
            num += w[i] * r * r;
            den += w[i] * klam[i] * klam[i];
        }
        out.residual = std::sqrt(num / den);
    }
    return out;
}

AnnihilationResult annihilation_check(const GridFunction& f, double lambda,
                                      const EpsilonSequence& eps, double floor) {
    const GridPtr& grid = f.grid();
    CorrectorField c = build_corrector(grid, lambda, eps, CorrectorRoute::Discrete);
    GridFunction phi(grid);
    const GridFunction klam = k_lambda_function(grid, lambda);
    const double l2lam = lambda * lambda;
    for (int i = 0; i < phi.size(); ++i) phi[i] = klam[i] + l2lam * c.u[i];

    AnnihilationResult r;
    r.pairing = energy_pairing(f, phi);
    r.f_energy = std::sqrt(energy_pairing(f, f));
    r.phi_energy = std::sqrt(energy_pairing(phi, phi));
    r.defect = std::abs(r.pairing) / (r.f_energy * r.phi_energy + floor);
    r.limit_unstable = c.limit_unstable;
    return r;
}

GridFunction perturb_at_junction(const GridFunction& f, double height, double width) {
    if (!(width > 0)) throw ValidationError("perturb_at_junction: width must be positive");
    GridFunction out = f;
    const Grid& g = *f.grid();
    const double e1 = std::exp(1.0); // bump_profile(0) = 1/e
    for (int i = 0; i < out.size(); ++i)
        out[i] += height * e1 * bump_profile(g.glued()[i] / width);
    return out;
}

namespace {

const char* envelope_branch(double d, double delta) {
    if (d >= 3.0) return "lambda^{1-d-delta} x^{2-d-delta}";
    if (delta <= 3.0 - d) return "lambda^{-2} x^{2-d-delta}";
    return "lambda^{1-d-delta} x^{2-d-delta}";
}

double envelope_value(double d, double delta, double lambda, double x) {
    if (d < 3.0 && delta <= 3.0 - d) return std::pow(lambda, -2.0) * std::pow(x, 2.0 - d - delta);
    return std::pow(lambda, 1.0 - d - delta) * std::pow(x, 2.0 - d - delta);
}

double percentile_of(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const auto idx = static_cast<std::size_t>(p * (v.size() - 1));
    return v[idx];
}

} // namespace

std::vector<GradientBoundProbe> gradient_bound_probe(const GridPtr& grid,
                                                     const std::vector<double>& deltas,
                                                     const std::vector<double>& lambdas,
                                                     const EpsilonSequence& eps, double percentile) {
    const double d = grid->dimension();
    if (!(d > 2.0)) throw ValidationError("gradient_bound_probe: requires d > 2");
    std::vector<GradientBoundProbe> probes;
    std::vector<std::pair<double, GridFunction>> grads;
    for (double lam : lambdas) {
        CorrectorField c = build_corrector(grid, lam, eps, CorrectorRoute::Discrete);
        grads.emplace_back(lam, std::move(c.grad_u));
    }
    // sample radii away from the junction and the truncation boundary
    std::vector<int> sample;
    const double xmax = 0.6 * grid->truncation();
    for (int i = grid->junction_index() + 1; i < grid->size(); ++i) {
        const double x = grid->radius()[i];
        if (x >= 1.5 && x <= xmax) sample.push_back(i);
    }
    for (double delta : deltas) {
        GradientBoundProbe p;
        p.d = d;
        p.delta = delta;
        p.branch = envelope_branch(d, delta);
        std::vector<double> ratios;
        for (auto& [lam, gu] : grads) {
            p.lambda = lam;
            for (int i : sample)
                ratios.push_back(std::abs(gu[i]) / envelope_value(d, delta, lam, grid->radius()[i]));
        }
        p.fitted_constant = percentile_of(ratios, percentile);
        p.max_ratio = *std::max_element(ratios.begin(), ratios.end());
        probes.push_back(p);
    }
    return probes;
}

namespace {

// shared machinery for the low-energy kk integrals over lambda in (0,1]
struct LambdaNode {
    double lambda, weight;
};

std::vector<LambdaNode> low_energy_nodes(double lambda_floor) {
    std::vector<LambdaNode> nodes;
    const auto& [xs, ws] = gauss_rule(16);
    double hi = 1.0;
    while (hi > lambda_floor) {
        const double lo = std::max(hi / 2.0, lambda_floor);
        const double c = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
        for (std::size_t q = 0; q < xs.size(); ++q)
            nodes.push_back({c + hw * xs[q], hw * ws[q]});
        hi = lo;
    }
    return nodes;
}

// Branch moments of k(lambda|y|) g(y): strictly positive, strictly
// negative, and the junction term (assigned to the same-branch pairing).
struct BranchMoments {
    double plus = 0, minus = 0, junction = 0;
};

BranchMoments k_moments(const GridFunction& g, double lambda) {
    const Grid& grid = *g.grid();
    const double d = grid.dimension();
    BranchMoments m;
    for (int j = 0; j < g.size(); ++j) {
        if (g[j] == 0.0) continue;
        const double kv = bessel::k_radial(d, lambda * grid.radius()[j]);
        const double c = grid.weights()[j] * kv * g[j];
        if (grid.branch()[j] > 0)
            m.plus += c;
        else if (grid.branch()[j] < 0)
            m.minus += c;
        else
            m.junction += c;
    }
    return m;
}

} // namespace

GridFunction low_energy_kk_gradient(const GridFunction& g, double blocks_min_lambda) {
    const GridPtr& grid = g.grid();
    const double d = grid->dimension();
    GridFunction out(grid);
    for (const auto& node : low_energy_nodes(std::max(blocks_min_lambda, kLambdaFloor))) {
        const ResolventCoeffs c = solve_matching(d, node.lambda);
        const double A = c.a(), B = c.b();
        const BranchMoments m = k_moments(g, node.lambda);
        const double cplus = B * (m.plus + m.junction) + A * m.minus;
        const double cminus = B * (m.minus + m.junction) + A * m.plus;
        for (int i = 0; i < out.size(); ++i) {
            const int s = grid->branch()[i];
            if (s == 0) continue; // symmetric derivative of k(lambda|x|) vanishes
            const double dk = s * node.lambda *
                              bessel::k_radial_prime(d, node.lambda * grid->radius()[i]);
            out[i] += node.weight * dk * (s > 0 ? cplus : cminus);
        }
    }
    return out;
}

double bilinear_low_energy_kk(const GridFunction& f, const GridFunction& g,
                              double blocks_min_lambda) {
    if (!f.in_s0(1e-12 * weighted_lp_norm(f, 2.0)))
        throw ValidationError("bilinear_low_energy_kk: f must vanish at the junction");
    const GridFunction fp = derivative(f);
    const GridFunction r = low_energy_kk_gradient(g, blocks_min_lambda);
    return weighted_dot(fp, r);
}

TOperatorResult t_operator(const GridFunction& h, double q, double blocks_min_lambda,
                           double percentile) {
    if (!(q > 1.0) || !std::isfinite(q)) throw ValidationError("t_operator: q must lie in (1, inf)");
    const GridPtr& grid = h.grid();
    const double d = grid->dimension();
    TOperatorResult res;
    res.q = q;
    res.qprime = q / (q - 1.0);
    GridFunction th(grid);
    for (const auto& node : low_energy_nodes(std::max(blocks_min_lambda, kLambdaFloor))) {
        const ResolventCoeffs c = solve_matching(d, node.lambda);
        const double A = c.a(), B = c.b();
        const BranchMoments m = k_moments(h, node.lambda);
        const double cplus = B * (m.plus + m.junction) + A * m.minus;
        const double cminus = B * (m.minus + m.junction) + A * m.plus;
        const double l2w = node.lambda * node.lambda * node.weight;
        for (int i = 0; i < th.size(); ++i) {
            const double x = grid->radius()[i];
            const double kv = bessel::k_radial(d, node.lambda * x);
            const int s = grid->branch()[i];
            th[i] += l2w * x * kv * (s >= 0 ? cplus : cminus);
        }
    }
    res.th = std::move(th);

    const double hq = weighted_lp_norm(h, res.qprime);
    std::vector<double> ratios;
    const double xmax = 0.7 * grid->truncation();
    for (int i = grid->junction_index() + 1; i < grid->size(); ++i) {
        const double x = grid->radius()[i];
        if (x < 1.5 || x > xmax) continue;
        const double envelope = d > 2.0 ? std::pow(x, 2.0 - d - d / res.qprime)
                                        : std::pow(x, -d / res.qprime);
        ratios.push_back(std::abs(res.th[i]) / (envelope * hq));
    }
    res.fitted_constant = percentile_of(ratios, percentile);
    res.max_ratio = *std::max_element(ratios.begin(), ratios.end());
    return res;
}

std::vector<std::pair<double, double>> weak_type_profile(const GridFunction& th, double qprime,
                                                         int levels) {
    const Grid& g = *th.grid();
    const double xlo = 2.0, xhi = 0.8 * g.truncation();
    std::vector<std::pair<double, double>> out;
    for (int j = 0; j < levels; ++j) {
        const double x = xlo * std::pow(xhi / xlo, static_cast<double>(j) / (levels - 1));
        // threshold from the sampled magnitude at radius x
        int best = g.junction_index();
        double bd = 1e300;
        for (int i = g.junction_index(); i < g.size(); ++i) {
            const double dd = std::abs(g.radius()[i] - x);
            if (dd < bd) {
                bd = dd;
                best = i;
            }
        }
        const double s = std::abs(th[best]);
        if (!(s > 0)) continue;
        double measure = 0.0;
        for (int i = 0; i < g.size(); ++i)
            if (std::abs(th[i]) > s) measure += g.weights()[i];
        out.emplace_back(s, std::pow(s, qprime) * measure);
    }
    return out;
}

double hardy_ratio(const GridFunction& f, double p) {
    if (!(p >= 1.0)) throw ValidationError("hardy_ratio: p must be in [1, inf)");
    GridFunction scaled(f.grid());
    for (int i = 0; i < f.size(); ++i) scaled[i] = f[i] / f.grid()->radius()[i];
    const double num = weighted_lp_norm(scaled, p);
    const double den = weighted_lp_norm(derivative(f), p);
    if (den <= 1e-10 * num) throw ValidationError("hardy_ratio: derivative vanishes identically");
    return num / den;
}

} // namespace brokenline
