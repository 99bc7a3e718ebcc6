#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "brokenline/annihilation.hpp"
#include "brokenline/bessel.hpp"

using namespace brokenline;

namespace {

double window_grad_diff(const CorrectorField& a, const CorrectorField& b, const Grid& g) {
    // gradients compared on |x| <= L/3; constant offsets between the free
    // and truncated limits drop out of the gradient
    double num = 0, den = 0;
    for (int i = 0; i < g.size(); ++i) {
        if (g.radius()[i] > g.truncation() / 3.0) continue;
        num += g.weights()[i] * (a.grad_u[i] - b.grad_u[i]) * (a.grad_u[i] - b.grad_u[i]);
        den += g.weights()[i] * b.grad_u[i] * b.grad_u[i];
    }
    return std::sqrt(num / den);
}

} // namespace

TEST_CASE("corrector: residual, ladder behaviour and route agreement") {
    auto grid = build_grid(Dimension(3.0), 50.0, 3000, Spacing::Geometric);
    EpsilonSequence eps;

    CorrectorField disc = build_corrector(grid, 0.5, eps);
    CHECK(disc.residual < 1e-4);
    CHECK_FALSE(disc.limit_unstable);
    // eps^2-contraction: increment ratios settle near 1/4
    CHECK(disc.increment_ratios.back() < 0.5);

    ResolventCache cache;
    CorrectorField kern = build_corrector(grid, 0.5, eps, CorrectorRoute::Kernel, &cache);
    CHECK(window_grad_diff(kern, disc, *grid) < 5e-3);

    CHECK_THROWS_AS(build_corrector(grid, 0.0, eps), ValidationError);
    CHECK_THROWS_AS(build_corrector(grid, 0.5, eps, CorrectorRoute::Kernel, nullptr),
                    ValidationError);

    // the non-Cauchy guard for d > 2 is wired to the configured ratio
    EpsilonSequence strict = eps;
    strict.noncauchy_ratio = 0.05; // quadratic contraction sits near 0.25
    CHECK_THROWS_AS(build_corrector(grid, 0.5, strict), NumericalError);
}

TEST_CASE("corrector: zero input gives zero field") {
    auto grid = build_grid(Dimension(3.0), 30.0, 500, Spacing::Geometric);
    GridFunction z(grid);
    GridFunction u = solve_shifted(z, 0.01);
    for (int i = 0; i < u.size(); ++i) CHECK(u[i] == 0.0);
}

TEST_CASE("corrector: dimension regimes tag as expected") {
    EpsilonSequence eps;
    for (double d : {1.5, 2.0}) {
        auto grid = build_grid(Dimension(d), 50.0, 1500, Spacing::Geometric);
        CorrectorField c = build_corrector(grid, 0.3, eps);
        CHECK(c.limit_unstable);
        // early increments fail to contract at second order
        CHECK(c.increment_ratios.front() > 0.5);
    }
    for (double d : {2.5, 3.0, 4.0}) {
        auto grid = build_grid(Dimension(d), 50.0, 1500, Spacing::Geometric);
        CorrectorField c = build_corrector(grid, 0.3, eps);
        CHECK_FALSE(c.limit_unstable);
    }
}

TEST_CASE("corrector decays like the gradient-bound window at d=3") {
    auto grid = build_grid(Dimension(3.0), 50.0, 2000, Spacing::Geometric);
    CorrectorField c = build_corrector(grid, 0.5, EpsilonSequence{});
    // fit the decay exponent of |u| over [3, 15]: it must sit inside the
    // x^{2-d-delta} window for delta in [0, 1], i.e. slope in [-2, -1]
    // up to fitting slack
    std::vector<double> lx, lu;
    for (int i = grid->junction_index(); i < grid->size(); ++i) {
        const double x = grid->radius()[i];
        if (x < 3.0 || x > 15.0 || c.u[i] <= 0.0) continue;
        lx.push_back(std::log(x));
        lu.push_back(std::log(c.u[i]));
    }
    REQUIRE(lx.size() > 20);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += lu[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * lu[i];
    }
    const double n = static_cast<double>(lx.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope < -0.8);
    CHECK(slope > -2.3);
}

TEST_CASE("annihilation identity and boundary sensitivity") {
    auto grid = build_grid(Dimension(3.0), 50.0, 3000, Spacing::Geometric);
    TestFamily fam = default_s0_family(grid);
    EpsilonSequence eps;

    // mid-branch bump
    auto mid = annihilation_check(fam.members[0], 0.3, eps);
    CHECK(mid.defect <= 1e-5);
    // member on the opposite branch from the kernel's dominant mass:
    // reflect a dilate onto the negative branch
    GridFunction refl(grid);
    const GridFunction& src = fam.members[0];
    for (int i = 0; i < src.size(); ++i) refl[src.size() - 1 - i] = src[i];
    auto rf = annihilation_check(refl, 0.3, eps);
    CHECK(rf.defect <= 1e-5);

    // straddler
    auto str = annihilation_check(fam.members.back(), 0.3, eps);
    CHECK(str.defect <= 1e-5);

    // non-S_0 perturbation must report the boundary defect, not near-zero
    GridFunction bad = perturb_at_junction(fam.members.back(), 0.1, 0.4);
    CHECK_FALSE(bad.in_s0(1e-12));
    auto pert = annihilation_check(bad, 0.3, eps);
    CHECK(pert.defect >= 100.0 * str.defect);
}

TEST_CASE("gradient bound probes fit finite constants") {
    EpsilonSequence eps;
    {
        auto grid = build_grid(Dimension(3.0), 50.0, 2000, Spacing::Geometric);
        auto probes = gradient_bound_probe(grid, {0.0, 0.5, 1.0}, {0.1, 0.3, 0.8}, eps);
        for (const auto& p : probes) {
            CHECK(std::isfinite(p.fitted_constant));
            CHECK(p.fitted_constant > 0.0);
            CHECK(p.max_ratio < 1e6);
        }
    }
    {
        // 2 < d < 3: both delta branches of the bound
        auto grid = build_grid(Dimension(2.5), 50.0, 2000, Spacing::Geometric);
        auto probes = gradient_bound_probe(grid, {0.25, 0.75}, {0.1, 0.3, 0.8}, eps);
        CHECK(std::string(probes[0].branch).find("lambda^{-2}") != std::string::npos);
        CHECK(std::string(probes[1].branch).find("lambda^{1-d-delta}") != std::string::npos);
        for (const auto& p : probes) CHECK(std::isfinite(p.fitted_constant));
    }
    auto bad = build_grid(Dimension(1.5), 50.0, 600, Spacing::Geometric);
    CHECK_THROWS_AS(gradient_bound_probe(bad, {0.5}, {0.3}, eps), ValidationError);
}

TEST_CASE("bilinear kk form: reorder consistency and zero input") {
    auto grid = build_grid(Dimension(3.0), 50.0, 1500, Spacing::Geometric);
    TestFamily fam = default_s0_family(grid);
    const GridFunction& f = fam.members[0];
    const GridFunction& g = fam.members[1];

    GridFunction zero(grid);
    CHECK(bilinear_low_energy_kk(f, zero) == 0.0);

    // two evaluation orders of the same triple integral
    const double direct = bilinear_low_energy_kk(f, g);
    const GridFunction r = low_energy_kk_gradient(g);
    const double reordered = weighted_dot(derivative(f), r);
    CHECK(direct == doctest::Approx(reordered).epsilon(1e-6));

    // pairing against the plain function via the T operator:
    // B(f,g) = -<f/|x|, T g> up to discretization error
    auto t = t_operator(g, 2.0);
    GridFunction fx(grid);
    for (int i = 0; i < f.size(); ++i) fx[i] = f[i] / grid->radius()[i];
    const double via_t = -weighted_dot(fx, t.th);
    CHECK(direct == doctest::Approx(via_t).epsilon(5e-3));

    // boundedness |B| <= C ||f'||_p ||g||_{p'}: the constant fitted over
    // the default family must stay stable when the family is extended
    // with further members of the same kinds
    const double p = 1.5, pp = 3.0;
    auto cmax_over = [&](const std::vector<GridFunction>& members) {
        double cmax = 0.0;
        for (const auto& fi : members)
            for (const auto& gj : members) {
                const double b = std::abs(bilinear_low_energy_kk(fi, gj));
                cmax = std::max(cmax, b / (weighted_lp_norm(derivative(fi), p) *
                                           weighted_lp_norm(gj, pp)));
            }
        return cmax;
    };
    std::vector<GridFunction> base = fam.members;
    std::vector<GridFunction> extended = base;
    TestFamily extra_d = make_family("dilate", grid, {{6.0, 1.5}, {12.0, 3.0}});
    TestFamily extra_s = make_family("straddle", grid, {{0.0, 1.5}});
    for (auto& m : extra_d.members) extended.push_back(std::move(m));
    for (auto& m : extra_s.members) extended.push_back(std::move(m));
    const double cmax_base = cmax_over(base);
    const double cmax_ext = cmax_over(extended);
    CHECK(cmax_ext <= 1.25 * cmax_base + 1e-12);
}

TEST_CASE("T operator bounds and weak type profile") {
    {
        auto grid = build_grid(Dimension(3.0), 150.0, 2500, Spacing::Geometric, 30.0);
        TestFamily src = make_family("straddle", grid, {{0.0, 1.0}});
        GridFunction zero(grid);
        auto tz = t_operator(zero, 2.0);
        for (int i = 0; i < tz.th.size(); ++i) CHECK(tz.th[i] == 0.0);

        auto t = t_operator(src.members[0], 2.0);
        CHECK(std::isfinite(t.fitted_constant));
        CHECK(t.fitted_constant > 0.0);
        CHECK(t.qprime == doctest::Approx(2.0));
        CHECK_THROWS_AS(t_operator(src.members[0], 0.5), ValidationError);
    }
    {
        // d = 1.5 decays like x^{-d/q'}; profile flat over the sampled range
        auto grid = build_grid(Dimension(1.5), 600.0, 3000, Spacing::Geometric, 60.0);
        TestFamily src = make_family("straddle", grid, {{0.0, 1.0}});
        auto t = t_operator(src.members[0], 4.0); // q' = 4/3
        const auto profile = weak_type_profile(t.th, t.qprime);
        CHECK(profile.size() > 10);
        double lo = 1e300, hi = 0.0;
        for (auto [s, prod] : profile) {
            lo = std::min(lo, prod);
            hi = std::max(hi, prod);
        }
        CHECK(hi / lo < 10.0);
        // the s-range really spans close to three decades
        CHECK(profile.front().first / profile.back().first > 300.0);
    }
}

TEST_CASE("hardy ratio") {
    auto grid = build_grid(Dimension(3.0), 150.0, 2500, Spacing::Geometric, 30.0);
    TestFamily dil = make_family("dilate", grid, {{8.0, 2.0}, {16.0, 4.0}, {32.0, 8.0}});
    // dilation covariance keeps the ratio nearly constant and under p/(d-p)
    for (double p : {1.0, 2.0}) {
        const double cap = p / (3.0 - p);
        for (const auto& f : dil.members) {
            const double r = hardy_ratio(f, p);
            CHECK(r < cap * 1.05);
            CHECK(r > 0.0);
        }
    }
    // reflection invariance
    GridFunction refl(grid);
    const GridFunction& f = dil.members[0];
    for (int i = 0; i < f.size(); ++i) refl[f.size() - 1 - i] = f[i];
    CHECK(hardy_ratio(refl, 2.0) == doctest::Approx(hardy_ratio(f, 2.0)).epsilon(1e-10));

    // support far out: ratio <= ||f||_p / (R ||f'||_p)
    TestFamily far = make_family("dilate", grid, {{40.0, 4.0}});
    const double lhs = hardy_ratio(far.members[0], 2.0);
    const double rhs = weighted_lp_norm(far.members[0], 2.0) /
                       (36.0 * weighted_lp_norm(derivative(far.members[0]), 2.0));
    CHECK(lhs <= rhs * 1.0001);

    GridFunction con(grid);
    for (int i = 0; i < con.size(); ++i) con[i] = 1.0;
    CHECK_THROWS_AS(hardy_ratio(con, 2.0), ValidationError);

    // stress family: growth at p = d, classical cap for p < d
    TestFamily stress = make_family("hardy_stress", grid, {{4, 2}, {8, 2}, {16, 2}, {32, 2}, {64, 2}});
    std::vector<double> r3, r2;
    for (const auto& m : stress.members) {
        r3.push_back(hardy_ratio(m, 3.0));
        r2.push_back(hardy_ratio(m, 2.0));
    }
    for (std::size_t i = 0; i + 1 < r3.size(); ++i) CHECK(r3[i + 1] > r3[i]);
    for (double r : r2) CHECK(r <= 2.0 * 1.05);
}

TEST_CASE("half-line quadrature oracle for the hardy ratio") {
    // dense Simpson evaluation of ||f/x||_p and ||f'||_p for the bump
    // profile on [1, infty), independent of the grid machinery
    const double c = 8.0, s = 2.0, p = 2.0, d = 3.0;
    const int n = 200001;
    const double lo = c - s, hi = c + s;
    const double h = (hi - lo) / (n - 1);
    auto fval = [&](double x) { return bump_profile((x - c) / s); };
    auto fpr = [&](double x) {
        const double t = (x - c) / s;
        if (std::abs(t) >= 1.0) return 0.0;
        const double b = bump_profile(t);
        return b * (-2.0 * t / ((t * t - 1.0) * (t * t - 1.0))) / s;
    };
    double num = 0, den = 0;
    for (int i = 0; i < n; ++i) {
        const double x = lo + i * h;
        const double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        num += w * std::pow(std::abs(fval(x)) / x, p) * std::pow(x, d - 1.0);
        den += w * std::pow(std::abs(fpr(x)), p) * std::pow(x, d - 1.0);
    }
    const double oracle = std::pow(num / den, 1.0 / p);

    auto grid = build_grid(Dimension(3.0), 150.0, 2500, Spacing::Geometric, 30.0);
    TestFamily dil = make_family("dilate", grid, {{c, s}});
    CHECK(hardy_ratio(dil.members[0], p) == doctest::Approx(oracle).epsilon(1e-3));
}
