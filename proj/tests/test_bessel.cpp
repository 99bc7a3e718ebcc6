#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "brokenline/bessel.hpp"

using namespace brokenline;
using namespace brokenline::bessel;

namespace {

// independent oracle: the libstdc++ implementations
double ref_k(double nu, double x) { return std::cyl_bessel_k(nu, x); }
double ref_i(double nu, double x) { return std::cyl_bessel_i(nu, x); }

} // namespace

TEST_CASE("half-integer closed forms") {
    // K_{1/2}(r) = sqrt(pi/(2r)) e^{-r}, I_{1/2}(r) = sqrt(2/(pi r)) sinh r
    CHECK(bessel_k(0.5, 1.0) == doctest::Approx(0.4610685044478945).epsilon(1e-12));
    CHECK(bessel_i(0.5, 1.0) == doctest::Approx(0.9376748882454876).epsilon(1e-12));
    for (double r : {0.01, 0.3, 2.5, 17.0, 120.0}) {
        const double kexact = std::sqrt(M_PI / (2.0 * r)) * std::exp(-r);
        CHECK(bessel_k(0.5, r) == doctest::Approx(kexact).epsilon(1e-11));
    }
}

TEST_CASE("agreement with the library implementation across branches") {
    for (double nu : {0.0, 0.25, 0.5, 0.7, 1.0, 1.3, 2.0}) {
        for (double r : {1e-6, 1e-3, 0.1, 0.9, 1.9, 2.1, 5.0, 8.0, 13.0, 14.5, 25.0, 80.0, 300.0}) {
            const double mine = bessel_k(nu, r);
            const double ref = ref_k(nu, r);
            CHECK(mine == doctest::Approx(ref).epsilon(1e-10));
        }
        for (double r : {1e-6, 1e-3, 0.1, 2.0, 8.0, 29.0, 31.0, 100.0, 400.0}) {
            const double mine = bessel_i(nu, r);
            const double ref = ref_i(nu, r);
            CHECK(mine == doctest::Approx(ref).epsilon(1e-10));
        }
    }
}

TEST_CASE("wronskian identity") {
    // I_nu'(r) K_nu(r) - I_nu(r) K_nu'(r) = 1/r
    for (double nu : {0.0, 0.25, 0.7, 1.0}) {
        for (double r : {0.05, 0.5, 2.0, 9.0, 40.0}) {
            const double ip = 0.5 * (bessel_i_any(nu - 1.0, r) + bessel_i(nu + 1.0, r));
            const double kp = -0.5 * (bessel_k(std::abs(nu - 1.0), r) + bessel_k(nu + 1.0, r));
            const double w = ip * bessel_k(nu, r) - bessel_i(nu, r) * kp;
            CHECK(w == doctest::Approx(1.0 / r).epsilon(1e-10));
        }
    }
}

TEST_CASE("domain and overflow signalling") {
    CHECK_THROWS_AS(bessel_k(0.5, 0.0), ValidationError);
    CHECK_THROWS_AS(bessel_k(0.5, -1.0), ValidationError);
    CHECK_THROWS_AS(bessel_k(-0.5, 1.0), ValidationError);
    CHECK_THROWS_AS(bessel_i(0.5, 701.0), OverflowError);
    CHECK(bessel_i_scaled(0.5, 701.0) > 0.0); // scaled variant keeps going
    CHECK(bessel_k(0.5, 800.0) == 0.0);       // deep underflow policy
}

TEST_CASE("cross-method agreement in the crossover windows") {
    // evaluate the same point through both branches around each crossover
    for (double nu : {0.0, 0.3, 0.5, 1.0, 1.3, 1.7}) {
        for (double r : {1.5, 1.8, 2.0, 2.3}) // series vs quadrature
            CHECK(detail::k_branch_series(nu, r) ==
                  doctest::Approx(detail::k_branch_quad(nu, r)).epsilon(1e-9));
        for (double r : {13.0, 14.0, 15.5}) // quadrature vs asymptotic
            CHECK(detail::k_branch_quad(nu, r) ==
                  doctest::Approx(detail::k_branch_asym(nu, r)).epsilon(1e-9));
        for (double r : {28.0, 30.0, 33.0}) // I series vs asymptotic
            CHECK(detail::i_branch_series(nu, r) ==
                  doctest::Approx(detail::i_branch_asym(nu, r)).epsilon(1e-9));
        for (double r : {1.9, 2.1, 13.8, 14.2})
            CHECK(bessel_k(nu, r) == doctest::Approx(ref_k(nu, r)).epsilon(1e-9));
    }
}

TEST_CASE("radial solutions: closed forms at d=3") {
    // k(r) = sqrt(pi/2) e^{-r}/r and l(r) = sqrt(2/pi) sinh(r)/r
    CHECK(k_radial(3.0, 1.0) == doctest::Approx(0.4610685044478945).epsilon(1e-12));
    for (double r : {0.2, 1.0, 3.7, 22.0}) {
        CHECK(k_radial(3.0, r) == doctest::Approx(std::sqrt(M_PI / 2) * std::exp(-r) / r).epsilon(1e-11));
        CHECK(l_radial(3.0, r) == doctest::Approx(std::sqrt(2 / M_PI) * std::sinh(r) / r).epsilon(1e-11));
        const double kp = -std::sqrt(M_PI / 2) * std::exp(-r) * (1.0 / r + 1.0 / (r * r));
        CHECK(k_radial_prime(3.0, r) == doctest::Approx(kp).epsilon(1e-11));
    }
}

TEST_CASE("radial solutions satisfy the defining ODE") {
    // f'' + (d-1)/r f' = lambda^2 f for f(r) = k(lambda r) and l(lambda r)
    for (double d : {1.5, 2.0, 2.5, 3.0, 4.0}) {
        for (double lambda : {1e-3, 0.1, 1.0, 10.0}) {
            for (int j = 0; j <= 24; ++j) {
                const double r = std::pow(10.0, -3.0 + 5.0 * j / 24.0); // [1e-3, 1e2]
                const double s = lambda * r;
                if (s > 650.0) continue;
                {
                    const double v = k_radial(d, s), vp = lambda * k_radial_prime(d, s);
                    const double vpp = lambda * lambda * k_radial_second(d, s);
                    const double res = vpp + (d - 1.0) / r * vp - lambda * lambda * v;
                    const double scale = std::abs(vpp) + std::abs((d - 1.0) / r * vp) +
                                         lambda * lambda * std::abs(v);
                    CHECK(std::abs(res) / scale < 1e-8);
                }
                if (s < 600.0) {
                    const double v = l_radial(d, s), vp = lambda * l_radial_prime(d, s);
                    const double vpp = lambda * lambda * l_radial_second(d, s);
                    const double res = vpp + (d - 1.0) / r * vp - lambda * lambda * v;
                    const double scale = std::abs(vpp) + std::abs((d - 1.0) / r * vp) +
                                         lambda * lambda * std::abs(v);
                    CHECK(std::abs(res) / scale < 1e-8);
                }
            }
        }
    }
}

TEST_CASE("sign pattern and small-r power laws") {
    for (double d : {1.5, 2.0, 2.5, 3.0, 4.0}) {
        for (double r : {1e-4, 1e-2, 0.5, 3.0, 30.0}) {
            CHECK(k_radial(d, r) > 0.0);
            CHECK(k_radial_prime(d, r) < 0.0);
            CHECK(l_radial(d, r) > 0.0);
            CHECK(l_radial_prime(d, r) > 0.0);
        }
        if (d > 2.0) {
            // k(r) r^{d-2} pinched between positive constants as r -> 0
            double lo = 1e300, hi = 0.0;
            for (double r : {1e-4, 1e-3, 1e-2, 0.1}) {
                const double v = k_radial(d, r) * std::pow(r, d - 2.0);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            CHECK(lo > 0.0);
            CHECK(hi / lo < 5.0);
        }
    }
}

TEST_CASE("wronskian normalization of the radial pair") {
    // (k l' - k' l)(r) = r^{1-d} for every d
    for (double d : {1.2, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0}) {
        for (double r : {0.01, 0.3, 1.0, 4.0, 20.0}) {
            const double w = k_radial(d, r) * l_radial_prime(d, r) -
                             k_radial_prime(d, r) * l_radial(d, r);
            CHECK(w == doctest::Approx(std::pow(r, 1.0 - d)).epsilon(1e-10));
        }
    }
}

TEST_CASE("regime report") {
    for (double d : {1.5, 2.0, 3.0}) {
        const auto rep = asymptotic_regime_check(d);
        CHECK(rep.all_signs_ok());
        CHECK(rep.worst_spread() < 50.0);
        CHECK(rep.checks.size() == 8);
    }
    // d=3 large-r k envelope is exact: spread 1
    const auto rep3 = asymptotic_regime_check(3.0);
    for (const auto& c : rep3.checks)
        if (c.quantity == "k" && c.window == "large_r") CHECK(c.ratio_max / c.ratio_min < 10.0);
    // d=2 small-r: k'(r) ~ -1/r
    const auto rep2 = asymptotic_regime_check(2.0);
    for (const auto& c : rep2.checks)
        if (c.quantity == "k'" && c.window == "small_r") {
            CHECK(c.ratio_min > 0.5);
            CHECK(c.ratio_max < 2.0);
        }
}

TEST_CASE("large orders up to nu = 50 stay consistent") {
    // the wronskian normalization is exact for every d in scope, including
    // arguments between the series and asymptotic crossovers of I
    for (double d : {16.0, 50.0, 102.0}) {
        for (double r : {0.5, 2.0, 30.0, 200.0, 650.0}) {
            const double w = k_radial_scaled(d, r) * l_radial_prime_scaled(d, r) -
                             k_radial_prime_scaled(d, r) * l_radial_scaled(d, r);
            CHECK(w == doctest::Approx(std::pow(r, 1.0 - d)).epsilon(1e-10));
        }
    }
    CHECK(bessel_i(12.0, 50.0) == doctest::Approx(ref_i(12.0, 50.0)).epsilon(1e-10));
    CHECK(bessel_k(12.0, 50.0) == doctest::Approx(ref_k(12.0, 50.0)).epsilon(1e-10));
}

TEST_CASE("scaled evaluations stay consistent far out") {
    for (double d : {1.5, 2.0, 3.0}) {
        for (double r : {1.0, 10.0, 100.0, 600.0}) {
            const double ks = k_radial_scaled(d, r);
            CHECK(ks > 0);
            if (r <= 300.0)
                CHECK(ks == doctest::Approx(k_radial(d, r) * std::exp(r)).epsilon(1e-11));
        }
    }
}
