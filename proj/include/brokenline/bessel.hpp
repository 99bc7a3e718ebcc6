#pragma once

#include <string>
#include <vector>

#include "brokenline/grid.hpp"

namespace brokenline::bessel {

/// Modified Bessel function K_nu(r), nu >= 0, r > 0.
/// Strategy: ascending series for small r (log-branch series at integer
/// orders, connection formula K_nu = pi (I_{-nu} - I_nu)/(2 sin nu pi)
/// otherwise), a cosh-integral rule in the midrange where the connection
/// formula cancels, and the large-argument asymptotic series beyond
/// max(14, 2 nu^2).  Relative accuracy ~1e-12 over r in [1e-6, 700].
double bessel_k(double nu, double r);

/// Modified Bessel function I_nu(r), nu >= 0, r > 0.  Throws OverflowError
/// for r > 700 (use the scaled variant there).
double bessel_i(double nu, double r);

/// e^{r} K_nu(r) and e^{-r} I_nu(r); valid on the whole range without
/// overflow.
double bessel_k_scaled(double nu, double r);
double bessel_i_scaled(double nu, double r);

/// I of any order > -inf (reflection formula below -1); used internally by
/// the radial solutions for d < 2.
double bessel_i_any(double order, double r);
double bessel_i_any_scaled(double order, double r);

/// Radial solutions of f'' + (d-1)/r f' = f on (0, inf):
///   k_radial(d,r) = r^{1-d/2} K_{|d/2-1|}(r)   (decaying),
///   l_radial(d,r) = r^{1-d/2} I_{d/2-1}(r)     (growing),
/// normalized so that (k l' - k' l)(r) = r^{1-d}.
double k_radial(double d, double r);
double l_radial(double d, double r);
double k_radial_prime(double d, double r);
double l_radial_prime(double d, double r);
double k_radial_second(double d, double r);
double l_radial_second(double d, double r);

/// Scaled variants: e^{r} k_radial and derivatives, e^{-r} l_radial and
/// derivatives.  These stay representable for r up to ~1e8.
double k_radial_scaled(double d, double r);
double l_radial_scaled(double d, double r);
double k_radial_prime_scaled(double d, double r);
double l_radial_prime_scaled(double d, double r);

/// One row of the asymptotic-regime verification report.
struct RegimeCheck {
    std::string quantity;  // "k", "l", "k'", "l'"
    std::string window;    // "small_r" or "large_r"
    std::string envelope;  // human-readable comparison function
    double ratio_min = 0, ratio_max = 0;
    bool sign_ok = true;
};

struct RegimeReport {
    double d = 0;
    std::vector<RegimeCheck> checks;
    /// Worst max/min comparability ratio across all checks.
    double worst_spread() const;
    bool all_signs_ok() const;
};

/// Verify the two-sided small-r / large-r envelopes of k, l, k', l' for
/// the dimension regime of d (three regimes: 1<d<2, d=2, d>2) by sampling
/// r in [1e-3, 0.5] and [2, 50] and recording min/max of value/envelope.
RegimeReport asymptotic_regime_check(double d);

namespace detail {
/// Individual evaluation branches of e^x K_nu(x), exposed so tests can
/// compare methods at the same point inside the overlap windows.
double k_branch_series(double nu, double x); // log-series / connection + recurrence
double k_branch_quad(double nu, double x);   // cosh-integral trapezoid rule
double k_branch_asym(double nu, double x);   // large-argument expansion
double i_branch_series(double nu, double x); // ascending series, times e^{-x}
double i_branch_asym(double nu, double x);   // large-argument expansion
} // namespace detail

} // namespace brokenline::bessel
