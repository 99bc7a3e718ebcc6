#include "brokenline/bessel.hpp"

#include <cmath>
#include <limits>

namespace brokenline::bessel {

namespace {

constexpr double kEulerGamma = 0.5772156649015328606065120900824024;
constexpr double kPi = 3.141592653589793238462643383279503;

bool is_integer_order(double nu, double tol = 1e-9) {
    return std::abs(nu - std::round(nu)) <= tol;
}

// Ascending series; valid for any order > -1, all x (terms are positive).
// Returns I_ord(x) unscaled; caller rescales.  Terms peak near m = x/2, so
// the cap covers every x below the asymptotic crossover.
double i_series(double ord, double x) {
    const double q = 0.25 * x * x;
    // (x/2)^ord / Gamma(ord+1)
    double term = std::exp(ord * std::log(0.5 * x) - std::lgamma(ord + 1.0));
    double sum = term;
    for (int m = 1; m < 4000; ++m) {
        term *= q / (m * (ord + m));
        sum += term;
        if (term < sum * 1e-18 && m > x / 2) break;
    }
    return sum;
}

// Large-argument expansion of e^{-x} I_nu(x), x >= 30.  The exponentially
// small reflection term cos(nu pi) e^{-2x} (...) is kept for completeness.
double i_asym_scaled(double nu, double x) {
    const double f = 4.0 * nu * nu;
    double a = 1.0, s_main = 1.0, s_refl = 1.0;
    double prev = std::numeric_limits<double>::max();
    for (int k = 1; k <= 40; ++k) {
        a *= (f - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k);
        const double t = a / std::pow(x, k);
        if (std::abs(t) > prev) break; // divergent tail reached
        prev = std::abs(t);
        s_main += (k % 2 ? -t : t);
        s_refl += t;
        if (std::abs(t) < 1e-18) break;
    }
    const double pref = 1.0 / std::sqrt(2.0 * kPi * x);
    return pref * (s_main + std::cos(nu * kPi) * std::exp(-2.0 * x) * s_refl);
}

// Large-argument expansion of e^{x} K_nu(x); one-signed series, truncated
// at the smallest term.
double k_asym_scaled(double nu, double x) {
    const double f = 4.0 * nu * nu;
    double a = 1.0, sum = 1.0;
    double prev = std::numeric_limits<double>::max();
    for (int k = 1; k <= 40; ++k) {
        a *= (f - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k);
        const double t = a / std::pow(x, k);
        if (std::abs(t) > prev) break;
        prev = std::abs(t);
        sum += t;
        if (std::abs(t) < 1e-18) break;
    }
    return std::sqrt(kPi / (2.0 * x)) * sum;
}

// psi(n) for positive integers via harmonic numbers.
double digamma_int(int n) {
    double s = -kEulerGamma;
    for (int j = 1; j < n; ++j) s += 1.0 / j;
    return s;
}

// K_n(x) for integer n >= 0 and x <= 2, via the logarithmic branch series.
double k_int_series(int n, double x) {
    const double xh = 0.5 * x;
    const double q = xh * xh;
    double sum = 0.0;
    // finite part: (1/2) (x/2)^{-n} sum_{k=0}^{n-1} (n-k-1)!/k! (-q)^k
    if (n > 0) {
        double c = 0.5 * std::exp(std::lgamma(n) - n * std::log(xh)); // (n-1)!/2 * (x/2)^{-n}
        double t = c;
        for (int k = 0; k < n; ++k) {
            sum += t;
            if (k + 1 < n) t *= -q / ((k + 1.0) * (n - k - 1.0));
        }
    }
    const int sgn = (n % 2 == 0) ? 1 : -1;
    sum += -sgn * std::log(xh) * i_series(n, x);
    // regular series with digamma weights
    double t = sgn * 0.5 * std::exp(n * std::log(xh) - std::lgamma(n + 1.0));
    for (int k = 0; k < 300; ++k) {
        const double term = t * (digamma_int(k + 1) + digamma_int(n + k + 1));
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-18 && k > 2) break;
        t *= q / ((k + 1.0) * (n + k + 1.0));
    }
    return sum;
}

// Trapezoid rule on K_nu(x) e^{x} = int_0^inf exp(-2x sinh^2(t/2)) cosh(nu t) dt.
// The integrand is even and analytic, so the rule converges
// superexponentially; used in the midrange where both the connection
// formula and the asymptotic series lose digits.
double k_quad_scaled(double nu, double x) {
    const double h = std::min(0.08, 0.7 / std::sqrt(16.0 + x));
    double sum = 0.5; // t = 0 term: exp(0) cosh(0) / 2
    for (int k = 1; k < 100000; ++k) {
        const double t = k * h;
        const double sh = std::sinh(0.5 * t);
        const double expo = -2.0 * x * sh * sh;
        const double lt = nu * t;
        // cosh(nu t) = e^{nu t}(1 + e^{-2 nu t})/2
        const double log_term = expo + lt;
        if (log_term < -46.0 && t > 1.0) break;
        sum += std::exp(expo) * std::cosh(lt);
    }
    return sum * h;
}

// Connection formula for order in (0,1), where both I series have
// representable gamma factors: K_a = pi (I_{-a} - I_a) / (2 sin a pi).
double k_conn_unit(double a, double x) {
    return kPi * (i_series(-a, x) - i_series(a, x)) / (2.0 * std::sin(a * kPi));
}

// Small-x K for non-integer order: connection formula at the fractional
// part, then the upward recurrence K_{a+1} = K_{a-1} + (2a/x) K_a, which
// is stable because K grows with the order.
double k_series_noninteger(double nu, double x) {
    const double mu = nu - std::floor(nu);
    if (nu < 1.0) return k_conn_unit(nu, x);
    double kprev = k_conn_unit(1.0 - mu, x); // K_{mu-1} by evenness in the order
    double kcur = k_conn_unit(mu, x);
    for (double a = mu; a < nu - 1e-9; a += 1.0) {
        const double knext = kprev + (2.0 * a / x) * kcur;
        kprev = kcur;
        kcur = knext;
    }
    return kcur;
}

double k_scaled_impl(double nu, double x) {
    const double x_asym = std::max(14.0, 2.0 * nu * nu);
    if (x >= x_asym) return k_asym_scaled(nu, x);
    const bool integer = is_integer_order(nu);
    const bool near_integer = std::abs(nu - std::round(nu)) < 1e-5;
    if (x <= 2.0) {
        if (integer) return std::exp(x) * k_int_series(static_cast<int>(std::round(nu)), x);
        if (!near_integer) return std::exp(x) * k_series_noninteger(nu, x);
        // near-integer twilight: the connection formula cancels, fall
        // through to the quadrature.
    }
    return k_quad_scaled(nu, x);
}

double i_scaled_impl(double ord, double x) {
    // the large-argument expansion needs x beyond ~2 ord^2 to converge
    // before its divergent tail, same as for K
    if (x >= std::max(30.0, 2.0 * ord * ord)) return i_asym_scaled(ord, x);
    if (x <= 600.0) return std::exp(-x) * i_series(ord, x);
    // large x below the asymptotic crossover (big orders): run the series
    // with periodic renormalization so neither the terms near the peak
    // m ~ x/2 nor the e^{-x} rescaling overflow
    const double q = 0.25 * x * x;
    double term = std::exp(ord * std::log(0.5 * x) - std::lgamma(ord + 1.0));
    double sum = term;
    double shift = 0.0; // accumulated log of renormalizations
    for (int m = 1; m < 8000; ++m) {
        term *= q / (m * (ord + m));
        sum += term;
        if (term > 1e280) {
            term *= 1e-280;
            sum *= 1e-280;
            shift += 280.0 * std::log(10.0);
        }
        if (term < sum * 1e-18 && m > x / 2) break;
    }
    return sum * std::exp(shift - x);
}

void check_domain(double nu, double r, const char* who) {
    if (!(r > 0.0) || !std::isfinite(r))
        throw ValidationError(std::string(who) + ": argument must be positive");
    if (!(nu >= 0.0) || !std::isfinite(nu))
        throw ValidationError(std::string(who) + ": order must be nonnegative");
}

} // namespace

double bessel_k_scaled(double nu, double r) {
    check_domain(nu, r, "bessel_k_scaled");
    return k_scaled_impl(nu, r);
}

double bessel_k(double nu, double r) {
    check_domain(nu, r, "bessel_k");
    if (r > 745.0) return 0.0; // below 1e-300: deep-underflow policy
    return std::exp(-r) * k_scaled_impl(nu, r);
}

double bessel_i_scaled(double nu, double r) {
    check_domain(nu, r, "bessel_i_scaled");
    return i_scaled_impl(nu, r);
}

double bessel_i(double nu, double r) {
    check_domain(nu, r, "bessel_i");
    if (r > 700.0)
        throw OverflowError("bessel_i: overflow for r > 700; use bessel_i_scaled");
    return std::exp(r) * i_scaled_impl(nu, r);
}

double bessel_i_any_scaled(double order, double r) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ValidationError("bessel_i_any: argument must be positive");
    if (order >= 0.0) return i_scaled_impl(order, r);
    if (is_integer_order(order)) return i_scaled_impl(-order, r); // I_{-n} = I_n
    if (order > -1.0) return i_scaled_impl(order, r);             // series is valid down to -1
    // reflection below -1: I_{-q} = I_q + (2/pi) sin(q pi) K_q
    const double q = -order;
    return i_scaled_impl(q, r) + (2.0 / kPi) * std::sin(q * kPi) * std::exp(-2.0 * r) * k_scaled_impl(q, r);
}

double bessel_i_any(double order, double r) {
    if (r > 700.0) throw OverflowError("bessel_i_any: overflow for r > 700; use the scaled variant");
    return std::exp(r) * bessel_i_any_scaled(order, r);
}

namespace {

// K_nu'(r) = -(K_{nu-1} + K_{nu+1})/2 with K_{-a} = K_a; scaled by e^{r}.
double k_prime_scaled_order(double nu, double r) {
    return -0.5 * (k_scaled_impl(std::abs(nu - 1.0), r) + k_scaled_impl(nu + 1.0, r));
}

// I_mu'(r) = (I_{mu-1} + I_{mu+1})/2; scaled by e^{-r}.
double i_prime_scaled_order(double mu, double r) {
    return 0.5 * (bessel_i_any_scaled(mu - 1.0, r) + bessel_i_any_scaled(mu + 1.0, r));
}

} // namespace

namespace {

// The growing radial solution is entire in s^2:
//   l(s) = s^{1-d/2} I_{d/2-1}(s) = 2^{1-d/2} sum_m (s^2/4)^m / (m! Gamma(d/2+m)).
// Evaluating l, l', l'' from this series avoids the catastrophic
// cancellation the product-rule assembly suffers for small s, where each
// term is O(s^{-2}) while the result is O(1).
struct LSeries {
    double val = 0, d1 = 0, d2 = 0;
};

LSeries l_series(double d, double s) {
    double b = std::exp((1.0 - d / 2.0) * std::log(2.0) - std::lgamma(d / 2.0));
    LSeries out;
    out.val = b;
    double sp = 1.0; // s^{2m}
    for (int m = 1; m < 80; ++m) {
        b /= 4.0 * m * (d / 2.0 + m - 1.0);
        sp *= s * s;
        const double term = b * sp;
        out.val += term;
        out.d1 += 2.0 * m * term / s;
        out.d2 += 2.0 * m * (2.0 * m - 1.0) * term / (s * s);
        if (term < out.val * 1e-18) break;
    }
    return out;
}

constexpr double kLSeriesCut = 2.0;

} // namespace

double k_radial_scaled(double d, double r) {
    const Dimension dim(d);
    return std::pow(r, 1.0 - d / 2.0) * k_scaled_impl(dim.nu(), r);
}

double l_radial_scaled(double d, double r) {
    Dimension dim(d);
    if (r < kLSeriesCut) return std::exp(-r) * l_series(d, r).val;
    return std::pow(r, 1.0 - d / 2.0) * bessel_i_any_scaled(dim.mu(), r);
}

double k_radial_prime_scaled(double d, double r) {
    const Dimension dim(d);
    const double a = 1.0 - d / 2.0;
    return a * std::pow(r, a - 1.0) * k_scaled_impl(dim.nu(), r) +
           std::pow(r, a) * k_prime_scaled_order(dim.nu(), r);
}

double l_radial_prime_scaled(double d, double r) {
    const Dimension dim(d);
    if (r < kLSeriesCut) return std::exp(-r) * l_series(d, r).d1;
    const double a = 1.0 - d / 2.0;
    return a * std::pow(r, a - 1.0) * bessel_i_any_scaled(dim.mu(), r) +
           std::pow(r, a) * i_prime_scaled_order(dim.mu(), r);
}

double k_radial(double d, double r) {
    if (r > 745.0) return 0.0;
    return std::exp(-r) * k_radial_scaled(d, r);
}

double l_radial(double d, double r) {
    if (r > 700.0) throw OverflowError("l_radial: overflow for r > 700; use l_radial_scaled");
    return std::exp(r) * l_radial_scaled(d, r);
}

double k_radial_prime(double d, double r) {
    if (r > 745.0) return 0.0;
    return std::exp(-r) * k_radial_prime_scaled(d, r);
}

double l_radial_prime(double d, double r) {
    if (r > 700.0) throw OverflowError("l_radial_prime: overflow for r > 700; use the scaled variant");
    return std::exp(r) * l_radial_prime_scaled(d, r);
}

double k_radial_second(double d, double r) {
    const Dimension dim(d);
    const double nu = dim.nu();
    const double a = 1.0 - d / 2.0;
    const double K = bessel_k(nu, r);
    const double Kp = -0.5 * (bessel_k(std::abs(nu - 1.0), r) + bessel_k(nu + 1.0, r));
    // Bessel ODE: K'' = -K'/r + (1 + nu^2/r^2) K
    const double Kpp = -Kp / r + (1.0 + nu * nu / (r * r)) * K;
    return a * (a - 1.0) * std::pow(r, a - 2.0) * K + 2.0 * a * std::pow(r, a - 1.0) * Kp +
           std::pow(r, a) * Kpp;
}

double l_radial_second(double d, double r) {
    const Dimension dim(d);
    if (r < kLSeriesCut) return l_series(d, r).d2;
    const double mu = dim.mu();
    const double a = 1.0 - d / 2.0;
    const double I = bessel_i_any(mu, r);
    const double Ip = 0.5 * (bessel_i_any(mu - 1.0, r) + bessel_i_any(mu + 1.0, r));
    const double Ipp = -Ip / r + (1.0 + mu * mu / (r * r)) * I;
    return a * (a - 1.0) * std::pow(r, a - 2.0) * I + 2.0 * a * std::pow(r, a - 1.0) * Ip +
           std::pow(r, a) * Ipp;
}

namespace detail {

double k_branch_series(double nu, double x) {
    if (is_integer_order(nu)) return std::exp(x) * k_int_series(static_cast<int>(std::round(nu)), x);
    return std::exp(x) * k_series_noninteger(nu, x);
}
double k_branch_quad(double nu, double x) { return k_quad_scaled(nu, x); }
double k_branch_asym(double nu, double x) { return k_asym_scaled(nu, x); }
double i_branch_series(double nu, double x) { return std::exp(-x) * i_series(nu, x); }
double i_branch_asym(double nu, double x) { return i_asym_scaled(nu, x); }

} // namespace detail

namespace {

std::vector<double> log_spaced(double lo, double hi, int count) {
    std::vector<double> out(count);
    const double la = std::log(lo), lb = std::log(hi);
    for (int i = 0; i < count; ++i) out[i] = std::exp(la + (lb - la) * i / (count - 1));
    return out;
}

void record_check(RegimeReport& rep, const std::string& what, const std::string& window,
                  const std::string& envelope, const std::vector<double>& ratios, bool signs) {
    RegimeCheck c;
    c.quantity = what;
    c.window = window;
    c.envelope = envelope;
    c.ratio_min = 1e300;
    c.ratio_max = -1e300;
    for (double r : ratios) {
        c.ratio_min = std::min(c.ratio_min, r);
        c.ratio_max = std::max(c.ratio_max, r);
    }
    c.sign_ok = signs;
    rep.checks.push_back(c);
}

} // namespace

double RegimeReport::worst_spread() const {
    double worst = 0.0;
    for (const auto& c : checks)
        if (c.ratio_min > 0) worst = std::max(worst, c.ratio_max / c.ratio_min);
    return worst;
}

bool RegimeReport::all_signs_ok() const {
    for (const auto& c : checks)
        if (!c.sign_ok) return false;
    return true;
}

RegimeReport asymptotic_regime_check(double d) {
    Dimension dim(d);
    RegimeReport rep;
    rep.d = d;
    const auto small = log_spaced(1e-3, 0.5, 48);
    const auto large = log_spaced(2.0, 50.0, 48);
    const bool d2 = std::abs(d - 2.0) < 1e-12;

    auto env_k_small = [&](double r) {
        if (d2) return 1.0 - std::log(r);
        return d > 2 ? std::pow(r, 2.0 - d) : 1.0;
    };
    auto env_kp_small = [&](double r) {
        return d2 ? -1.0 / r : -std::pow(r, 1.0 - d);
    };

    std::vector<double> ratios;
    bool signs = true;

    ratios.clear();
    for (double r : small) {
        const double v = k_radial(d, r);
        signs = signs && v > 0;
        ratios.push_back(v / env_k_small(r));
    }
    record_check(rep, "k", "small_r", d2 ? "1 - log r" : (d > 2 ? "r^{2-d}" : "1"), ratios, signs);

    ratios.clear();
    signs = true;
    for (double r : small) {
        const double v = k_radial_prime(d, r);
        signs = signs && v < 0;
        ratios.push_back(v / env_kp_small(r));
    }
    record_check(rep, "k'", "small_r", d2 ? "-1/r" : "-r^{1-d}", ratios, signs);

    ratios.clear();
    signs = true;
    for (double r : small) {
        const double v = l_radial(d, r);
        signs = signs && v > 0;
        ratios.push_back(v);
    }
    record_check(rep, "l", "small_r", "1", ratios, signs);

    ratios.clear();
    signs = true;
    for (double r : small) {
        const double v = l_radial_prime(d, r);
        signs = signs && v > 0;
        ratios.push_back(v / r);
    }
    record_check(rep, "l'", "small_r", "r", ratios, signs);

    // large r, computed through the scaled evaluations
    const double b = (d - 1.0) / 2.0;
    ratios.clear();
    signs = true;
    for (double r : large) {
        const double v = k_radial_scaled(d, r);
        signs = signs && v > 0;
        ratios.push_back(v * std::pow(r, b));
    }
    record_check(rep, "k", "large_r", "r^{(1-d)/2} e^{-r}", ratios, signs);

    ratios.clear();
    signs = true;
    for (double r : large) {
        const double v = k_radial_prime_scaled(d, r);
        signs = signs && v < 0;
        ratios.push_back(-v * std::pow(r, b));
    }
    record_check(rep, "k'", "large_r", "-r^{(1-d)/2} e^{-r}", ratios, signs);

    ratios.clear();
    signs = true;
    for (double r : large) {
        const double v = l_radial_scaled(d, r);
        signs = signs && v > 0;
        ratios.push_back(v * std::pow(r, b));
    }
    record_check(rep, "l", "large_r", "r^{(1-d)/2} e^{r}", ratios, signs);

    ratios.clear();
    signs = true;
    for (double r : large) {
        const double v = l_radial_prime_scaled(d, r);
        signs = signs && v > 0;
        ratios.push_back(v * std::pow(r, b));
    }
    record_check(rep, "l'", "large_r", "r^{(1-d)/2} e^{r}", ratios, signs);

    return rep;
}

} // namespace brokenline::bessel
