#include "brokenline/resolvent.hpp"

#include <cmath>

#include "brokenline/bessel.hpp"

namespace brokenline {

double ResolventCoeffs::a() const {
    if (2.0 * lambda > 700.0) throw OverflowError("ResolventCoeffs::a overflows; use a_hat");
    return a_hat * std::exp(2.0 * lambda);
}

double ResolventCoeffs::b() const {
    if (2.0 * lambda > 700.0) throw OverflowError("ResolventCoeffs::b overflows; use b_hat");
    return b_hat * std::exp(2.0 * lambda);
}

ResolventCoeffs solve_matching(double d, double lambda) {
    Dimension dim(d);
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw ValidationError("solve_matching: lambda must be positive");
    if (lambda < kLambdaFloor) {
        if (d <= 2.0)
            throw ValidationError("solve_matching: lambda below assembly floor and d <= 2");
        lambda = kLambdaFloor; // zero-energy limit regime, evaluate at the floor
    }

    ResolventCoeffs c;
    c.d = d;
    c.lambda = lambda;
    c.lambda_pow = std::pow(lambda, d - 2.0);

    const double kh = bessel::k_radial_scaled(d, lambda);
    const double kph = bessel::k_radial_prime_scaled(d, lambda);
    const double lh = bessel::l_radial_scaled(d, lambda);
    const double lph = bessel::l_radial_prime_scaled(d, lambda);
    if (!(kh > 0.0) || !(kph < 0.0))
        throw NumericalError("solve_matching: matching system singular");

    // (iii) unit delta jump across the diagonal at a reference point y0:
    //       v lambda^{d-1} y0^{d-1} (k l' - k' l)(lambda y0) = 1.
    const double y0 = 1.5;
    const double s0 = lambda * y0;
    const double wr = bessel::k_radial_scaled(d, s0) * bessel::l_radial_prime_scaled(d, s0) -
                      bessel::k_radial_prime_scaled(d, s0) * bessel::l_radial_scaled(d, s0);
    c.v = 1.0 / (std::pow(lambda * y0, d - 1.0) * wr);

    // (i) continuity and (ii) derivative matching across the junction, in
    // exp-scaled variables:
    //      a_hat k - b_hat k =  v lambda^{d-2} l
    //     -a_hat k' - b_hat k' =  v lambda^{d-2} l'
    const double rhs = c.v * c.lambda_pow;
    c.a_hat = 0.5 * rhs * (lh / kh - lph / kph);
    c.b_hat = -0.5 * rhs * (lh / kh + lph / kph);
    if (!std::isfinite(c.a_hat) || !std::isfinite(c.b_hat) || !std::isfinite(c.v))
        throw NumericalError("solve_matching: matching system singular");
    return c;
}

ResolventKernel::ResolventKernel(Dimension dim, double lambda)
    : c_(solve_matching(dim.value(), lambda)) {}

namespace {

void check_point(double x, const char* who) {
    if (!(std::abs(x) >= 1.0))
        throw ValidationError(std::string(who) + ": arguments must satisfy |x| >= 1");
}

struct KernelParts {
    double kk = 0, kl = 0;
};

KernelParts eval_parts(const ResolventCoeffs& c, double x, double y) {
    check_point(x, "kernel_eval");
    check_point(y, "kernel_eval");
    if (y < 0) { // reflection rule K(x,y) = K(-x,-y)
        x = -x;
        y = -y;
    }
    const double ax = std::abs(x), ay = std::abs(y);
    const double lam = c.lambda;
    const double tx = lam * (ax - 1.0), ty = lam * (ay - 1.0);
    const double khx = bessel::k_radial_scaled(c.d, lam * ax);
    const double khy = bessel::k_radial_scaled(c.d, lam * ay);
    KernelParts p;
    if (x <= -1.0) {
        p.kk = c.a_hat * khx * khy * std::exp(-(tx + ty));
        p.kl = 0.0;
        return p;
    }
    p.kk = c.b_hat * khx * khy * std::exp(-(tx + ty));
    const double sa = lam * std::max(ax, ay), sb = lam * std::min(ax, ay);
    p.kl = c.v * c.lambda_pow * bessel::k_radial_scaled(c.d, sa) *
           bessel::l_radial_scaled(c.d, sb) * std::exp(sb - sa);
    return p;
}

} // namespace

double ResolventKernel::value(double x, double y) const {
    const auto p = eval_parts(c_, x, y);
    return p.kk + p.kl;
}

double ResolventKernel::value_kk(double x, double y) const { return eval_parts(c_, x, y).kk; }

double ResolventKernel::value_kl(double x, double y) const { return eval_parts(c_, x, y).kl; }

std::shared_ptr<const KernelTable> build_kernel_table(const GridPtr& grid, double lambda) {
    auto table = std::make_shared<KernelTable>();
    table->grid = grid;
    table->c = solve_matching(grid->dimension(), lambda);
    const int N = grid->size();
    table->khat.resize(N);
    table->lhat.resize(N);
    table->texp.resize(N);
    table->edec.resize(N);
    const double d = grid->dimension();
    const double lam = table->c.lambda;
    long uf = 0;
#pragma omp parallel for schedule(static) reduction(+ : uf)
    for (int i = 0; i < N; ++i) {
        const double ar = grid->radius()[i];
        table->khat[i] = bessel::k_radial_scaled(d, lam * ar);
        table->lhat[i] = bessel::l_radial_scaled(d, lam * ar);
        table->texp[i] = lam * (ar - 1.0);
        table->edec[i] = std::exp(-table->texp[i]);
        if (table->edec[i] == 0.0) ++uf;
    }
    table->underflow_nodes = uf;
    return table;
}

std::shared_ptr<const KernelTable> ResolventCache::get(const GridPtr& grid, double lambda) {
    const auto key = std::make_tuple(grid->id(), lambda);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = map_.find(key);
        if (it != map_.end()) return it->second;
    }
    auto table = build_kernel_table(grid, lambda);
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = map_.emplace(key, table);
    return it->second;
}

std::size_t ResolventCache::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return map_.size();
}

void ResolventCache::clear() {
    std::lock_guard<std::mutex> lock(mutex_);
    map_.clear();
}

namespace {

// The kernel is semi-separable: along one branch, ordered outward from the
// junction, the kl part pairs the decaying factor at the outer point with
// the growing factor at the inner point.  Sweeping two exp-rescaled
// recurrences along each branch therefore evaluates the whole sum in O(N):
//   Q_p = e^{u_{p-1}-u_p} Q_{p-1} + lhat w f   (inner accumulation)
//   R_p = e^{u_p-u_{p+1}} (R_{p+1} + khat w f) (outer accumulation)
// with u = lambda(|x|-1).  Every factor is <= 1, so the sweeps are stable
// and never overflow.
void kl_sweep(const KernelTable& T, const GridFunction& f, const std::vector<int>& list,
              std::vector<double>& out) {
    const auto& w = T.grid->weights();
    const double vlp = T.c.v * T.c.lambda_pow;
    const int m = static_cast<int>(list.size());
    std::vector<double> Q(m), R(m);
    {
        const int j = list[0];
        Q[0] = T.lhat[j] * w[j] * f[j];
    }
    for (int p = 1; p < m; ++p) {
        const int j = list[p];
        Q[p] = std::exp(T.texp[list[p - 1]] - T.texp[j]) * Q[p - 1] + T.lhat[j] * w[j] * f[j];
    }
    R[m - 1] = 0.0;
    for (int p = m - 2; p >= 0; --p) {
        const int j = list[p + 1];
        R[p] = std::exp(T.texp[list[p]] - T.texp[j]) * (R[p + 1] + T.khat[j] * w[j] * f[j]);
    }
    for (int p = 0; p < m; ++p) {
        const int i = list[p];
        out[i] += vlp * (T.khat[i] * Q[p] + T.lhat[i] * R[p]);
    }
}

} // namespace

GridFunction apply_resolvent(const GridFunction& f, const KernelTable& table, Exec) {
    const Grid& g = *table.grid;
    if (f.grid()->id() != g.id()) throw ValidationError("apply_resolvent: grid mismatch");
    const int N = f.size();
    const int jc = g.junction_index();
    const auto& w = g.weights();
    const auto& sign = g.branch();

    // Branch sums of the decaying factor for the rank-one kk parts.
    double Splus = 0.0, Sminus = 0.0, S0 = 0.0;
    for (int j = 0; j < N; ++j) {
        const double phi = table.khat[j] * table.edec[j] * w[j] * f[j];
        if (sign[j] > 0)
            Splus += phi;
        else if (sign[j] < 0)
            Sminus += phi;
        else
            S0 = phi;
    }

    GridFunction out(f.grid());
    const double Ahat = table.c.a_hat, Bhat = table.c.b_hat;
    for (int i = 0; i < N; ++i) {
        const double ke = table.khat[i] * table.edec[i];
        if (sign[i] > 0)
            out[i] = ke * (Bhat * (Splus + S0) + Ahat * Sminus);
        else if (sign[i] < 0)
            out[i] = ke * (Bhat * (Sminus + S0) + Ahat * Splus);
        else
            out[i] = ke * Bhat * (Splus + Sminus + S0);
    }

    // kl sweeps per branch.  The junction belongs to both sweep lists but
    // its pairings must be counted once: the positive sweep covers the
    // junction row's positive partners and the self pair, the negative
    // sweep is merged for strictly negative rows only, and the junction's
    // negative partners are added explicitly.
    std::vector<int> list;
    list.reserve(N - jc);
    for (int i = jc; i < N; ++i) list.push_back(i);
    kl_sweep(table, f, list, out.values());
    list.clear();
    for (int i = jc; i >= 0; --i) list.push_back(i);
    std::vector<double> neg(N, 0.0);
    kl_sweep(table, f, list, neg);
    for (int i = 0; i < jc; ++i) out[i] += neg[i];
    {
        double acc = 0.0;
        for (int j = 0; j < jc; ++j)
            acc += table.khat[j] * table.edec[j] * w[j] * f[j];
        out[jc] += table.c.v * table.c.lambda_pow * table.lhat[jc] * acc;
    }
    return out;
}

GridFunction apply_resolvent_dense(const GridFunction& f, const ResolventKernel& kernel,
                                   Exec exec) {
    const Grid& g = *f.grid();
    const int N = g.size();
    const auto& w = g.weights();
    GridFunction out(f.grid());
    // Each output row is summed serially in index order by one thread, so
    // serial and parallel runs agree bitwise.
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (int i = 0; i < N; ++i) {
        const double xi = g.coordinate(i);
        double acc = 0.0;
        for (int j = 0; j < N; ++j) {
            if (f[j] == 0.0) continue;
            acc += w[j] * kernel.value(xi, g.coordinate(j)) * f[j];
        }
        out[i] = acc;
    }
    return out;
}

GridFunction apply_resolvent(const GridFunction& f, double lambda, ResolventCache& cache, Exec exec) {
    auto table = cache.get(f.grid(), lambda);
    return apply_resolvent(f, *table, exec);
}

} // namespace brokenline
