#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include "brokenline/grid.hpp"

namespace brokenline {

enum class Exec { Serial, Parallel };

/// Matching coefficients of the resolvent kernel of (Delta_d + lambda^2).
///
/// They are obtained by imposing the defining conditions directly:
/// continuity across the junction, derivative matching across the
/// junction, and the unit delta jump across the diagonal, rather than by
/// transcribing any closed form.  Stored in the exp-scaled form
/// a_hat = A e^{-2 lambda}, b_hat = B e^{-2 lambda} which stays
/// representable at every lambda; A(), B() themselves overflow for
/// lambda beyond ~350.
struct ResolventCoeffs {
    double d = 0;
    double lambda = 0;
    double a_hat = 0;
    double b_hat = 0;
    double v = 0;          // delta normalization constant
    double lambda_pow = 0; // lambda^{d-2}

    double a() const;
    double b() const;
};

/// Assembly floor: below this lambda the coefficients are evaluated at the
/// floor itself (d > 2 only, where the zero-energy limit exists).
inline constexpr double kLambdaFloor = 1e-8;

ResolventCoeffs solve_matching(double d, double lambda);

/// Pointwise evaluator of the resolvent kernel, its kk part (products of
/// two decaying solutions) and its kl part.  Evaluation is piecewise over
/// branch pairings and extended by the reflection rule
/// K(x,y) = K(-x,-y); the full kernel is always the exact floating sum
/// kk + kl.
class ResolventKernel {
public:
    ResolventKernel(Dimension dim, double lambda);

    const ResolventCoeffs& coeffs() const { return c_; }
    double lambda() const { return c_.lambda; }
    double dimension() const { return c_.d; }

    double value(double x, double y) const;
    double value_kk(double x, double y) const;
    double value_kl(double x, double y) const;

private:
    ResolventCoeffs c_;
};

/// Per-grid tabulation of the scaled kernel factors at one lambda; the
/// pieces every matrix-free application needs.
struct KernelTable {
    GridPtr grid;
    ResolventCoeffs c;
    std::vector<double> khat;  // e^{lambda |x_i|} k(lambda |x_i|)
    std::vector<double> lhat;  // e^{-lambda |x_i|} l(lambda |x_i|)
    std::vector<double> texp;  // lambda (|x_i| - 1)
    std::vector<double> edec;  // exp(-texp), 0 on deep underflow
    long underflow_nodes = 0;  // nodes whose decay factor underflowed to 0
};

std::shared_ptr<const KernelTable> build_kernel_table(const GridPtr& grid, double lambda);

/// Thread-safe insert-or-get cache keyed by (grid id, d, lambda); scans
/// revisit the same lambda nodes for every family member.
class ResolventCache {
public:
    std::shared_ptr<const KernelTable> get(const GridPtr& grid, double lambda);
    std::size_t size() const;
    void clear();

private:
    mutable std::mutex mutex_;
    std::map<std::tuple<std::uint64_t, double>, std::shared_ptr<const KernelTable>> map_;
};

/// g(x_i) = sum_j w_j K(x_i, x_j) f(x_j), the discrete action of
/// (Delta_d + lambda^2)^{-1}.  The kernel is semi-separable, so this runs
/// in O(N) via branch-ordered sweeps; the result is deterministic for any
/// thread count.
GridFunction apply_resolvent(const GridFunction& f, const KernelTable& table,
                             Exec exec = Exec::Parallel);

/// Convenience overload: lambda through a cache, d taken from the grid.
GridFunction apply_resolvent(const GridFunction& f, double lambda, ResolventCache& cache,
                             Exec exec = Exec::Parallel);

/// Direct O(N^2) double sum through the scalar kernel evaluator: the
/// reference implementation the sweep path is tested against, and the
/// benchmark kernel for the OpenMP-vs-serial comparison.  Rows are summed
/// serially in index order, so serial and parallel runs agree bitwise.
GridFunction apply_resolvent_dense(const GridFunction& f, const ResolventKernel& kernel,
                                   Exec exec = Exec::Parallel);

} // namespace brokenline
