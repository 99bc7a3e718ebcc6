// Benchmark of the resolvent application paths: the O(N^2) dense double
// sum (serial vs OpenMP rows) against the O(N) semi-separable sweep, plus
// a full sqrt_laplacian timing.  Also asserts that all paths agree.
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>

#include "brokenline/calculus.hpp"
#include "brokenline/resolvent.hpp"

using namespace brokenline;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

double max_rel_diff(const GridFunction& a, const GridFunction& b) {
    double worst = 0.0, scale = 0.0;
    for (int i = 0; i < a.size(); ++i) scale = std::max(scale, std::abs(b[i]));
    for (int i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst / (scale > 0 ? scale : 1.0);
}

} // namespace

int main(int argc, char** argv) {
    const int reps = argc > 1 ? std::atoi(argv[1]) : 3;
    std::printf("threads=%d reps=%d\n", omp_get_max_threads(), reps);
    std::printf("%8s %14s %14s %14s %10s %12s\n", "N", "dense-serial", "dense-omp", "sweep",
                "speedup", "agree");

    for (int n : {400, 800, 1600, 3200}) {
        const GridPtr grid = build_grid(Dimension(3.0), 50.0, n, Spacing::Geometric);
        const TestFamily fam = default_s0_family(grid);
        const GridFunction& f = fam.members[1];
        const double lambda = 0.5;
        const ResolventKernel kernel(Dimension(3.0), lambda);
        auto table = build_kernel_table(grid, lambda);

        GridFunction r_serial(grid), r_omp(grid), r_sweep(grid);
        double t_serial = 1e300, t_omp = 1e300, t_sweep = 1e300;
        for (int r = 0; r < reps; ++r) {
            auto t0 = std::chrono::steady_clock::now();
            r_serial = apply_resolvent_dense(f, kernel, Exec::Serial);
            t_serial = std::min(t_serial, ms_since(t0));
            t0 = std::chrono::steady_clock::now();
            r_omp = apply_resolvent_dense(f, kernel, Exec::Parallel);
            t_omp = std::min(t_omp, ms_since(t0));
            t0 = std::chrono::steady_clock::now();
            r_sweep = apply_resolvent(f, *table);
            t_sweep = std::min(t_sweep, ms_since(t0));
        }
        const bool bitwise = [&] {
            for (int i = 0; i < r_serial.size(); ++i)
                if (r_serial[i] != r_omp[i]) return false;
            return true;
        }();
        const double agree = max_rel_diff(r_sweep, r_serial);
        std::printf("%8d %12.3fms %12.3fms %12.3fms %9.2fx %12.2e%s\n", grid->size(), t_serial,
                    t_omp, t_sweep, t_serial / t_omp, agree, bitwise ? "" : "  OMP-MISMATCH");
        if (!bitwise || agree > 1e-10) {
            std::fprintf(stderr, "path disagreement at n=%d\n", n);
            return 1;
        }
    }

    // full transform timing at a production-sized grid
    {
        const GridPtr grid = build_grid(Dimension(3.0), 50.0, 2000, Spacing::Geometric);
        const TestFamily fam = default_s0_family(grid);
        ResolventCache cache;
        QuadratureScheme scheme;
        auto t0 = std::chrono::steady_clock::now();
        GridFunction q = sqrt_laplacian(fam.members[1], scheme, cache);
        std::printf("sqrt_laplacian n=%d: %.1f ms (cold cache)\n", grid->size(), ms_since(t0));
        t0 = std::chrono::steady_clock::now();
        q = sqrt_laplacian(fam.members[2], scheme, cache);
        std::printf("sqrt_laplacian n=%d: %.1f ms (warm cache)\n", grid->size(), ms_since(t0));
    }
    return 0;
}
