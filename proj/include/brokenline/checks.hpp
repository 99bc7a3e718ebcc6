#pragma once

#include <string>
#include <vector>

#include "brokenline/scan.hpp"

namespace brokenline {

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0;     // observed quantity
    double threshold = 0; // what it was compared against
    std::string note;
};

/// Deterministic uniform generator for randomized spot checks (splitmix64
/// bits mapped to [0,1); identical output on every platform).
struct SpotRng {
    std::uint64_t state;
    explicit SpotRng(std::uint64_t seed) : state(seed) {}
    double uniform() {
        state += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        z = z ^ (z >> 31);
        return static_cast<double>(z >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

/// Kernel verification: symmetry, reflection, delta-jump normalization,
/// exponential decay fit, coefficient envelope ratios, positivity and the
/// exact kk+kl split, per dimension in config.d_list.
std::vector<CheckResult> verify_kernel_suite(const ScanConfig& config);

/// Functional-calculus verification against the spectral oracle:
/// kernel-resolvent vs matrix solve, quadrature sqrt vs oracle sqrt, the
/// energy identity, Riesz L2 isometry, eigenfunction mapping, composition,
/// self-adjointness and the scalar tail probe.
std::vector<CheckResult> verify_calculus_suite(const ScanConfig& config);

/// Annihilation-lab verification: defects, refinement decrease, boundary
/// sensitivity, corrector residual and the gradient-bound probes.
std::vector<CheckResult> annihilate_suite(const ScanConfig& config);

/// Hardy/T-operator verification: classical-constant cap for p < d, growth
/// at p >= d on the stress family, T pointwise bounds and the weak-type
/// profile.
std::vector<CheckResult> hardy_suite(const ScanConfig& config);

bool all_pass(const std::vector<CheckResult>& results);
std::string checks_to_json(const std::vector<CheckResult>& results);

} // namespace brokenline
