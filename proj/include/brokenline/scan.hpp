#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "brokenline/annihilation.hpp"
#include "brokenline/calculus.hpp"
#include "brokenline/grid.hpp"

namespace brokenline {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kLibraryVersion = "brokenline 0.1.0";

struct GridConfig {
    double L = 50.0;
    int nodes_per_branch = 1000;
    Spacing spacing = Spacing::Geometric;
    double spacing_ratio = 10.0;
};

struct FamilyConfig {
    std::string name = "dilate";
    int count = 6;
    double base_center = 4.0;  // first center (dilate) or first plateau end (hardy_stress)
    double step_ratio = 3.0;   // geometric progression of centers
    double scale_factor = 1.0 / 3.0; // dilate scale = center * scale_factor
};

struct FlagConfig {
    double growth_threshold = 0.05; // bounded iff last-quarter growth is below this
    double last_quarter = 0.25;
};

/// Tolerances of the verification suites.  Everything any check consumes
/// is here, with its default; the CLI echoes the complete set into the
/// emitted metadata.
struct CheckConfig {
    double symmetry_tol = 1e-12;
    double reflection_tol = 1e-12;
    double jump_rel_tol = 1e-6;
    double coeff_ratio_max = 50.0;
    double decay_c_min = 0.9;
    double decay_min_dist = 5.0;
    double oracle_rel_tol = 1e-3;
    double energy_rel_tol = 1e-3;
    double riesz_l2_tol = 2e-2;
    double selfadjoint_tol = 1e-6;
    double annihilation_defect_tol = 1e-5;
    double annihilation_floor = 1e-14;
    double boundary_inflation_min = 100.0;
    double bound_percentile = 0.95;
    double refine_stability = 0.25;
    double hardy_margin = 0.05;
    double defect_refine_max = 0.75; // defect(n)/defect(n/2) must stay below
    double t_q = 2.0;                // exponent for the T pointwise-bound fit
    double weak_q = 4.0;             // exponent for the weak-type profile
    double weak_spread_max = 10.0;   // max/min of the weak-type product
    int sample_pairs = 100;
    int oracle_max_size = 10000;
};

struct ScanConfig {
    std::vector<double> d_list{3.0};
    std::vector<double> p_list{1.1, 1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0};
    GridConfig grid;
    FamilyConfig family;
    QuadratureScheme quad;
    EpsilonSequence corrector;
    FlagConfig flags;
    CheckConfig checks;
    /// Riesz scan ratio: "gradient" rows are ||f'||_p / ||Delta^{1/2} f||_p,
    /// "transform" rows are ||grad Delta^{-1/2} g||_p / ||g||_p.
    std::string riesz_ratio = "gradient";
    std::uint64_t seed = 12345;
    int threads = 0; // 0 = runtime default
    bool deterministic_output = true;
    std::string out_dir = "out";
};

/// Subcommand-specific defaults (grid extent, families, p grids).
ScanConfig default_config(const std::string& subcommand);

/// Parse a JSON config file over the subcommand defaults; unknown keys are
/// rejected, missing keys keep their defaults.
ScanConfig load_config(const std::string& path, const std::string& subcommand);

/// Validation shared by every subcommand; throws ValidationError.
void validate_config(const ScanConfig& config);

std::string config_to_json(const ScanConfig& config);

struct ScanRow {
    double d = 0, p = 0;
    std::string family;
    int member_index = 0;
    double ratio = 0, norm_num = 0, norm_den = 0;
    int grid_n = 0;
    double grid_L = 0;
    double quad_tol = 0;
    double wall_ms = 0;
};

struct ScanFlag {
    double d = 0, p = 0;
    bool bounded = false;          // last-quarter growth below threshold
    bool monotone_increasing = false; // strict growth across the whole family
    double last_quarter_growth = 0;
    double sup_ratio = 0;
};

struct ScanReport {
    std::string subcommand;
    int schema_version = kReportSchemaVersion;
    std::vector<ScanRow> rows;
    std::vector<ScanFlag> flags;
    std::vector<std::string> errors; // per-row failures, scans never abort
    double wall_ms_total = 0;
    std::string extra_json; // subcommand-specific additions, JSON object text
};

enum class ScanKind { Riesz, ReverseRiesz, Hardy };

ScanReport run_scan(ScanKind kind, const ScanConfig& config);

/// Deterministic CSV with the stable column set
/// d,p,family,member_index,ratio,norm_num,norm_den,grid_n,grid_L,quad_tol,wall_ms.
/// With config.deterministic_output the wall_ms column is written as 0 so
/// reruns are byte-identical; measured timings stay in the JSON metadata.
std::string report_to_csv(const ScanReport& report, bool deterministic_output);

std::string report_to_json(const ScanReport& report, const ScanConfig& config);

void write_file(const std::string& path, const std::string& content);

} // namespace brokenline
