#include "brokenline/scan.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"

namespace brokenline {

using nlohmann::json;

ScanConfig default_config(const std::string& subcommand) {
    ScanConfig c;
    if (subcommand == "scan-riesz") {
        c.grid = GridConfig{12000.0, 3500, Spacing::Geometric, 300.0};
        c.family = FamilyConfig{"harmonic_tail", 6, 4.0, 4.0, 0.0};
        c.quad.rel_tol = 1e-5;
    } else if (subcommand == "scan-reverse-riesz") {
        c.grid = GridConfig{1500.0, 3000, Spacing::Geometric, 100.0};
        c.family = FamilyConfig{"dilate", 6, 4.0, 3.0, 1.0 / 3.0};
        c.quad.rel_tol = 1e-5;
    } else if (subcommand == "hardy") {
        c.grid = GridConfig{150.0, 2000, Spacing::Geometric, 30.0};
        c.family = FamilyConfig{"hardy_stress", 5, 4.0, 2.0, 0.0};
        c.p_list = {1.0, 1.5, 2.0, 2.5, 3.0, 4.0};
    } else if (subcommand == "annihilate") {
        c.grid = GridConfig{50.0, 3000, Spacing::Geometric, 10.0};
        c.d_list = {2.5, 3.0, 4.0};
    } else if (subcommand == "verify-kernel") {
        c.d_list = {1.5, 2.0, 2.5, 3.0, 4.0};
    } else if (subcommand == "verify-calculus") {
        c.d_list = {2.0, 3.0};
        c.grid = GridConfig{50.0, 1000, Spacing::Geometric, 10.0};
    }
    return c;
}

namespace {

Spacing spacing_from_string(const std::string& s) {
    if (s == "uniform") return Spacing::Uniform;
    if (s == "geometric") return Spacing::Geometric;
    throw ValidationError("config: spacing must be 'uniform' or 'geometric'");
}

std::string spacing_to_string(Spacing s) {
    return s == Spacing::Uniform ? "uniform" : "geometric";
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys,
                    const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys)
            if (it.key() == k) known = true;
        if (!known) throw ValidationError("config: unknown key '" + it.key() + "' in " + where);
    }
}

} // namespace

ScanConfig load_config(const std::string& path, const std::string& subcommand) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: parse error: ") + e.what());
    }
    ScanConfig c = default_config(subcommand);
    reject_unknown(j,
                   {"d_list", "p_list", "grid", "family", "quadrature", "corrector", "flags",
                    "checks", "riesz_ratio", "seed", "threads", "deterministic_output",
                    "out_dir"},
                   "top level");
    c.d_list = j.value("d_list", c.d_list);
    c.p_list = j.value("p_list", c.p_list);
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        reject_unknown(g, {"L", "nodes_per_branch", "spacing", "spacing_ratio"}, "grid");
        c.grid.L = g.value("L", c.grid.L);
        c.grid.nodes_per_branch = g.value("nodes_per_branch", c.grid.nodes_per_branch);
        if (g.contains("spacing")) c.grid.spacing = spacing_from_string(g["spacing"]);
        c.grid.spacing_ratio = g.value("spacing_ratio", c.grid.spacing_ratio);
    }
    if (j.contains("family")) {
        const auto& f = j["family"];
        reject_unknown(f, {"name", "count", "base_center", "step_ratio", "scale_factor"}, "family");
        c.family.name = f.value("name", c.family.name);
        c.family.count = f.value("count", c.family.count);
        c.family.base_center = f.value("base_center", c.family.base_center);
        c.family.step_ratio = f.value("step_ratio", c.family.step_ratio);
        c.family.scale_factor = f.value("scale_factor", c.family.scale_factor);
    }
    if (j.contains("quadrature")) {
        const auto& q = j["quadrature"];
        reject_unknown(q,
                       {"lambda_min", "lambda_switch", "lambda_max", "lambda_max_factor",
                        "kernel_min_factor", "gauss_points", "max_doublings", "rel_tol",
                        "tail_terms", "extend_to_zero"},
                       "quadrature");
        c.quad.lambda_min = q.value("lambda_min", c.quad.lambda_min);
        c.quad.lambda_switch = q.value("lambda_switch", c.quad.lambda_switch);
        c.quad.lambda_max = q.value("lambda_max", c.quad.lambda_max);
        c.quad.lambda_max_factor = q.value("lambda_max_factor", c.quad.lambda_max_factor);
        c.quad.kernel_min_factor = q.value("kernel_min_factor", c.quad.kernel_min_factor);
        c.quad.gauss_points = q.value("gauss_points", c.quad.gauss_points);
        c.quad.max_doublings = q.value("max_doublings", c.quad.max_doublings);
        c.quad.rel_tol = q.value("rel_tol", c.quad.rel_tol);
        c.quad.tail_terms = q.value("tail_terms", c.quad.tail_terms);
        c.quad.extend_to_zero = q.value("extend_to_zero", c.quad.extend_to_zero);
    }
    if (j.contains("corrector")) {
        const auto& e = j["corrector"];
        reject_unknown(e, {"base", "ratio", "count", "noncauchy_ratio"}, "corrector");
        c.corrector.base = e.value("base", c.corrector.base);
        c.corrector.ratio = e.value("ratio", c.corrector.ratio);
        c.corrector.count = e.value("count", c.corrector.count);
        c.corrector.noncauchy_ratio = e.value("noncauchy_ratio", c.corrector.noncauchy_ratio);
    }
    if (j.contains("flags")) {
        const auto& f = j["flags"];
        reject_unknown(f, {"growth_threshold", "last_quarter"}, "flags");
        c.flags.growth_threshold = f.value("growth_threshold", c.flags.growth_threshold);
        c.flags.last_quarter = f.value("last_quarter", c.flags.last_quarter);
    }
    if (j.contains("checks")) {
        const auto& k = j["checks"];
        reject_unknown(k,
                       {"symmetry_tol", "reflection_tol", "jump_rel_tol", "coeff_ratio_max",
                        "decay_c_min", "decay_min_dist", "oracle_rel_tol", "energy_rel_tol",
                        "riesz_l2_tol", "selfadjoint_tol", "annihilation_defect_tol",
                        "annihilation_floor", "boundary_inflation_min", "bound_percentile",
                        "refine_stability", "hardy_margin", "defect_refine_max", "t_q",
                        "weak_q", "weak_spread_max", "sample_pairs", "oracle_max_size"},
                       "checks");
        c.checks.symmetry_tol = k.value("symmetry_tol", c.checks.symmetry_tol);
        c.checks.reflection_tol = k.value("reflection_tol", c.checks.reflection_tol);
        c.checks.jump_rel_tol = k.value("jump_rel_tol", c.checks.jump_rel_tol);
        c.checks.coeff_ratio_max = k.value("coeff_ratio_max", c.checks.coeff_ratio_max);
        c.checks.decay_c_min = k.value("decay_c_min", c.checks.decay_c_min);
        c.checks.decay_min_dist = k.value("decay_min_dist", c.checks.decay_min_dist);
        c.checks.oracle_rel_tol = k.value("oracle_rel_tol", c.checks.oracle_rel_tol);
        c.checks.energy_rel_tol = k.value("energy_rel_tol", c.checks.energy_rel_tol);
        c.checks.riesz_l2_tol = k.value("riesz_l2_tol", c.checks.riesz_l2_tol);
        c.checks.selfadjoint_tol = k.value("selfadjoint_tol", c.checks.selfadjoint_tol);
        c.checks.annihilation_defect_tol =
            k.value("annihilation_defect_tol", c.checks.annihilation_defect_tol);
        c.checks.annihilation_floor = k.value("annihilation_floor", c.checks.annihilation_floor);
        c.checks.boundary_inflation_min =
            k.value("boundary_inflation_min", c.checks.boundary_inflation_min);
        c.checks.bound_percentile = k.value("bound_percentile", c.checks.bound_percentile);
        c.checks.refine_stability = k.value("refine_stability", c.checks.refine_stability);
        c.checks.hardy_margin = k.value("hardy_margin", c.checks.hardy_margin);
        c.checks.defect_refine_max = k.value("defect_refine_max", c.checks.defect_refine_max);
        c.checks.t_q = k.value("t_q", c.checks.t_q);
        c.checks.weak_q = k.value("weak_q", c.checks.weak_q);
        c.checks.weak_spread_max = k.value("weak_spread_max", c.checks.weak_spread_max);
        c.checks.sample_pairs = k.value("sample_pairs", c.checks.sample_pairs);
        c.checks.oracle_max_size = k.value("oracle_max_size", c.checks.oracle_max_size);
    }
    c.riesz_ratio = j.value("riesz_ratio", c.riesz_ratio);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.deterministic_output = j.value("deterministic_output", c.deterministic_output);
    c.out_dir = j.value("out_dir", c.out_dir);
    validate_config(c);
    return c;
}

void validate_config(const ScanConfig& c) {
    if (c.d_list.empty()) throw ValidationError("config: d_list must be non-empty");
    for (double d : c.d_list)
        if (!(d > 1.0)) throw ValidationError("config: every d must exceed 1");
    if (c.p_list.empty()) throw ValidationError("config: p_list must be non-empty");
    for (double p : c.p_list)
        if (!(p >= 1.0)) throw ValidationError("config: every p must be at least 1");
    if (!(c.grid.L > 1.0)) throw ValidationError("config: grid.L must exceed 1");
    if (c.grid.nodes_per_branch < 64) throw ValidationError("config: grid too small");
    if (c.family.count < 1) throw ValidationError("config: family.count must be positive");
    if (c.quad.lambda_min < kLambdaFloor)
        throw ValidationError("config: quadrature.lambda_min violates the kernel assembly floor");
    if (!(c.quad.lambda_switch > c.quad.lambda_min))
        throw ValidationError("config: lambda_switch must exceed lambda_min");
    if (c.quad.gauss_points < 2 || c.quad.max_doublings < 0)
        throw ValidationError("config: malformed quadrature block settings");
    if (!(c.flags.last_quarter > 0) || !(c.flags.last_quarter <= 1))
        throw ValidationError("config: flags.last_quarter must lie in (0, 1]");
    if (c.riesz_ratio != "gradient" && c.riesz_ratio != "transform")
        throw ValidationError("config: riesz_ratio must be 'gradient' or 'transform'");
}

namespace {

json config_json(const ScanConfig& c) {
    json j;
    j["d_list"] = c.d_list;
    j["p_list"] = c.p_list;
    j["grid"] = {{"L", c.grid.L},
                 {"nodes_per_branch", c.grid.nodes_per_branch},
                 {"spacing", spacing_to_string(c.grid.spacing)},
                 {"spacing_ratio", c.grid.spacing_ratio}};
    j["family"] = {{"name", c.family.name},
                   {"count", c.family.count},
                   {"base_center", c.family.base_center},
                   {"step_ratio", c.family.step_ratio},
                   {"scale_factor", c.family.scale_factor}};
    j["quadrature"] = {{"lambda_min", c.quad.lambda_min},
                       {"lambda_switch", c.quad.lambda_switch},
                       {"lambda_max", c.quad.lambda_max},
                       {"lambda_max_factor", c.quad.lambda_max_factor},
                       {"kernel_min_factor", c.quad.kernel_min_factor},
                       {"gauss_points", c.quad.gauss_points},
                       {"max_doublings", c.quad.max_doublings},
                       {"rel_tol", c.quad.rel_tol},
                       {"tail_terms", c.quad.tail_terms},
                       {"extend_to_zero", c.quad.extend_to_zero}};
    j["corrector"] = {{"base", c.corrector.base},
                      {"ratio", c.corrector.ratio},
                      {"count", c.corrector.count},
                      {"noncauchy_ratio", c.corrector.noncauchy_ratio}};
    j["flags"] = {{"growth_threshold", c.flags.growth_threshold},
                  {"last_quarter", c.flags.last_quarter}};
    j["checks"] = {{"symmetry_tol", c.checks.symmetry_tol},
                   {"reflection_tol", c.checks.reflection_tol},
                   {"jump_rel_tol", c.checks.jump_rel_tol},
                   {"coeff_ratio_max", c.checks.coeff_ratio_max},
                   {"decay_c_min", c.checks.decay_c_min},
                   {"decay_min_dist", c.checks.decay_min_dist},
                   {"oracle_rel_tol", c.checks.oracle_rel_tol},
                   {"energy_rel_tol", c.checks.energy_rel_tol},
                   {"riesz_l2_tol", c.checks.riesz_l2_tol},
                   {"selfadjoint_tol", c.checks.selfadjoint_tol},
                   {"annihilation_defect_tol", c.checks.annihilation_defect_tol},
                   {"annihilation_floor", c.checks.annihilation_floor},
                   {"boundary_inflation_min", c.checks.boundary_inflation_min},
                   {"bound_percentile", c.checks.bound_percentile},
                   {"refine_stability", c.checks.refine_stability},
                   {"hardy_margin", c.checks.hardy_margin},
                   {"defect_refine_max", c.checks.defect_refine_max},
                   {"t_q", c.checks.t_q},
                   {"weak_q", c.checks.weak_q},
                   {"weak_spread_max", c.checks.weak_spread_max},
                   {"sample_pairs", c.checks.sample_pairs},
                   {"oracle_max_size", c.checks.oracle_max_size}};
    j["riesz_ratio"] = c.riesz_ratio;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["deterministic_output"] = c.deterministic_output;
    j["out_dir"] = c.out_dir;
    return j;
}

} // namespace

std::string config_to_json(const ScanConfig& c) { return config_json(c).dump(2) + "\n"; }

namespace {

TestFamily scan_family(const ScanConfig& c, const GridPtr& grid) {
    std::vector<std::pair<double, double>> params;
    double center = c.family.base_center;
    for (int i = 0; i < c.family.count; ++i) {
        // dilates scale with their center; the other families take the
        // scale parameter verbatim (exponent, width, ramp base)
        const double scale = c.family.name == "dilate" ? c.family.scale_factor * center
                                                       : c.family.scale_factor;
        params.emplace_back(center, scale);
        center *= c.family.step_ratio;
    }
    return make_family(c.family.name, grid, params);
}

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

} // namespace

ScanReport run_scan(ScanKind kind, const ScanConfig& c) {
    validate_config(c);
    const auto t_start = std::chrono::steady_clock::now();
    ScanReport report;
    report.subcommand = kind == ScanKind::Riesz        ? "scan-riesz"
                        : kind == ScanKind::ReverseRiesz ? "scan-reverse-riesz"
                                                         : "hardy";
    for (double d : c.d_list) {
        const GridPtr grid = build_grid(Dimension(d), c.grid.L, c.grid.nodes_per_branch,
                                        c.grid.spacing, c.grid.spacing_ratio);
        TestFamily family = scan_family(c, grid);
        ResolventCache cache;
        // ratios[p index][member index]
        std::vector<std::vector<double>> ratios(c.p_list.size());
        for (int m = 0; m < static_cast<int>(family.members.size()); ++m) {
            const auto t_row = std::chrono::steady_clock::now();
            const GridFunction& f = family.members[m];
            GridFunction transform(grid);
            bool have_transform = false;
            try {
                if (kind == ScanKind::Riesz && c.riesz_ratio == "transform")
                    transform = riesz_transform(f, c.quad, cache);
                else if (kind == ScanKind::Riesz || kind == ScanKind::ReverseRiesz)
                    transform = sqrt_laplacian(f, c.quad, cache);
                have_transform = true;
            } catch (const NumericalError& e) {
                report.errors.push_back(report.subcommand + " d=" + std::to_string(d) +
                                        " member=" + std::to_string(m) + ": " + e.what());
            }
            if (!have_transform && kind != ScanKind::Hardy) continue;
            const GridFunction fprime = derivative(f);
            const double row_ms = elapsed_ms(t_row);
            for (std::size_t pi = 0; pi < c.p_list.size(); ++pi) {
                const double p = c.p_list[pi];
                ScanRow row;
                row.d = d;
                row.p = p;
                row.family = family.name;
                row.member_index = m;
                row.grid_n = grid->size();
                row.grid_L = c.grid.L;
                row.quad_tol = c.quad.rel_tol;
                row.wall_ms = row_ms;
                try {
                    if (kind == ScanKind::Riesz && c.riesz_ratio == "transform") {
                        row.norm_num = weighted_lp_norm(transform, p);
                        row.norm_den = weighted_lp_norm(f, p);
                    } else if (kind == ScanKind::Riesz) {
                        row.norm_num = weighted_lp_norm(fprime, p);
                        row.norm_den = weighted_lp_norm(transform, p);
                    } else if (kind == ScanKind::ReverseRiesz) {
                        row.norm_num = weighted_lp_norm(transform, p);
                        row.norm_den = weighted_lp_norm(fprime, p);
                    } else {
                        GridFunction scaled(grid);
                        for (int i = 0; i < f.size(); ++i) scaled[i] = f[i] / grid->radius()[i];
                        row.norm_num = weighted_lp_norm(scaled, p);
                        row.norm_den = weighted_lp_norm(fprime, p);
                    }
                    if (!(row.norm_den > 0)) throw NumericalError("zero denominator norm");
                    row.ratio = row.norm_num / row.norm_den;
                    if (!std::isfinite(row.ratio)) throw NumericalError("non-finite ratio");
                } catch (const NumericalError& e) {
                    report.errors.push_back(report.subcommand + " d=" + std::to_string(d) +
                                            " p=" + std::to_string(p) +
                                            " member=" + std::to_string(m) + ": " + e.what());
                    continue;
                }
                ratios[pi].push_back(row.ratio);
                report.rows.push_back(std::move(row));
            }
        }
        for (std::size_t pi = 0; pi < c.p_list.size(); ++pi) {
            const auto& r = ratios[pi];
            if (r.size() < 2) continue;
            ScanFlag flag;
            flag.d = d;
            flag.p = c.p_list[pi];
            const int q = std::max<int>(1, static_cast<int>(std::floor(c.flags.last_quarter *
                                                                       (r.size() - 1))));
            const double base = r[r.size() - 1 - q];
            flag.last_quarter_growth = base > 0 ? r.back() / base - 1.0 : 0.0;
            flag.bounded = flag.last_quarter_growth < c.flags.growth_threshold;
            flag.monotone_increasing = true;
            for (std::size_t i = 0; i + 1 < r.size(); ++i)
                if (!(r[i + 1] > r[i])) flag.monotone_increasing = false;
            flag.sup_ratio = *std::max_element(r.begin(), r.end());
            report.flags.push_back(flag);
        }
    }
    report.wall_ms_total = elapsed_ms(t_start);
    return report;
}

std::string report_to_csv(const ScanReport& report, bool deterministic_output) {
    std::string out = "d,p,family,member_index,ratio,norm_num,norm_den,grid_n,grid_L,quad_tol,wall_ms\n";
    char buf[512];
    for (const auto& r : report.rows) {
        const double wall = deterministic_output ? 0.0 : r.wall_ms;
        std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%s,%d,%.12g,%.12g,%.12g,%d,%.12g,%.12g,%.12g\n",
                      r.d, r.p, r.family.c_str(), r.member_index, r.ratio, r.norm_num, r.norm_den,
                      r.grid_n, r.grid_L, r.quad_tol, wall);
        out += buf;
    }
    return out;
}

std::string report_to_json(const ScanReport& report, const ScanConfig& config) {
    json j;
    j["schema_version"] = report.schema_version;
    j["subcommand"] = report.subcommand;
    j["version"] = kLibraryVersion;
    j["config"] = config_json(config);
    j["flag_semantics"] = "bounded = last-quarter ratio growth below flags.growth_threshold; "
                          "a reporting heuristic, not a proof";
    json flags = json::array();
    for (const auto& f : report.flags)
        flags.push_back({{"d", f.d},
                         {"p", f.p},
                         {"bounded", f.bounded},
                         {"monotone_increasing", f.monotone_increasing},
                         {"last_quarter_growth", f.last_quarter_growth},
                         {"sup_ratio", f.sup_ratio}});
    j["flags"] = flags;
    j["errors"] = report.errors;
    j["row_count"] = report.rows.size();
    j["wall_ms_total"] = report.wall_ms_total;
    if (!report.extra_json.empty()) j["extra"] = json::parse(report.extra_json);
    return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open output file '" + path + "'");
    out << content;
    if (!out) throw NumericalError("failed writing '" + path + "'");
}

} // namespace brokenline
