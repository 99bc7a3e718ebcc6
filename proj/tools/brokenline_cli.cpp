#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"

#include "brokenline/checks.hpp"
#include "brokenline/scan.hpp"

namespace {

using namespace brokenline;

constexpr int kExitOk = 0;
constexpr int kExitContract = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

ScanConfig make_config(const std::string& subcommand, const std::string& config_path,
                       const std::string& out_dir, int threads, std::uint64_t seed,
                       bool seed_set) {
    ScanConfig c = config_path.empty() ? default_config(subcommand)
                                       : load_config(config_path, subcommand);
    if (!out_dir.empty()) c.out_dir = out_dir;
    if (threads > 0) c.threads = threads;
    if (seed_set) c.seed = seed;
    validate_config(c);
    if (c.threads > 0) omp_set_num_threads(c.threads);
    return c;
}

void write_pair(const ScanConfig& c, const std::string& subcommand, const std::string& csv,
                const std::string& json_text) {
    std::filesystem::create_directories(c.out_dir);
    const std::string base = c.out_dir + "/" + subcommand;
    write_file(base + ".csv", csv);
    write_file(base + ".json", json_text);
    std::printf("wrote %s.csv and %s.json\n", base.c_str(), base.c_str());
}

int run_check_command(const std::string& subcommand, const ScanConfig& config,
                      const std::vector<CheckResult>& results) {
    std::filesystem::create_directories(config.out_dir);
    write_file(config.out_dir + "/" + subcommand + ".json", checks_to_json(results));
    int failures = 0;
    for (const auto& r : results) {
        std::printf("[%s] %-44s value=%.6g threshold=%.6g%s%s\n", r.pass ? "PASS" : "FAIL",
                    r.name.c_str(), r.value, r.threshold, r.note.empty() ? "" : "  ",
                    r.note.c_str());
        if (!r.pass && failures++ == 0)
            std::fprintf(stderr, "first failing check: %s\n", r.name.c_str());
    }
    return failures == 0 ? kExitOk : kExitContract;
}

int run_scan_command(ScanKind kind, const std::string& subcommand, const ScanConfig& config) {
    ScanReport report = run_scan(kind, config);
    write_pair(config, subcommand, report_to_csv(report, config.deterministic_output),
               report_to_json(report, config));
    for (const auto& f : report.flags)
        std::printf("d=%-5g p=%-5g %-8s growth=%+.3f%% sup=%.6g\n", f.d, f.p,
                    f.bounded ? "bounded" : "growing", 100.0 * f.last_quarter_growth, f.sup_ratio);
    if (!report.errors.empty()) {
        for (const auto& e : report.errors) std::fprintf(stderr, "row error: %s\n", e.c_str());
        return kExitNumerical;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for the weighted Laplacian on the broken line"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir;
    int threads = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    app.add_option("--config", config_path, "JSON config file")->expected(1);
    app.add_option("--out", out_dir, "output directory")->expected(1);
    app.add_option("--threads", threads, "OpenMP thread count (0 = runtime default)");
    auto* seed_opt = app.add_option("--seed", seed, "seed for randomized spot checks");

    auto* sc_verify_kernel = app.add_subcommand("verify-kernel", "resolvent kernel invariants");
    auto* sc_scan_rr = app.add_subcommand("scan-reverse-riesz", "reverse Riesz ratio scan");
    auto* sc_scan_r = app.add_subcommand("scan-riesz", "Riesz ratio scan");
    auto* sc_hardy = app.add_subcommand("hardy", "Hardy ratio scan and T-operator bounds");
    auto* sc_annihilate = app.add_subcommand("annihilate", "harmonic annihilation suite");
    auto* sc_verify_calc = app.add_subcommand("verify-calculus", "oracle equivalence suite");
    auto* sc_print_config = app.add_subcommand("print-config", "print the effective config");
    std::string print_for = "scan-riesz";
    sc_print_config->add_option("--for", print_for, "subcommand whose defaults to print");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    seed_set = seed_opt->count() > 0;

    try {
        if (sc_print_config->parsed()) {
            const ScanConfig c = make_config(print_for, config_path, out_dir, threads, seed, seed_set);
            std::printf("%s", config_to_json(c).c_str());
            return kExitOk;
        }
        if (sc_verify_kernel->parsed()) {
            const ScanConfig c = make_config("verify-kernel", config_path, out_dir, threads, seed, seed_set);
            return run_check_command("verify-kernel", c, verify_kernel_suite(c));
        }
        if (sc_verify_calc->parsed()) {
            const ScanConfig c = make_config("verify-calculus", config_path, out_dir, threads, seed, seed_set);
            return run_check_command("verify-calculus", c, verify_calculus_suite(c));
        }
        if (sc_annihilate->parsed()) {
            const ScanConfig c = make_config("annihilate", config_path, out_dir, threads, seed, seed_set);
            return run_check_command("annihilate", c, annihilate_suite(c));
        }
        if (sc_scan_rr->parsed()) {
            const ScanConfig c = make_config("scan-reverse-riesz", config_path, out_dir, threads, seed, seed_set);
            return run_scan_command(ScanKind::ReverseRiesz, "scan-reverse-riesz", c);
        }
        if (sc_scan_r->parsed()) {
            const ScanConfig c = make_config("scan-riesz", config_path, out_dir, threads, seed, seed_set);
            return run_scan_command(ScanKind::Riesz, "scan-riesz", c);
        }
        if (sc_hardy->parsed()) {
            const ScanConfig c = make_config("hardy", config_path, out_dir, threads, seed, seed_set);
            // ratio rows and growth flags
            ScanReport report = run_scan(ScanKind::Hardy, c);
            // bundle the Hardy/T verification into the same command
            const auto results = hardy_suite(c);
            report.extra_json = checks_to_json(results);
            write_pair(c, "hardy", report_to_csv(report, c.deterministic_output),
                       report_to_json(report, c));
            int code = kExitOk;
            for (const auto& r : results) {
                std::printf("[%s] %-44s value=%.6g threshold=%.6g\n", r.pass ? "PASS" : "FAIL",
                            r.name.c_str(), r.value, r.threshold);
                if (!r.pass) code = kExitContract;
            }
            if (!report.errors.empty()) return kExitNumerical;
            return code;
        }
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "config/validation error: %s\n", e.what());
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    }
    return kExitConfig;
}
