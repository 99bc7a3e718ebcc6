#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <sstream>

#include "brokenline/checks.hpp"
#include "brokenline/scan.hpp"

using namespace brokenline;

namespace {

ScanConfig small_config() {
    ScanConfig c = default_config("scan-reverse-riesz");
    c.grid = GridConfig{150.0, 400, Spacing::Geometric, 20.0};
    c.family = FamilyConfig{"dilate", 3, 4.0, 2.0, 1.0 / 3.0};
    c.d_list = {2.5};
    c.p_list = {1.5, 3.0};
    return c;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("config validation") {
    ScanConfig c = default_config("scan-riesz");
    CHECK_NOTHROW(validate_config(c));
    ScanConfig bad = c;
    bad.d_list = {0.9};
    CHECK_THROWS_AS(validate_config(bad), ValidationError);
    bad = c;
    bad.p_list.clear();
    CHECK_THROWS_AS(validate_config(bad), ValidationError);
    bad = c;
    bad.quad.lambda_min = 1e-12; // violates the kernel assembly floor
    CHECK_THROWS_AS(validate_config(bad), ValidationError);
    bad = c;
    bad.riesz_ratio = "sideways";
    CHECK_THROWS_AS(validate_config(bad), ValidationError);
    bad = c;
    bad.family.count = 0; // empty family
    CHECK_THROWS_AS(validate_config(bad), ValidationError);
}

TEST_CASE("quadrature failures are recorded per row, scans do not abort") {
    ScanConfig c = small_config();
    c.quad.gauss_points = 2;
    c.quad.max_doublings = 0;
    c.quad.rel_tol = 1e-15;
    ScanReport rep = run_scan(ScanKind::ReverseRiesz, c);
    CHECK(!rep.errors.empty());
    CHECK(rep.rows.empty());
    // the report itself is still serializable
    CHECK(!report_to_json(rep, c).empty());
}

TEST_CASE("config JSON round trip and unknown keys") {
    const char* path = "test_config_roundtrip.json";
    ScanConfig c = default_config("hardy");
    c.seed = 777;
    c.quad.rel_tol = 2e-5;
    write_file(path, config_to_json(c));
    ScanConfig back = load_config(path, "hardy");
    CHECK(back.seed == 777);
    CHECK(back.quad.rel_tol == 2e-5);
    CHECK(back.family.name == "hardy_stress");

    write_file(path, "{\"grid\": {\"nodes\": 17}}\n");
    CHECK_THROWS_AS(load_config(path, "hardy"), ValidationError);
    write_file(path, "not json");
    CHECK_THROWS_AS(load_config(path, "hardy"), ValidationError);
    std::filesystem::remove(path);
}

TEST_CASE("scan report schema and determinism across thread counts") {
    ScanConfig c = small_config();
    ScanReport rep = run_scan(ScanKind::ReverseRiesz, c);
    CHECK(rep.rows.size() == 6); // 3 members x 2 exponents
    CHECK(rep.errors.empty());
    for (const auto& r : rep.rows) {
        CHECK(std::isfinite(r.ratio));
        CHECK(r.ratio > 0);
        CHECK(r.grid_n == 799);
        CHECK(r.grid_L == 150.0);
    }
    const std::string csv = report_to_csv(rep, true);
    CHECK(csv.rfind("d,p,family,member_index,ratio,norm_num,norm_den,grid_n,grid_L,quad_tol,wall_ms\n",
                    0) == 0);
    // one header plus one line per row
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);

    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    ScanReport rep1 = run_scan(ScanKind::ReverseRiesz, c);
    omp_set_num_threads(2);
    ScanReport rep2 = run_scan(ScanKind::ReverseRiesz, c);
    omp_set_num_threads(saved);
    CHECK(report_to_csv(rep1, true) == report_to_csv(rep2, true));

    // the JSON carries flags and the config echo
    const std::string js = report_to_json(rep, c);
    CHECK(js.find("\"schema_version\"") != std::string::npos);
    CHECK(js.find("\"flags\"") != std::string::npos);
    CHECK(js.find("\"growth_threshold\"") != std::string::npos);
}

TEST_CASE("riesz transform ratio over dilates: bounded at p=2, monotone growth at p=4") {
    ScanConfig c = default_config("scan-riesz");
    c.grid = GridConfig{1500.0, 1500, Spacing::Geometric, 100.0};
    c.family = FamilyConfig{"dilate", 6, 4.0, 3.0, 1.0 / 3.0};
    c.riesz_ratio = "transform";
    c.quad.rel_tol = 1e-4;
    c.d_list = {3.0};
    c.p_list = {2.0, 4.0};
    ScanReport rep = run_scan(ScanKind::Riesz, c);
    CHECK(rep.errors.empty());
    for (const auto& f : rep.flags) {
        if (f.p == 2.0) {
            CHECK(f.bounded);
            CHECK(f.sup_ratio == doctest::Approx(1.0).epsilon(2e-2));
        } else {
            CHECK(f.monotone_increasing); // the slow power-law onset of the obstruction
        }
    }
}

TEST_CASE("hardy scan rows carry the expected family") {
    ScanConfig c = default_config("hardy");
    c.grid = GridConfig{150.0, 600, Spacing::Geometric, 20.0};
    c.family.count = 3;
    c.d_list = {3.0};
    c.p_list = {2.0, 3.0};
    ScanReport rep = run_scan(ScanKind::Hardy, c);
    CHECK(rep.rows.size() == 6);
    for (const auto& r : rep.rows) CHECK(r.family == "hardy_stress");
    // p = 3 = d ratios grow along the stress family
    std::vector<double> r3;
    for (const auto& r : rep.rows)
        if (r.p == 3.0) r3.push_back(r.ratio);
    for (std::size_t i = 0; i + 1 < r3.size(); ++i) CHECK(r3[i + 1] > r3[i]);
}

TEST_CASE("check suites pass on compact configs") {
    ScanConfig c = default_config("verify-kernel");
    c.d_list = {2.0, 3.0};
    c.checks.sample_pairs = 40;
    const auto results = verify_kernel_suite(c);
    CHECK(all_pass(results));
    const std::string js = checks_to_json(results);
    CHECK(js.find("kernel_delta_jump") != std::string::npos);
}

#ifndef CLI_PATH
#define CLI_PATH "./brokenline"
#endif

TEST_CASE("command line end to end") {
    namespace fs = std::filesystem;
    const std::string out = "cli_test_out";
    fs::remove_all(out);

    // config error path: exit code 2
    write_file("cli_bad.json", "{\"d_list\": [0.5]}\n");
    int rc = std::system((std::string(CLI_PATH) + " scan-reverse-riesz --config cli_bad.json --out " +
                          out + " > /dev/null 2>&1")
                             .c_str());
    CHECK(WEXITSTATUS(rc) == 2);
    fs::remove("cli_bad.json");

    // contract violation path: exit code 1 under an impossible tolerance
    write_file("cli_strict.json",
               "{\"d_list\": [3.0], \"checks\": {\"symmetry_tol\": 1e-30}}\n");
    rc = std::system((std::string(CLI_PATH) + " verify-kernel --config cli_strict.json --out " +
                      out + " > /dev/null 2>&1")
                         .c_str());
    CHECK(WEXITSTATUS(rc) == 1);
    fs::remove("cli_strict.json");

    // small but real scan: exit 0, file pair written, determinism across reruns
    ScanConfig c = small_config();
    write_file("cli_small.json", config_to_json(c));
    const std::string cmd = std::string(CLI_PATH) +
                            " scan-reverse-riesz --config cli_small.json --out " + out +
                            " > /dev/null 2>&1";
    rc = std::system((cmd).c_str());
    CHECK(WEXITSTATUS(rc) == 0);
    const std::string csv1 = slurp(out + "/scan-reverse-riesz.csv");
    CHECK(!csv1.empty());
    CHECK(!slurp(out + "/scan-reverse-riesz.json").empty());
    rc = std::system((std::string(CLI_PATH) + " scan-reverse-riesz --config cli_small.json "
                                              "--threads 1 --out " +
                      out + " > /dev/null 2>&1")
                         .c_str());
    CHECK(WEXITSTATUS(rc) == 0);
    CHECK(slurp(out + "/scan-reverse-riesz.csv") == csv1);

    // print-config emits the full tolerance set
    rc = std::system((std::string(CLI_PATH) + " print-config --for hardy > " + out +
                      "/config.json 2>/dev/null")
                         .c_str());
    CHECK(WEXITSTATUS(rc) == 0);
    const std::string cfg = slurp(out + "/config.json");
    CHECK(cfg.find("annihilation_defect_tol") != std::string::npos);
    CHECK(cfg.find("growth_threshold") != std::string::npos);
    fs::remove("cli_small.json");
    fs::remove_all(out);
}
