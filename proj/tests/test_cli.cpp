#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string binary() {
    const char* bin = std::getenv("RDLAB_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "RDLAB_BIN must point at the CLI binary");
    return bin;
}

fs::path sandbox() {
    fs::path dir = fs::temp_directory_path() / "rdlab_cli_test";
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

int run_cli(const std::string& args) {
    std::string cmd = binary() + " " + args + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("analyze-potential writes a report and passes on the catalog") {
    fs::path dir = sandbox();
    write_file(dir / "newton.cfg", "dimension = 2\npotential = newtonian\n");
    int rc = run_cli("analyze-potential --config " + (dir / "newton.cfg").string() + " --out " +
                     (dir / "out_ap").string());
    CHECK(rc == 0);
    CHECK(fs::exists(dir / "out_ap" / "report.csv"));
    CHECK(fs::exists(dir / "out_ap" / "summary.txt"));
    CHECK(fs::exists(dir / "out_ap" / "resolved_config.txt"));
    std::string summary = slurp(dir / "out_ap" / "summary.txt");
    CHECK(summary.find("result = PASS") != std::string::npos);
    CHECK(summary.find("tolerance") != std::string::npos); // tolerances always listed
}

TEST_CASE("simulate runs and reports the mass law") {
    fs::path dir = sandbox();
    write_file(dir / "sim.cfg",
               "dimension = 1\ngrid_n = 128\nbox_half_width = 10\npotential = newtonian\n"
               "rho0 = gaussian 1 1\nimmigration = bump 0.5 1\ndt = 0.01\nt_end = 0.5\n");
    int rc = run_cli("simulate --config " + (dir / "sim.cfg").string() + " --out " +
                     (dir / "out_sim").string());
    CHECK(rc == 0);
    std::string head;
    {
        std::ifstream in(dir / "out_sim" / "diagnostics.csv");
        std::getline(in, head);
    }
    CHECK(head == "t,sup,l1,argmax_x,envelope,mass_residual");
}

TEST_CASE("identical invocations produce identical artifacts") {
    fs::path dir = sandbox();
    write_file(dir / "part.cfg",
               "dimension = 1\ngrid_n = 128\nbox_half_width = 10\nbranch_rate = 0.5\n"
               "bps_dt = 0.02\nn0 = 500\nrho0 = gaussian 1 1\nimmigration = bump 0.5 1\n"
               "t_end = 0.5\n");
    std::string base = "particles --config " + (dir / "part.cfg").string() + " --seed 99 --out ";
    CHECK(run_cli(base + (dir / "out_a").string()) == 0);
    CHECK(run_cli(base + (dir / "out_b").string()) == 0);
    CHECK(slurp(dir / "out_a" / "mass_series.csv") == slurp(dir / "out_b" / "mass_series.csv"));
    CHECK(slurp(dir / "out_a" / "snapshots.csv") == slurp(dir / "out_b" / "snapshots.csv"));
    CHECK(slurp(dir / "out_a" / "summary.txt") == slurp(dir / "out_b" / "summary.txt"));
}

TEST_CASE("configuration errors exit with code 2 and name the problem") {
    fs::path dir = sandbox();
    write_file(dir / "broken.cfg", "dimension = 1\npotential = dragon\n");
    CHECK(run_cli("analyze-potential --config " + (dir / "broken.cfg").string() + " --out " +
                  (dir / "out_broken").string()) == 2);
    write_file(dir / "badline.cfg", "dimension 1\n");
    CHECK(run_cli("analyze-potential --config " + (dir / "badline.cfg").string() + " --out " +
                  (dir / "out_badline").string()) == 2);
    CHECK(run_cli("analyze-potential --config /nonexistent.cfg --out " +
                  (dir / "out_missing").string()) == 2);
}

TEST_CASE("a numerical halt exits with code 3") {
    fs::path dir = sandbox();
    // strong attraction on a low blowup threshold
    write_file(dir / "blow.cfg",
               "dimension = 1\ngrid_n = 256\nbox_half_width = 10\n"
               "potential_term = -5 powerlaw 2\nkernel_representation = sampled\n"
               "rho0 = gaussian 2 1\nimmigration = zero\ndt = 0.002\nt_end = 2\n"
               "blowup_factor = 1.3\npositivity_tolerance = 1e-6\n");
    CHECK(run_cli("simulate --config " + (dir / "blow.cfg").string() + " --out " +
                  (dir / "out_blow").string()) == 3);
    std::string summary = slurp(dir / "out_blow" / "summary.txt");
    CHECK(summary.find("blowup") != std::string::npos);
}

TEST_CASE("strict mode halves the tolerances in the summary") {
    fs::path dir = sandbox();
    write_file(dir / "newton1.cfg", "dimension = 1\npotential = newtonian\n");
    CHECK(run_cli("analyze-potential --config " + (dir / "newton1.cfg").string() + " --strict" +
                  " --out " + (dir / "out_strict").string()) == 0);
    std::string summary = slurp(dir / "out_strict" / "summary.txt");
    CHECK(summary.find("strict = true") != std::string::npos);
    CHECK(summary.find("consistency_tolerance = 0.0005") != std::string::npos);
}

TEST_CASE("envelope-check fills the envelope column") {
    fs::path dir = sandbox();
    write_file(dir / "env.cfg",
               "dimension = 1\ngrid_n = 512\nbox_half_width = 20\npotential = newtonian\n"
               "rho0 = zero\nimmigration = bump 1 0.6\ndt = 0.01\nt_end = 1\n"
               "record_interval = 0.05\n");
    CHECK(run_cli("envelope-check --config " + (dir / "env.cfg").string() + " --out " +
                  (dir / "out_env").string()) == 0);
    std::ifstream in(dir / "out_env" / "diagnostics.csv");
    std::string line;
    std::getline(in, line); // header
    std::getline(in, line); // t = 0 record
    std::getline(in, line); // first positive time: envelope must be a number
    CHECK(line.find("nan") == std::string::npos);
}
