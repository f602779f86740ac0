// End-to-end checks of the command line driver and its exit-code contract:
// 0 success, 2 bad config/input, 3 infeasible synthesis, 4 divergence.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ddsmc/plant.hpp"

namespace fs = std::filesystem;

namespace {

const char* kCli = DDSMC_CLI_PATH;

int run_cli(const std::string& args) {
    const std::string cmd = std::string(kCli) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("ddsmc_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int counter() {
        static int c = 0;
        return c++;
    }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = path / name;
        std::ofstream os(p);
        os << content;
        return p.string();
    }
    std::string sub(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("no subcommand is a usage error") {
    CHECK(run_cli("") == 2);
    CHECK(run_cli("frobnicate") == 2);
}

TEST_CASE("bad configs exit with code 2") {
    TempDir td;
    const auto bad = td.file("bad.cfg", "[plant]\nname = pendulum\n[excitation]\nT = 0\n");
    CHECK(run_cli("collect --config " + bad + " --out " + td.sub("r")) == 2);
    const auto unknown = td.file("unk.cfg", "[plant]\nname = pendulum\nwheels = 4\n");
    CHECK(run_cli("collect --config " + unknown + " --out " + td.sub("r2")) == 2);
    CHECK(run_cli("synthesize --config " + td.file("ok.cfg", "[plant]\nname = pendulum\n") +
                  " --out " + td.sub("nodata")) == 2);  // dataset missing
}

TEST_CASE("pipeline runs and is reproducible byte for byte") {
    TempDir td;
    const auto cfg = td.file("run.cfg",
                             "[plant]\nname = pendulum\n[disturbance]\ndelta = 0.01\n"
                             "[simulation]\nsteps = 120\n[output]\nseed = 5\n");
    for (const std::string dir : {td.sub("a"), td.sub("b")}) {
        CHECK(run_cli("collect --config " + cfg + " --out " + dir) == 0);
        CHECK(run_cli("synthesize --config " + cfg + " --out " + dir) == 0);
        CHECK(run_cli("simulate --config " + cfg + " --out " + dir) == 0);
        CHECK(run_cli("report " + dir) == 0);
        CHECK(fs::exists(fs::path(dir) / "config.cfg"));
        CHECK(fs::exists(fs::path(dir) / "dataset.csv"));
        CHECK(fs::exists(fs::path(dir) / "synthesis.csv"));
        CHECK(fs::exists(fs::path(dir) / "trace.csv"));
        CHECK(fs::exists(fs::path(dir) / "report.txt"));
        CHECK(fs::exists(fs::path(dir) / "fig_x1.csv"));
    }
    for (const char* f : {"dataset.csv", "synthesis.csv", "trace.csv", "report.txt"})
        CHECK(slurp(td.sub("a") + "/" + f) == slurp(td.sub("b") + "/" + f));
}

TEST_CASE("existing outputs need --force") {
    TempDir td;
    const auto cfg = td.file("run.cfg", "[plant]\nname = pendulum\n");
    const auto dir = td.sub("r");
    CHECK(run_cli("collect --config " + cfg + " --out " + dir) == 0);
    CHECK(run_cli("collect --config " + cfg + " --out " + dir) == 2);
    CHECK(run_cli("collect --config " + cfg + " --out " + dir + " --force") == 0);
}

TEST_CASE("infeasible synthesis exits with code 3") {
    TempDir td;
    // an absurd strictness margin makes the program infeasible
    const auto cfg = td.file("run.cfg",
                             "[plant]\nname = pendulum\n[synthesis]\nmargin = 1000\n");
    const auto dir = td.sub("r");
    CHECK(run_cli("collect --config " + cfg + " --out " + dir) == 0);
    CHECK(run_cli("synthesize --config " + cfg + " --out " + dir) == 3);
}

TEST_CASE("open-loop divergence exits with code 4") {
    TempDir td;
    ddsmc::PlantModel unstable = ddsmc::make_pendulum();
    unstable.A_x << 2.0, 0.0, 0.0, 2.0;
    unstable.basis = ddsmc::basis_by_name("none");
    unstable.A_q = ddsmc::Matrix(2, 0);
    const auto plant_path = td.sub("plant.cfg");
    ddsmc::save_plant(unstable, plant_path);
    const auto cfg = td.file("run.cfg", "[plant]\nfile = " + plant_path +
                                            "\n[simulation]\nsteps = 60\n");
    CHECK(run_cli("simulate --config " + cfg + " --out " + td.sub("r") + " --open-loop") == 4);
}

TEST_CASE("delta and seed overrides change the outputs") {
    TempDir td;
    const auto cfg = td.file("run.cfg", "[plant]\nname = pendulum\n");
    CHECK(run_cli("collect --config " + cfg + " --out " + td.sub("a") + " --seed 9") == 0);
    CHECK(run_cli("collect --config " + cfg + " --out " + td.sub("b") + " --seed 10") == 0);
    CHECK(slurp(td.sub("a") + "/dataset.csv") != slurp(td.sub("b") + "/dataset.csv"));
    CHECK(run_cli("collect --config " + cfg + " --out " + td.sub("c") + " --delta 0.2") == 0);
    CHECK(slurp(td.sub("a") + "/dataset.csv") != slurp(td.sub("c") + "/dataset.csv"));
}

TEST_CASE("sweep writes the table") {
    TempDir td;
    const auto cfg = td.file("run.cfg",
                             "[plant]\nname = pendulum\n[sweep]\ndeltas = 0.01\nseeds = 2\n"
                             "[simulation]\nsteps = 50\n");
    const auto dir = td.sub("r");
    CHECK(run_cli("sweep --config " + cfg + " --out " + dir + " --jobs 2") == 0);
    const std::string table = slurp(dir + "/sweep.csv");
    CHECK(table.find("delta,seed,status,gamma,converged") == 0);
    CHECK(std::count(table.begin(), table.end(), '\n') == 3);  // header + 2 cells
}
