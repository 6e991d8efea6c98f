// Black-box CLI tests: exit codes and the --out collision policy.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SEMADV_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

fs::path tmp_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("gen-data happy path writes a dataset and exits 0") {
    fs::path out = tmp_dir("semadv_cli_gen");
    CHECK(run_cli("gen-data --seed 7 --count 12 --out " + out.string()) == 0);
    CHECK(fs::exists(out / "dataset.json"));
    CHECK(fs::exists(out / "images" / "img_0000.ppm"));
    fs::remove_all(out);
}

TEST_CASE("unknown flag exits 1 and writes nothing") {
    fs::path out = tmp_dir("semadv_cli_unknown");
    CHECK(run_cli("gen-data --does-not-exist 1 --out " + out.string()) == 1);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("unknown subcommand exits 1") { CHECK(run_cli("frobnicate") == 1); }

TEST_CASE("out-directory collision is refused without --force") {
    fs::path out = tmp_dir("semadv_cli_collide");
    REQUIRE(run_cli("gen-data --seed 7 --count 8 --out " + out.string()) == 0);
    CHECK(run_cli("gen-data --seed 7 --count 8 --out " + out.string()) == 1);
    CHECK(run_cli("gen-data --seed 7 --count 8 --force --out " + out.string()) == 0);
    fs::remove_all(out);
}

TEST_CASE("invalid campaign config exits 1") {
    fs::path dir = tmp_dir("semadv_cli_badcfg");
    fs::create_directories(dir);
    const fs::path cfg = dir / "bad.json";
    std::ofstream(cfg) << R"({"dataset":"d","denoiser":"x","target":"t","extractor":"e","st":{"lambda":0.0}})";
    CHECK(run_cli("attack-st --config " + cfg.string() + " --out " + (dir / "out").string()) == 1);
    fs::remove_all(dir);
}

TEST_CASE("missing checkpoint is a runtime failure, exit 2") {
    fs::path dir = tmp_dir("semadv_cli_missing");
    fs::create_directories(dir);
    const fs::path data = dir / "data";
    REQUIRE(run_cli("gen-data --seed 7 --count 8 --out " + data.string()) == 0);
    const fs::path cfg = dir / "cfg.json";
    std::ofstream(cfg) << R"({"dataset":")" << data.string()
                       << R"(","denoiser":"missing.ckpt","target":"missing.ckpt","extractor":"missing.ckpt","count":1})";
    CHECK(run_cli("attack-st --config " + cfg.string() + " --out " + (dir / "out").string()) == 2);
    fs::remove_all(dir);
}
