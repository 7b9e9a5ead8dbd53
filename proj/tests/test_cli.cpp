#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

fs::path work_dir() {
    static fs::path dir = [] {
        auto d = fs::temp_directory_path() / "sdfnet_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

RunResult run(const std::string& args, const std::string& prefix = "") {
    const auto out_file = work_dir() / "stdout.txt";
    const auto err_file = work_dir() / "stderr.txt";
    const std::string cmd = prefix + std::string(SDFNET_CLI_PATH) + " " + args + " > " +
                            out_file.string() + " 2> " + err_file.string();
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

std::string data(const std::string& file) {
    return std::string(SDFNET_TEST_DATA) + "/" + file;
}

std::string platform() {
    return std::string(SDFNET_PLATFORM_DIR) + "/zynq7045.toml";
}

}  // namespace

TEST_CASE("parse prints the layer table") {
    auto r = run("parse " + data("toy_conv.json"));
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("conv1") != std::string::npos);
    CHECK(r.out.find("(4,6,6)") != std::string::npos);
}

TEST_CASE("parse handles the prototxt fixtures") {
    for (const std::string base : {"lenet_mini", "inception_mini", "resnet_mini"}) {
        auto r = run("parse " + data(base + ".prototxt"));
        CAPTURE(base);
        CHECK(r.exit_code == 0);
    }
}

TEST_CASE("missing and malformed inputs exit with code 2") {
    CHECK(run("parse /nonexistent/model.json").exit_code == 2);

    auto broken = work_dir() / "broken.json";
    spill(broken, "{\"format\": 1, \"layers\": [");
    CHECK(run("parse " + broken.string()).exit_code == 2);
}

TEST_CASE("a forced wrong format exits with code 2") {
    auto r = run("parse --format native " + data("lenet_mini.prototxt"));
    CHECK(r.exit_code == 2);
}

TEST_CASE("optimize without a platform exits with code 2") {
    auto r = run("optimize " + data("toy_conv.json"), "env -u SDFNET_PLATFORM ");
    CHECK(r.exit_code == 2);
}

TEST_CASE("optimize is deterministic and its descriptor replays cleanly") {
    const auto d1 = work_dir() / "a.json";
    const auto d2 = work_dir() / "b.json";
    const std::string common = "optimize " + data("toy_conv.json") + " --platform " + platform() +
                               " --seed 9 --iterations 200 --max-batch 16 --out ";
    auto r1 = run(common + d1.string());
    auto r2 = run(common + d2.string());
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    const std::string text = slurp(d1);
    CHECK(text == slurp(d2));
    CHECK(text.find("\"checksum\"") != std::string::npos);

    // the analytic estimate agrees with the token-level replay
    auto sim = run("simulate " + d1.string() + " " + data("toy_conv.json") + " --platform " +
                   platform());
    CHECK(sim.exit_code == 0);
    CHECK(sim.out.find("relative error") != std::string::npos);

    auto sim8 = run("simulate " + d1.string() + " " + data("toy_conv.json") + " --platform " +
                    platform() + " --batch 8");
    CHECK(sim8.exit_code == 0);
}

TEST_CASE("a corrupted descriptor exits with code 2") {
    const auto good = work_dir() / "good.json";
    auto r = run("optimize " + data("toy_conv.json") + " --platform " + platform() +
                 " --seed 3 --iterations 150 --max-batch 16 --out " + good.string());
    REQUIRE(r.exit_code == 0);

    std::string text = slurp(good);
    auto pos = text.find("\"batch\": ");
    REQUIRE(pos != std::string::npos);
    pos += 9;
    text[pos] = text[pos] == '9' ? '8' : '9';
    const auto bad = work_dir() / "bad.json";
    spill(bad, text);

    auto sim = run("simulate " + bad.string() + " " + data("toy_conv.json") + " --platform " +
                   platform());
    CHECK(sim.exit_code == 2);
    CHECK(sim.err.find("checksum") != std::string::npos);
}

TEST_CASE("an infeasible platform exits with code 3 and reports slack") {
    const auto tiny = work_dir() / "tiny.toml";
    spill(tiny, slurp(platform()) + "\n[resources]\ndsp = 0\n");
    auto r = run("optimize " + data("toy_conv.json") + " --platform " + tiny.string() +
                 " --iterations 100");
    CHECK(r.exit_code == 3);
    CHECK(r.err.find("dsp") != std::string::npos);
}

TEST_CASE("pareto mode writes the front as csv and svg") {
    const auto csv = work_dir() / "front.csv";
    const auto svg = work_dir() / "front.svg";
    auto r = run("optimize " + data("toy_conv.json") + " --platform " + platform() +
                 " --objective pareto --seed 5 --iterations 120 --max-batch 16" +
                 " --pareto-csv " + csv.string() + " --pareto-svg " + svg.string());
    REQUIRE(r.exit_code == 0);
    const std::string csv_text = slurp(csv);
    CHECK(csv_text.rfind("throughput_inputs_s,latency_s,config", 0) == 0);
    CHECK(std::count(csv_text.begin(), csv_text.end(), '\n') >= 2);
    CHECK(slurp(svg).find("<svg") != std::string::npos);
}

TEST_CASE("the evaluation log is written on request") {
    const auto log = work_dir() / "log.csv";
    auto r = run("optimize " + data("toy_conv.json") + " --platform " + platform() +
                 " --seed 2 --iterations 100 --max-batch 16 --log " + log.string());
    REQUIRE(r.exit_code == 0);
    const std::string text = slurp(log);
    CHECK(text.rfind("config_hash,config", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') > 100);
}
