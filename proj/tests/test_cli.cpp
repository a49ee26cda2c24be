#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "drivenmem/commands.hpp"
#include "drivenmem/config.hpp"
#include "drivenmem/manifest.hpp"
#include "json.hpp"

using namespace drivenmem;
namespace fs = std::filesystem;

namespace {

const std::string kConfigs = DRIVENMEM_CONFIG_DIR;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("drivenmem_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
    const auto p = dir / name;
    std::ofstream(p) << text;
    return p;
}

int run(const std::string& cmd, const std::string& fig, CommandOptions opts) {
    std::ostringstream log, err;
    const int code = run_command(cmd, fig, opts, log, err);
    if (code != 0) MESSAGE(err.str());
    return code;
}

const char* kMinimal = "[units]\ndelta = 1 MHz\n";

}  // namespace

TEST_CASE("minimal config takes the defaults") {
    const auto c = parse_config(kMinimal);
    CHECK(c == ScenarioConfig{});
    CHECK_FALSE(c.drive.has_value());
    CHECK(c.kappa == 0.1);
}

TEST_CASE("bad values are reported with their position") {
    try {
        (void)parse_config("[units]\ndelta = 1 MHz\n[cavity]\nkappa = -0.1 MHz\n");
        FAIL("negative kappa accepted");
    } catch (const ConfigError& e) {
        REQUIRE(e.issues().size() == 1);
        CHECK(e.issues()[0].line == 4);
        CHECK(e.issues()[0].message.find("kappa") != std::string::npos);
    }
    try {
        (void)parse_config("[units]\ndelta = 1 MHz\n[cavity]\nkapa = 0.1 MHz\n[ensemble]\ngamma = 1e-4\n[extra]\n");
        FAIL("bad config accepted");
    } catch (const ConfigError& e) {
        CHECK(e.issues().size() == 3);
    }
    CHECK_THROWS_AS((void)parse_config("[units]\ndelta = 1 MHz\n[run]\ncollectives = 10 MHz, 20 Delta\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("[ensemble]\ncollective = 5 MHz\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("[units]\ndelta = 1 MHz\n[drive]\nb_min = 10 MHz\n"), ConfigError);
    CHECK_THROWS_AS((void)parse_config("[units]\ndelta = 1 MHz\n[drive]\nb_min = 11 MHz\nb_max = 10 MHz\n"), ConfigError);
}

TEST_CASE("shipped fig4 config") {
    const auto c = load_config(kConfigs + "/fig4.cfg");
    CHECK(c.delta_mhz == 1.0);
    CHECK(c.kappa == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(c.gamma == doctest::Approx(1e-4).epsilon(1e-15));
    REQUIRE(c.drive.has_value());
    CHECK(c.drive->b_min == 10.0);
    CHECK(c.drive->b_max == 10.5);
    CHECK(c.collectives == std::vector<double>{10.0, 20.0, 30.0, 40.0});
    CHECK(c.target_time == 50.0);
}

TEST_CASE("serialization round trip") {
    for (const char* name : {"fig2.cfg", "fig3.cfg", "fig4.cfg", "fig4_b20.cfg"}) {
        CAPTURE(name);
        const auto c = load_config(kConfigs + "/" + name);
        const auto text = serialize_config(c);
        CHECK(parse_config(text) == c);
        CHECK(serialize_config(parse_config(text)) == text);
    }
}

TEST_CASE("MHz and reduced units describe the same scenario") {
    const auto mhz = parse_config(
        "[units]\ndelta = 2 MHz\n[ensemble]\ncollective = 40 MHz\ngamma = 2e-4 MHz\n"
        "[drive]\nb_min = 20 MHz\nb_max = 21 MHz\n[cavity]\nkappa = 0.2 MHz\n"
        "[run]\nhorizon = 25 us\ntarget_time = 25 us\ntime_step = 0.025 us\n");
    const auto reduced = parse_config(
        "[units]\ndelta = 2 MHz\n[ensemble]\ncollective = 20 Delta\ngamma = 1e-4 Delta\n"
        "[drive]\nb_min = 10 Delta\nb_max = 10.5 Delta\n[cavity]\nkappa = 0.1 Delta\n"
        "[run]\nhorizon = 50 1/Delta\ntarget_time = 50 1/Delta\ntime_step = 0.05 1/Delta\n");
    CHECK(std::abs(mhz.collective - reduced.collective) < 1e-10);
    CHECK(std::abs(mhz.gamma - reduced.gamma) < 1e-10);
    CHECK(std::abs(mhz.kappa - reduced.kappa) < 1e-10);
    CHECK(std::abs(mhz.drive->b_min - reduced.drive->b_min) < 1e-10);
    CHECK(std::abs(mhz.drive->b_max - reduced.drive->b_max) < 1e-10);
    CHECK(std::abs(mhz.horizon - reduced.horizon) < 1e-10);
    CHECK(std::abs(mhz.time_step - reduced.time_step) < 1e-10);

    auto a = mhz.memory_scenario();
    auto b = reduced.memory_scenario();
    a.detuning = b.detuning = -40.0;
    a.n_spins = b.n_spins = 600;
    a.window = b.window = Window{10.0, 80.0};
    CHECK(std::abs(fidelity_at(a, 50.0) - fidelity_at(b, 50.0)) < 1e-10);
}

TEST_CASE("git blob hash") {
    CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
    CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_CASE("fig2 densities") {
    const auto dir = scratch("fig2");
    CommandOptions o;
    o.config_path = kConfigs + "/fig2.cfg";
    o.out_dir = dir.string();
    REQUIRE(run("reproduce", "fig2", o) == 0);
    std::ifstream in(dir / "fig2_dressed.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "omega,pdf");
    std::size_t below = 0, above = 0;
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        const double w = std::stod(line.substr(0, comma));
        const double p = std::stod(line.substr(comma + 1));
        CHECK(p >= 0.0);
        if (w < 10.0) {
            CHECK(p == 0.0);
            ++below;
        } else if (p > 0.0) {
            ++above;
        }
    }
    CHECK(below > 0);
    CHECK(above > 0);
    CHECK(fs::exists(dir / "fig2_lorentzian.csv"));
}

TEST_CASE("fig3 rerun is byte-identical and thread-count independent") {
    CommandOptions o;
    o.config_path = kConfigs + "/fig3.cfg";
    o.n_spins = 1500;
    const auto first = scratch("fig3_a");
    const auto second = scratch("fig3_b");
    o.out_dir = first.string();
    o.threads = 1;
    REQUIRE(run("reproduce", "fig3", o) == 0);
    o.out_dir = second.string();
    o.threads = 4;
    REQUIRE(run("reproduce", "fig3", o) == 0);
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(first)) {
        const auto name = entry.path().filename();
        CAPTURE(name.string());
        CHECK(slurp(entry.path()) == slurp(second / name));
        ++compared;
    }
    CHECK(compared == 5);

    const auto manifest = nlohmann::json::parse(slurp(first / "manifest.json"));
    CHECK(manifest["command"] == "reproduce fig3");
    CHECK(manifest["config_hash"] == file_blob_hash(kConfigs + "/fig3.cfg"));
    CHECK(manifest["outputs"].size() == 4);
    for (const auto& out : manifest["outputs"]) {
        CHECK(out["hash"] == file_blob_hash((first / out["path"].get<std::string>()).string()));
    }
    CHECK(parse_config(manifest["resolved_config"].get<std::string>()).n_spins == 1500);
}

TEST_CASE("transmission and memory commands") {
    const auto dir = scratch("cmds");
    const auto cfg = write_file(dir, "small.cfg",
                                "[units]\ndelta = 1 MHz\n[ensemble]\ncollective = 5 MHz\nn_spins = 800\n"
                                "[cavity]\nkappa = 0.1 MHz\ndetuning = 30 MHz\n"
                                "[run]\nprobe_points = 801\nhorizon = 20 us\ntarget_time = 20 us\n");
    CommandOptions o;
    o.config_path = cfg.string();
    o.out_dir = dir.string();
    REQUIRE(run("transmission", "", o) == 0);
    std::ifstream in(dir / "transmission.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "omega,re_t,im_t,abs_t2");
    REQUIRE(run("memory", "", o) == 0);
    std::ifstream mem(dir / "fidelity.csv");
    std::getline(mem, header);
    CHECK(header == "t,re_f,im_f,F");
    std::string first;
    std::getline(mem, first);
    CHECK(first.rfind("0,1,", 0) == 0);
    CHECK(fs::exists(dir / "fidelity.csv.meta"));
}

TEST_CASE("exit codes") {
    const auto dir = scratch("exit");
    CommandOptions o;
    o.out_dir = dir.string();
    o.config_path = (dir / "missing.cfg").string();
    CHECK(run("spectrum", "", o) == exit_validation);
    o.config_path = write_file(dir, "bad.cfg", "[units]\ndelta = 1 MHz\n[cavity]\nkappa = -1 MHz\n").string();
    CHECK(run("spectrum", "", o) == exit_validation);
    o.config_path = kConfigs + "/fig2.cfg";
    CHECK(run("reproduce", "fig9", o) == exit_validation);
    CHECK(run("launch", "", o) == exit_validation);
}
