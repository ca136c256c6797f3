#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lpsim/config.hpp"
#include "lpsim/errors.hpp"
#include "lpsim/scenarios.hpp"

using namespace lpsim;
namespace fs = std::filesystem;

namespace {

const std::string config_dir = LPSIM_CONFIG_DIR;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("lpsim_scenarios_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const fs::path p = dir / "case.cfg";
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

const std::string flat =
    "scenario = survival-flat\n"
    "seed = 1\n"
    "output.dir = unused\n"
    "model.e0 = 1.0\n"
    "model.gamma = 0.2\n";

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_file(const fs::path& cfg, const RunOptions& opts) {
    std::ostringstream out, err;
    const int code = run_config_file(cfg.string(), opts, out, err);
    return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("registry lists every required scenario") {
    const auto& reg = scenario_registry();
    for (const char* name : {"survival-flat", "survival-threshold", "semigroup-audit", "smatrix-poles",
                             "superselection", "decoherence-switch", "liouville-kernel"}) {
        CHECK(std::any_of(reg.begin(), reg.end(), [&](const ScenarioInfo& s) { return s.name == name; }));
    }
    const std::string listing = scenario_listing();
    CHECK(listing == scenario_listing());
    CHECK(static_cast<std::size_t>(std::count(listing.begin(), listing.end(), '\n')) == reg.size());
    CHECK(listing.rfind(reg.front().name, 0) == 0);
}

TEST_CASE("unknown scenario names the valid ones") {
    Config cfg = Config::parse("scenario = nope\nseed = 1\noutput.dir = x\n");
    try {
        run_scenario(cfg, {});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.rfind("line 1: unknown scenario 'nope'", 0) == 0);
        CHECK(msg.find("liouville-kernel") != std::string::npos);
    }
}

TEST_CASE("survival-flat run writes the documented artifacts") {
    const fs::path dir = scratch("flat");
    const fs::path cfg = write_config(dir, flat + "tau.schedule = 0:10:21\n");
    RunOptions opts;
    opts.out_dir = (dir / "out").string();
    opts.seed = 42;
    const Outcome r = run_file(cfg, opts);
    CHECK(r.code == 0);
    CHECK(r.err.empty());
    CHECK(r.out.rfind("scenario survival-flat\nseed 42\ntolerance_scale 1\n", 0) == 0);
    CHECK(r.out.find("verdict PASS") != std::string::npos);

    const std::string csv = slurp(dir / "out" / "survival.csv");
    CHECK(csv.rfind("t,re_A,im_A,p,A_pole_re,A_pole_im,method_diff\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 22);
    CHECK(csv.find('\r') == std::string::npos);
    CHECK(slurp(dir / "out" / "report.txt") == r.out);
}

TEST_CASE("comma-list schedules are accepted") {
    const fs::path dir = scratch("list");
    const fs::path cfg = write_config(dir, flat + "tau.schedule = 0, 1.5, 7\n");
    RunOptions opts;
    opts.out_dir = (dir / "out").string();
    CHECK(run_file(cfg, opts).code == 0);
    const std::string csv = slurp(dir / "out" / "survival.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("config problems exit with status 2") {
    const fs::path dir = scratch("bad");
    RunOptions opts;
    opts.out_dir = (dir / "out").string();

    SUBCASE("empty schedule") {
        const Outcome r = run_file(write_config(dir, flat + "tau.schedule =\n"), opts);
        CHECK(r.code == 2);
        CHECK(r.err.rfind("config error: ", 0) == 0);
        CHECK(r.err.find("line 6") != std::string::npos);
    }
    SUBCASE("descending schedule") {
        CHECK(run_file(write_config(dir, flat + "tau.schedule = 2, 1\n"), opts).code == 2);
    }
    SUBCASE("unknown key") {
        const Outcome r = run_file(write_config(dir, flat + "tau.schedule = 0:1:2\nmodel.extra = 3\n"), opts);
        CHECK(r.code == 2);
        CHECK(r.err.find("unknown key 'model.extra'") != std::string::npos);
    }
    SUBCASE("missing key") {
        CHECK(run_file(write_config(dir, flat), opts).code == 2);
    }
    SUBCASE("malformed number") {
        std::string text = flat + "tau.schedule = 0:1:2\n";
        text.replace(text.find("0.2"), 3, "0.2x");
        CHECK(run_file(write_config(dir, text), opts).code == 2);
    }
    SUBCASE("physically invalid parameter") {
        std::string text = flat + "tau.schedule = 0:1:2\n";
        text.replace(text.find("gamma = 0.2"), 11, "gamma = -1");
        CHECK(run_file(write_config(dir, text), opts).code == 2);
    }
    SUBCASE("missing file") {
        CHECK(run_file(dir / "absent.cfg", opts).code == 2);
    }
    SUBCASE("bad tolerance scale") {
        opts.tolerance_scale = 0.0;
        CHECK(run_file(write_config(dir, flat + "tau.schedule = 0:1:2\n"), opts).code == 2);
    }
}

TEST_CASE("an impossible tolerance fails the invariants with status 1") {
    const fs::path dir = scratch("tight");
    RunOptions opts;
    opts.out_dir = (dir / "out").string();
    opts.tolerance_scale = 1e-30;
    const Outcome r = run_file(write_config(dir, flat + "tau.schedule = 0:10:3\n"), opts);
    CHECK(r.code == 1);
    CHECK(r.out.find("FAIL closed_form_error_spectral") != std::string::npos);
    CHECK(r.out.find("verdict FAIL") != std::string::npos);
}

TEST_CASE("an unconverged S-matrix limit exits with status 3") {
    const fs::path dir = scratch("limit");
    std::string text = slurp(fs::path(config_dir) / "smatrix-diagonal.cfg");
    text.replace(text.find("tau_max = 90"), 12, "tau_max = 10");
    RunOptions opts;
    opts.out_dir = (dir / "out").string();
    const Outcome r = run_file(write_config(dir, text), opts);
    CHECK(r.code == 3);
    CHECK(r.err.rfind("convergence error: ", 0) == 0);
}

TEST_CASE("runs are byte-identical for a fixed seed") {
    const fs::path dir = scratch("repeat");
    for (const char* name : {"superselection.cfg", "decoherence-switch.cfg", "liouville-kernel.cfg"}) {
        const fs::path cfg = fs::path(config_dir) / name;
        RunOptions a, b;
        a.out_dir = (dir / "a").string();
        b.out_dir = (dir / "b").string();
        REQUIRE(run_file(cfg, a).code == 0);
        REQUIRE(run_file(cfg, b).code == 0);
        for (const auto& entry : fs::directory_iterator(dir / "a")) {
            CHECK(slurp(entry.path()) == slurp(dir / "b" / entry.path().filename()));
        }
        fs::remove_all(dir / "a");
        fs::remove_all(dir / "b");
    }
}

TEST_CASE("the seed changes the random probes") {
    const fs::path dir = scratch("seed");
    const fs::path cfg = fs::path(config_dir) / "superselection.cfg";
    RunOptions a, b;
    a.out_dir = (dir / "a").string();
    b.out_dir = (dir / "b").string();
    b.seed = 12345;
    REQUIRE(run_file(cfg, a).code == 0);
    REQUIRE(run_file(cfg, b).code == 0);
    CHECK(slurp(dir / "a" / "superselection.csv") != slurp(dir / "b" / "superselection.csv"));
}
