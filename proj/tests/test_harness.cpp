#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "schieber/harness.hpp"

using namespace schieber;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("schieber_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

TrialResult row(Mode mode, double error) {
    TrialResult r;
    r.mode = mode;
    r.error_m = error;
    return r;
}

std::string error_of(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

// Small enough to run in a few seconds per trial.
ScenarioConfig tiny(std::uint64_t seed, int trials) {
    ScenarioConfig cfg;
    cfg.name = "tiny";
    cfg.master_seed = seed;
    cfg.trial_count = trials;
    return cfg;
}

int sim(const std::string& args) {
    const std::string cmd = std::string(SCHIEBER_SIM_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing fills the documented keys", "[harness]") {
    const auto cfg = parse_scenario(R"({
        "name": "x", "snr_db": -24, "trial_count": 7, "master_seed": 99, "sim_ms": 120,
        "modes": ["schieber"],
        "jammers": [{"count": 2, "antennas": 3, "jsr_db": 25, "channel": "rayleigh"}],
        "spoofers": [{"count": 1, "spoofed_count": 4, "ssr_db": 10, "channel": "los"}],
        "spoof_range_m": [21000000, 22000000],
        "thresholds": {"tau": 8.0, "nulled_dimensions": 3}
    })");
    CHECK(cfg.name == "x");
    CHECK(cfg.snr_db == -24.0);
    CHECK(cfg.trial_count == 7);
    CHECK(cfg.master_seed == 99);
    CHECK(cfg.sim_ms == 120);
    CHECK(cfg.modes == std::vector<Mode>{Mode::Schieber});
    REQUIRE(cfg.jammers.size() == 1);
    CHECK(cfg.jammers[0].count == 2);
    CHECK(cfg.jammers[0].antennas == 3);
    CHECK(cfg.jammers[0].channel == ChannelKind::Rayleigh);
    REQUIRE(cfg.spoofers.size() == 1);
    CHECK(cfg.spoofers[0].spoofed_count == 4);
    CHECK(cfg.spoofers[0].ssr_db == 10.0);
    CHECK(cfg.spoof_range_min_m == 21e6);
    CHECK(cfg.receiver.acquisition.baseline_threshold == 8.0);
    CHECK(cfg.receiver.acquisition.nulled_dimensions == 3);

    // Round trip through the serialiser.
    const auto again = parse_scenario(scenario_to_json(cfg));
    CHECK(scenario_to_json(again) == scenario_to_json(cfg));
}

TEST_CASE("config errors name the offending field", "[harness]") {
    CHECK_THAT(error_of(R"({"trial_count": 5, "bogus": 1})"), Catch::Matchers::ContainsSubstring("bogus"));
    CHECK_THAT(error_of(R"({"jammers": [{"jsr": 30}]})"), Catch::Matchers::ContainsSubstring("jammers[0].jsr"));
    CHECK_THAT(error_of(R"({"trial_count": 0})"), Catch::Matchers::ContainsSubstring("trial_count"));
    CHECK_THAT(error_of(R"({"trial_count": 2.5})"), Catch::Matchers::ContainsSubstring("trial_count"));
    CHECK_THAT(error_of(R"({"snr_db": "loud"})"), Catch::Matchers::ContainsSubstring("snr_db"));
    CHECK_THAT(error_of(R"({"modes": ["both"]})"), Catch::Matchers::ContainsSubstring("modes[0]"));
    CHECK_THAT(error_of(R"({"spoofers": [{"channel": "fading"}]})"),
               Catch::Matchers::ContainsSubstring("spoofers[0].channel"));
    CHECK_THAT(error_of(R"({"spoof_range_m": [5, 1]})"), Catch::Matchers::ContainsSubstring("spoof_range_m"));
    CHECK_THAT(error_of(R"({"sim_ms": 3})"), Catch::Matchers::ContainsSubstring("sim_ms"));
    CHECK_THAT(error_of("{not json"), Catch::Matchers::ContainsSubstring("malformed"));
    CHECK_THROWS_AS(load_scenario("/nonexistent/config.json"), IoError);
}

TEST_CASE("bundled configs parse", "[harness]") {
    int n = 0;
    for (const auto& entry : fs::directory_iterator(SCHIEBER_CONFIG_DIR)) {
        if (entry.path().extension() != ".json") continue;
        INFO(entry.path());
        const auto cfg = load_scenario(entry.path());
        CHECK(cfg.trial_count >= 1);
        CHECK_FALSE(cfg.modes.empty());
        ++n;
    }
    CHECK(n >= 6);
}

TEST_CASE("scenes are a pure function of seed and trial index", "[harness]") {
    auto cfg = tiny(7, 3);
    cfg.jammers.push_back(JammerSpec{});
    cfg.spoofers.push_back(SpooferSpec{});
    const auto a = draw_scene(cfg, 2);
    const auto b = draw_scene(cfg, 2);
    const auto c = draw_scene(cfg, 1);
    CHECK(a.seed == b.seed);
    CHECK(a.seed != c.seed);
    CHECK(a.truth.position == b.truth.position);
    CHECK(a.truth.position != c.truth.position);
    CHECK(a.code_periods == static_cast<std::size_t>(cfg.sim_ms));
    CHECK(a.jammers.size() == 1);
    CHECK(a.spoofers.size() == 1);
}

TEST_CASE("CDF and rate summaries", "[harness]") {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<TrialResult> rows{row(Mode::Schieber, 30.0), row(Mode::Schieber, 10.0), row(Mode::Schieber, inf),
                                  row(Mode::Schieber, 20.0), row(Mode::Baseline, 1.0),
                                  row(Mode::Schieber, std::nan(""))};
    const auto cdf = make_cdf(rows, Mode::Schieber);
    CHECK(cdf.trials == 5);
    CHECK(cdf.fraction_at(5.0) == 0.0);
    CHECK(cdf.fraction_at(10.0) == Approx(0.2));
    CHECK(cdf.fraction_at(25.0) == Approx(0.4));
    // NaN and inf count as failures: the curve tops out at finite / trials.
    CHECK(cdf.fraction_at(std::numeric_limits<double>::max()) == Approx(0.6));
    double last = 0.0;
    for (double x = 0.0; x < 50.0; x += 0.5) {
        CHECK(cdf.fraction_at(x) >= last);
        last = cdf.fraction_at(x);
    }
    CHECK(cdf.quantile(0.4) == 20.0);
    CHECK(cdf.quantile(0.6) == 30.0);
    CHECK(std::isinf(cdf.quantile(0.8)));

    std::ostringstream out;
    write_cdf_csv(out, cdf);
    CHECK(out.str() == "error_m,fraction\n10.000000,0.200000\n20.000000,0.400000\n30.000000,0.600000\n");

    const auto w = wilson_rate(5, 10);
    CHECK(w.rate == 0.5);
    CHECK(w.lower == Approx(0.2366).margin(1e-4));
    CHECK(w.upper == Approx(0.7634).margin(1e-4));
    const auto none = wilson_rate(0, 0);
    CHECK(none.rate == 0.0);
    CHECK(wilson_rate(0, 20).lower == 0.0);
    CHECK(wilson_rate(20, 20).upper == 1.0);

    const auto s = success_rate(rows, 25.0);
    CHECK(s.successes == 3);
    CHECK(s.trials == 6);
}

TEST_CASE("empty result emits header-only tables", "[harness]") {
    ScenarioResult result;
    result.config = tiny(1, 1);
    result.modes = {Mode::Baseline, Mode::Schieber};
    result.trials.resize(2);
    const auto dir = scratch("empty");
    emit(result, dir);
    CHECK(slurp(dir / "trials.csv").find('\n') == slurp(dir / "trials.csv").size() - 1);
    CHECK(slurp(dir / "cdf_baseline.csv") == "error_m,fraction\n");
    CHECK(slurp(dir / "cdf_schieber.csv") == "error_m,fraction\n");
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    CHECK(summary["modes"]["schieber"]["success"]["trials"] == 0);
    CHECK(summary["modes"]["schieber"]["median_error_m"].is_null());
    fs::remove_all(dir);
}

TEST_CASE("emit into an unwritable place raises an I/O error", "[harness]") {
    ScenarioResult result;
    result.config = tiny(1, 1);
    const auto dir = scratch("blocked");
    std::ofstream(dir / "file") << "x";
    CHECK_THROWS_AS(emit(result, dir / "file" / "sub"), IoError);
    fs::remove_all(dir);
}

TEST_CASE("a one-trial run is reproducible byte for byte", "[harness]") {
    auto cfg = tiny(11, 1);
    cfg.jammers.push_back(JammerSpec{});
    const auto a = run_scenario(cfg);
    const auto b = run_scenario(cfg, 2);
    const auto da = scratch("rerun_a");
    const auto db = scratch("rerun_b");
    emit(a, da);
    emit(b, db);
    for (const auto* f : {"trials.csv", "cdf_baseline.csv", "cdf_schieber.csv", "summary.json"}) {
        INFO(f);
        CHECK(slurp(da / f) == slurp(db / f));
    }
    const auto trials = slurp(da / "trials.csv");
    CHECK(std::count(trials.begin(), trials.end(), '\n') == 3);
    const auto summary = nlohmann::json::parse(slurp(da / "summary.json"));
    CHECK(summary["name"] == "tiny");
    CHECK(summary["trials"] == 1);
    CHECK(summary["success_threshold_m"] == 1000.0);
    CHECK(summary["version"] == version_string());
    CHECK(summary["modes"].contains("baseline"));
    CHECK(summary["config"]["master_seed"] == 11);
    fs::remove_all(da);
    fs::remove_all(db);
}

TEST_CASE("command line exit codes", "[harness]") {
    const auto dir = scratch("cli");
    {
        std::ofstream(dir / "bad.json") << R"({"trial_count": 1, "surprise": true})";
        std::ofstream(dir / "ok.json") << R"({"name": "cli", "trial_count": 1, "master_seed": 3, "modes": ["baseline"]})";
        std::ofstream(dir / "file") << "x";
    }
    const auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
    CHECK(sim("run --config " + q(dir / "bad.json") + " --out " + q(dir / "o1")) == 2);
    CHECK(sim("run --config " + q(dir / "missing.json") + " --out " + q(dir / "o1")) == 3);
    CHECK(sim("run --config " + q(dir / "ok.json") + " --out " + q(dir / "file" / "sub")) == 3);
    CHECK(sim("run --config " + q(dir / "ok.json") + " --out " + q(dir / "o2") + " --mode neither") == 2);
    CHECK(sim("frobnicate") == 2);
    REQUIRE(sim("run --config " + q(dir / "ok.json") + " --out " + q(dir / "o3") + " --workers 1") == 0);
    CHECK(fs::exists(dir / "o3" / "trials.csv"));
    CHECK(fs::exists(dir / "o3" / "cdf_baseline.csv"));
    CHECK(fs::exists(dir / "o3" / "summary.json"));
    CHECK(sim("caf --config " + q(dir / "ok.json") + " --out " + q(dir / "o4") + " --prn 5") == 0);
    CHECK(fs::exists(dir / "o4" / "caf_jass_prn5.csv"));
    fs::remove_all(dir);
}
