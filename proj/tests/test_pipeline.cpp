#include <catch_amalgamated.hpp>

#include <cmath>

#include "schieber/harness.hpp"
#include "support.hpp"

using namespace schieber;

namespace {

ScenarioConfig scenario(std::uint64_t seed, int trials) {
    ScenarioConfig cfg;
    cfg.master_seed = seed;
    cfg.trial_count = trials;
    return cfg;
}

void check_counts(const TrialResult& r) {
    INFO("seed " << r.seed << " mode " << to_string(r.mode));
    CHECK(r.clique <= r.screened);
    CHECK(r.screened <= r.ranged);
    CHECK(r.ranged <= r.acquired);
    CHECK(static_cast<int>(r.used_prns.size()) == r.clique);
    if (r.fix) {
        CHECK(std::isfinite(r.error_m));
        CHECK(r.failure.empty());
    } else {
        CHECK(std::isinf(r.error_m));
        CHECK_FALSE(r.failure.empty());
    }
}

}  // namespace

TEST_CASE("mode names", "[pipeline]") {
    CHECK(parse_mode("baseline") == Mode::Baseline);
    CHECK(parse_mode("schieber") == Mode::Schieber);
    CHECK(to_string(Mode::Schieber) == "schieber");
    CHECK_THROWS_AS(parse_mode("both"), std::invalid_argument);
    ReceiverSettings s;
    CHECK_NOTHROW(s.validate(8));
    s.music_window = 1;
    CHECK_THROWS_AS(s.validate(8), std::invalid_argument);
}

TEST_CASE("attack-free schieber trials position with a full clique", "[pipeline]") {
    auto cfg = scenario(501, 20);
    cfg.modes = {Mode::Schieber};
    const auto result = run_scenario(cfg);
    int good = 0;
    for (const auto& r : result.trials[0]) {
        check_counts(r);
        good += r.clique >= 4 && std::isfinite(r.error_m);
    }
    INFO("good " << good << " of 20");
    CHECK(good >= 19);
}

TEST_CASE("single 30 dB jammer defeats the baseline but not schieber", "[pipeline]") {
    auto cfg = scenario(502, 20);
    cfg.jammers.push_back(JammerSpec{});
    const auto result = run_scenario(cfg);
    REQUIRE(result.modes == std::vector<Mode>{Mode::Baseline, Mode::Schieber});
    int baseline_failed = 0, schieber_good = 0;
    for (const auto& r : result.trials[0]) {
        check_counts(r);
        baseline_failed += !(r.error_m <= 10e3);
    }
    for (const auto& r : result.trials[1]) {
        check_counts(r);
        schieber_good += r.error_m <= 200.0;
    }
    INFO("baseline failed " << baseline_failed << " schieber within 200 m " << schieber_good);
    CHECK(baseline_failed >= 18);
    CHECK(schieber_good >= 18);
}

TEST_CASE("attack-free receivers agree on the acquired cell", "[pipeline]") {
    int matches = 0, agree = 0;
    for (std::uint64_t t = 0; t < 30; ++t) {
        auto scene = testing::clean_scene(2000 + t);
        scene.code_periods = 8;
        const auto stream = synthesize(scene);
        const AcquisitionEngine engine(stream);
        for (const auto& s : testing::visible_signals(scene)) {
            const auto b = engine.acquire_baseline(s.prn);
            const auto p = engine.acquire_peaks(s.prn);
            if (!b || p.empty()) continue;
            ++matches;
            agree += p[0].code_phase == b->code_phase && p[0].doppler_bin == b->doppler_bin;
        }
    }
    INFO("agree " << agree << " of " << matches);
    CHECK(matches > 200);
    CHECK(agree >= 0.95 * matches);
}

TEST_CASE("trials rerun bit-identically", "[pipeline]") {
    auto cfg = scenario(503, 1);
    cfg.spoofers.push_back(SpooferSpec{});
    const auto scene = draw_scene(cfg, 0);
    const auto first = run_trial_modes(scene, {Mode::Baseline, Mode::Schieber});
    const auto second = run_trial_modes(scene, {Mode::Baseline, Mode::Schieber});
    REQUIRE(first.size() == 2);
    for (std::size_t m = 0; m < 2; ++m) {
        const auto& a = first[m];
        const auto& b = second[m];
        CHECK(a.mode == b.mode);
        CHECK(a.seed == b.seed);
        CHECK(a.failure == b.failure);
        CHECK(a.acquired == b.acquired);
        CHECK(a.ranged == b.ranged);
        CHECK(a.screened == b.screened);
        CHECK(a.clique == b.clique);
        CHECK(a.used_prns == b.used_prns);
        REQUIRE(a.fix.has_value() == b.fix.has_value());
        if (a.fix) {
            CHECK(a.fix->position == b.fix->position);
            CHECK(a.fix->clock_bias_m == b.fix->clock_bias_m);
            CHECK(a.fix->weights == b.fix->weights);
        }
        CHECK((a.error_m == b.error_m || (std::isinf(a.error_m) && std::isinf(b.error_m))));
    }
    // A single-mode run sees the same stream.
    const auto alone = run_trial(scene, Mode::Schieber);
    CHECK(alone.used_prns == first[1].used_prns);
    CHECK(alone.error_m == first[1].error_m);
}

TEST_CASE("too few clique members is a failure, not a fallback", "[pipeline]") {
    auto scene = testing::clean_scene(504);
    // Keep three satellites only.
    std::vector<AlmanacEntry> keep;
    for (const auto& s : testing::visible_signals(scene)) {
        if (keep.size() == 3) break;
        for (const auto& e : scene.almanac.entries) {
            if (e.prn == s.prn) keep.push_back(e);
        }
    }
    scene.almanac.entries = keep;
    for (Mode m : {Mode::Baseline, Mode::Schieber}) {
        const auto r = run_trial(scene, m);
        check_counts(r);
        CHECK_FALSE(r.fix.has_value());
        CHECK(std::isinf(r.error_m));
    }
}
