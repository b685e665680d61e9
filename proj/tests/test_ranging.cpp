#include <catch_amalgamated.hpp>

#include <cmath>

#include "schieber/acquisition.hpp"
#include "schieber/ranging.hpp"
#include "support.hpp"

using namespace schieber;
using Catch::Approx;

namespace {

const long long kLc = static_cast<long long>(kCodeSamples);

SignalCandidate truth_candidate(const SatelliteSignal& s, int b) {
    SignalCandidate c;
    c.prn = s.prn;
    c.code_phase = testing::true_code_phase(s);
    c.doppler_hz = s.doppler_hz;
    c.projection.matrix = Eigen::MatrixXcd::Identity(b, b);
    return c;
}

// Despread-domain sequence: amplitude * a * d[K] plus unit-variance noise per
// entry, with a residual carrier rotation per period.
SymbolSequence synthetic_sequence(const Eigen::VectorXcd& a, double amplitude, long long step,
                                  long long length, double rotation, double noise_std, Rng& rng) {
    SymbolSequence seq;
    seq.symbols.resize(a.size(), length);
    const std::complex<double> phase0 = std::polar(1.0, uniform(rng, 0.0, 2.0 * kPi));
    for (long long k = 0; k < length; ++k) {
        const double d = k < step ? -1.0 : 1.0;
        const auto carrier = phase0 * std::polar(1.0, rotation * static_cast<double>(k));
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            seq.symbols(i, k) = amplitude * d * carrier * a[i] + complex_normal(rng, noise_std * noise_std);
        }
    }
    return seq;
}

}  // namespace

TEST_CASE("noiseless aligned despreading returns alpha a d L_c", "[ranging]") {
    auto scene = testing::clean_scene(11);
    scene.noise = false;
    scene.code_periods = 40;
    scene = testing::only_prn(scene, testing::visible_signals(scene).front().prn);
    const auto sat = testing::visible_signals(scene).front();
    const auto stream = synthesize(scene);
    const auto seq = despread(stream, truth_candidate(sat, 8), false);

    const long long dk = sat.delay_samples / kLc;
    CHECK(seq.code_phase == testing::true_code_phase(sat));
    CHECK(seq.length() == (stream.size() - seq.code_phase) / kLc);
    double worst = 0.0;
    for (Eigen::Index k = 0; k < seq.length(); ++k) {
        const double d = data_symbol(scene.data, k - dk);
        const Eigen::VectorXcd expected = sat.attenuation * d * static_cast<double>(kLc) * sat.steering;
        worst = std::max(worst, (seq.symbols.col(k) - expected).norm() / expected.norm());
    }
    CHECK(worst < 1e-9);

    // Identity projection and no projection agree.
    const auto same = despread(stream, truth_candidate(sat, 8), true);
    CHECK((same.symbols - seq.symbols).norm() <= 1e-9 * seq.symbols.norm());
}

TEST_CASE("despreading rejects out-of-range windows", "[ranging]") {
    auto scene = testing::clean_scene(12);
    scene.code_periods = 3;
    const auto stream = synthesize(scene);
    auto c = truth_candidate(testing::visible_signals(scene).front(), 8);
    c.code_phase = kLc;
    CHECK_THROWS_AS(despread(stream, c, false), std::out_of_range);
    c.code_phase = -1;
    CHECK_THROWS_AS(despread(stream, c, false), std::out_of_range);
    c.code_phase = 0;
    c.projection.matrix = Eigen::MatrixXcd::Identity(4, 4);
    CHECK_THROWS_AS(despread(stream, c, true), std::invalid_argument);
}

TEST_CASE("projected despreading suppresses the jammer by at least 20 dB", "[ranging]") {
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        auto scene = testing::clean_scene(seed);
        scene.code_periods = 20;
        Rng rng(seed);
        scene.jammers.push_back(testing::los_jammer(scene.array, 30.0, rng));
        const auto stream = synthesize(scene);
        auto jam_only = scene;
        jam_only.almanac.entries.clear();
        jam_only.noise = false;
        const auto jam = synthesize(jam_only);

        const AcquisitionEngine engine(stream);
        int checked = 0;
        for (const auto& s : testing::visible_signals(scene)) {
            for (const auto& c : engine.acquire_peaks(s.prn)) {
                const double raw = despread(jam, c, false).symbols.squaredNorm();
                const double nulled = despread(jam, c, true).symbols.squaredNorm();
                INFO("seed " << seed << " prn " << c.prn << " suppression dB " << 10.0 * std::log10(raw / nulled));
                CHECK(nulled <= 1e-2 * raw);
                ++checked;
            }
        }
        CHECK(checked >= 3);
    }
}

TEST_CASE("despreading is deterministic", "[ranging]") {
    auto scene = testing::clean_scene(13);
    scene.code_periods = 20;
    const auto stream = synthesize(scene);
    const auto c = truth_candidate(testing::visible_signals(scene).front(), 8);
    CHECK(despread(stream, c, false).symbols == despread(stream, c, false).symbols);
}

TEST_CASE("noiseless step is located exactly", "[ranging]") {
    Rng rng(31);
    const auto geom = ring_array(8);
    const auto a = steering_vector(geom, LocalDirection{0.6, 1.2});
    const auto seq = synthetic_sequence(a, 400.0, 97, 150, 0.0, 0.0, rng);
    const DataModel data;
    const auto step = detect_step(seq, data);
    REQUIRE(step.valid);
    CHECK(step.step_index == 97);
    CHECK(step.offset == 97 - 30);
}

TEST_CASE("step recovery at realistic despread SNR", "[ranging]") {
    // -20 dB per sample with unit noise: |alpha| L_c = 0.1 * 4092, noise std sqrt(L_c).
    const double amplitude = 0.1 * static_cast<double>(kLc);
    const double noise_std = std::sqrt(static_cast<double>(kLc));
    const auto geom = ring_array(8);
    Rng rng(32);
    const DataModel data;
    int exact = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        const auto dir = random_hemisphere_direction(rng);
        const auto a = steering_vector(geom, dir);
        const long long step = 30 + static_cast<long long>(uniform(rng, 40.0, 100.0));
        const double rotation = uniform(rng, -0.05, 0.05);
        const auto seq = synthetic_sequence(a, amplitude, step, 150, rotation, noise_std, rng);
        const auto d = detect_step(seq, data);
        exact += d.valid && d.step_index == step;
    }
    INFO("exact " << exact << " of " << trials);
    CHECK(exact >= 0.99 * trials);
}

TEST_CASE("sequence without a step is invalid", "[ranging]") {
    Rng rng(33);
    const auto geom = ring_array(8);
    const auto a = steering_vector(geom, LocalDirection{1.0, -0.4});
    const DataModel data;
    CHECK_FALSE(detect_step(synthetic_sequence(a, 400.0, 0, 150, 0.0, 0.0, rng), data).valid);
    CHECK_FALSE(detect_step(synthetic_sequence(a, 400.0, 0, 150, 0.01, 0.0, rng), data).valid);

    // Too short to search at all.
    CHECK_FALSE(detect_step(synthetic_sequence(a, 400.0, 5, 12, 0.0, 0.0, rng), data).valid);
}

TEST_CASE("step detection ignores a global phase", "[ranging]") {
    Rng rng(34);
    const auto geom = ring_array(8);
    const auto a = steering_vector(geom, LocalDirection{0.3, 2.5});
    const DataModel data;
    for (int t = 0; t < 20; ++t) {
        const auto seq = synthetic_sequence(a, 409.2, 60 + t, 150, 0.02, 64.0, rng);
        auto rotated = seq;
        rotated.symbols *= std::polar(1.0, uniform(rng, 0.0, 2.0 * kPi));
        const auto d0 = detect_step(seq, data);
        const auto d1 = detect_step(rotated, data);
        CHECK(d0.valid == d1.valid);
        CHECK(d0.step_index == d1.step_index);
        CHECK(d0.statistic == Approx(d1.statistic).epsilon(1e-9));
    }
}

TEST_CASE("pseudorange arithmetic", "[ranging]") {
    CHECK(pseudorange(0, 77) == Approx(kSpeedOfLight * 77e-3).epsilon(1e-12));
    CHECK(pseudorange(0, 77) == Approx(23'084e3).epsilon(1e-3));
    CHECK(pseudorange(kLc - 1, 0) == Approx(kSpeedOfLight * static_cast<double>(kLc - 1) * kSamplePeriod));
    CHECK(pseudorange(0, 0) == 0.0);
    CHECK(pseudorange(0, -1) < 0.0);
}

TEST_CASE("forward-model pseudoranges lie within one sample", "[ranging]") {
    const double one_sample = kSpeedOfLight * kSamplePeriod;
    CHECK(one_sample == Approx(73.3).epsilon(1e-3));
    int checked = 0;
    for (std::uint64_t seed : {41u, 42u, 43u}) {
        const auto scene = testing::clean_scene(seed);
        const auto stream = synthesize(scene);
        const AcquisitionEngine engine(stream);
        for (const auto& s : testing::visible_signals(scene)) {
            if (std::abs(s.doppler_hz) > kDopplerMaxHz) continue;
            const auto c = engine.acquire_baseline(s.prn);
            if (!c) continue;
            const auto seq = despread(stream, *c, false);
            const auto step = detect_step(seq, scene.data);
            INFO("seed " << seed << " prn " << s.prn);
            REQUIRE(step.valid);
            const double r = pseudorange(c->code_phase, step.offset);
            CHECK(std::abs(r - (s.range_m + kSpeedOfLight * scene.truth.clock_offset_s)) <= one_sample);
            ++checked;
        }
    }
    CHECK(checked >= 15);
}
