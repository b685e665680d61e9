#pragma once

#include <vector>

#include "schieber/harness.hpp"

namespace testing {

using namespace schieber;

// A drawn attack-free scene; used wherever a realistic constellation is needed.
inline Scene clean_scene(std::uint64_t seed, double snr_db = -20.0) {
    ScenarioConfig cfg;
    cfg.master_seed = seed;
    cfg.snr_db = snr_db;
    return draw_scene(cfg, 0);
}

inline std::vector<SatelliteSignal> visible_signals(const Scene& scene) {
    std::vector<SatelliteSignal> out;
    for (auto& s : satellite_signals(scene)) {
        if (s.visible) out.push_back(std::move(s));
    }
    return out;
}

// Keeps only the almanac slot of `prn`.
inline Scene only_prn(Scene scene, int prn) {
    std::vector<AlmanacEntry> keep;
    for (const auto& e : scene.almanac.entries) {
        if (e.prn == prn) keep.push_back(e);
    }
    scene.almanac.entries = keep;
    return scene;
}

inline long long true_code_phase(const SatelliteSignal& s) {
    const auto lc = static_cast<long long>(kCodeSamples);
    return ((s.delay_samples % lc) + lc) % lc;
}

// Doppler bin closest to f.
inline int nearest_bin(double f_hz) {
    return static_cast<int>(std::lround((f_hz + kDopplerMaxHz) / kDopplerStepHz));
}

// Single-antenna LoS jammer from a random upper-hemisphere direction.
inline JammerSetup los_jammer(const ArrayGeometry& geom, double jsr_db, Rng& rng) {
    JammerSetup j;
    j.config.antennas = 1;
    j.config.jsr_db = jsr_db;
    j.channels = steering_vector(geom, random_hemisphere_direction(rng));
    return j;
}

}  // namespace testing
