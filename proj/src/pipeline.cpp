#include "schieber/pipeline.hpp"

#include <chrono>
#include <limits>
#include <stdexcept>

#include "schieber/ranging.hpp"

namespace schieber {

std::string to_string(Mode mode) { return mode == Mode::Baseline ? "baseline" : "schieber"; }

Mode parse_mode(const std::string& text) {
    if (text == "baseline") return Mode::Baseline;
    if (text == "schieber") return Mode::Schieber;
    throw std::invalid_argument("unknown mode '" + text + "' (expected baseline or schieber)");
}

void ReceiverSettings::validate(int antennas) const {
    acquisition.validate(antennas);
    if (music_window < 2) throw std::invalid_argument("MUSIC window must hold at least 2 vectors");
    if (!(music_threshold > 0.0)) throw std::invalid_argument("MUSIC threshold must be positive");
    bounds.validate();
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    if (!(irls_sigma_m > 0.0)) throw std::invalid_argument("IRLS sigma must be positive");
    if (data.step_index < 0) throw std::invalid_argument("data step index must be >= 0");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Despreads, detects the step and fills in the pseudorange; false when no step is found.
bool range_candidate(const ReceiveStream& stream, SignalCandidate& c, bool projected,
                     const ReceiverSettings& settings, SymbolSequence& seq) {
    seq = despread(stream, c, projected);
    const auto step = detect_step(seq, settings.data, settings.music_window);
    if (!step.valid) return false;
    c.step_offset = step.offset;
    c.pseudorange_m = pseudorange(c.code_phase, step.offset);
    return true;
}

void position(TrialResult& r, const std::vector<Measurement>& meas, Mode mode,
              const ReceiverSettings& settings) {
    if (meas.size() < 4) {
        r.failure = "fewer than 4 usable signals";
        r.error_m = kInf;
        return;
    }
    try {
        r.fix = mode == Mode::Baseline ? solve_ls(meas, settings.max_iterations)
                                       : solve_irls(meas, settings.max_iterations, settings.irls_sigma_m);
        r.error_m = surface_error(*r.fix, r.truth);
    } catch (const PositionFailure& e) {
        r.fix.reset();
        r.failure = e.what();
        r.error_m = kInf;
    }
}

}  // namespace

TrialResult process_stream(const Scene& scene, const ReceiveStream& stream, Mode mode,
                           const ReceiverSettings& settings, const AcquisitionEngine& engine,
                           const SteeringTable* table) {
    const auto t0 = std::chrono::steady_clock::now();
    settings.validate(stream.antennas());
    TrialResult r;
    r.mode = mode;
    r.seed = scene.seed;
    r.truth = scene.truth.position;
    const SatellitePositions sats = satellite_positions(scene.almanac, scene.epoch_s);
    std::vector<Measurement> meas;

    if (mode == Mode::Baseline) {
        for (int prn = 1; prn <= 32; ++prn) {
            auto c = engine.acquire_baseline(prn);
            if (!c) continue;
            ++r.acquired;
            SymbolSequence seq;
            if (!range_candidate(stream, *c, false, settings, seq)) continue;
            ++r.ranged;
            const auto s = sats.find(prn);
            if (s == sats.end()) continue;
            meas.push_back({s->second, *c->pseudorange_m});
            r.used_prns.push_back(prn);
        }
        r.screened = r.ranged;
        r.clique = static_cast<int>(meas.size());
    } else {
        std::optional<SteeringTable> own_table;
        if (table == nullptr) {
            own_table.emplace(scene.array);
            table = &*own_table;
        }
        std::vector<SignalCandidate> ranged;
        for (int prn = 1; prn <= 32; ++prn) {
            for (auto& c : engine.acquire_peaks(prn)) {
                ++r.acquired;
                SymbolSequence seq;
                if (!range_candidate(stream, c, true, settings, seq)) continue;
                ++r.ranged;
                if (sats.find(prn) == sats.end()) continue;
                const auto cov = spatial_covariance(seq, seq.length() - settings.music_window,
                                                    settings.music_window);
                c.doa = estimate_doa(c.projection, cov, *table);
                ranged.push_back(std::move(c));
            }
        }
        const auto screened = los_screen(ranged, settings.music_threshold);
        r.screened = static_cast<int>(screened.size());
        const auto graph = build_graph(screened, sats, settings.bounds);
        Rng rng(mix_seed(scene.seed, 3));
        const auto members = greedy_clique(graph, rng);
        r.clique = static_cast<int>(members.size());
        for (int v : members) {
            const auto& c = screened[static_cast<std::size_t>(v)];
            meas.push_back({sats.at(c.prn), *c.pseudorange_m});
            r.used_prns.push_back(c.prn);
        }
    }
    position(r, meas, mode, settings);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::vector<TrialResult> run_trial_modes(const Scene& scene, const std::vector<Mode>& modes,
                                         const ReceiverSettings& settings, const SteeringTable* table) {
    const auto t0 = std::chrono::steady_clock::now();
    const ReceiveStream stream = synthesize(scene);
    const double synth_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const AcquisitionEngine engine(stream, settings.acquisition);
    std::vector<TrialResult> out;
    for (Mode m : modes) {
        out.push_back(process_stream(scene, stream, m, settings, engine, table));
        out.back().seconds += synth_seconds;
    }
    return out;
}

TrialResult run_trial(const Scene& scene, Mode mode, const ReceiverSettings& settings) {
    return run_trial_modes(scene, {mode}, settings).front();
}

}  // namespace schieber
