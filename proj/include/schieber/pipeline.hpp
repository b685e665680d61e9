#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "schieber/acquisition.hpp"
#include "schieber/consistency.hpp"
#include "schieber/doa.hpp"
#include "schieber/positioning.hpp"
#include "schieber/synth.hpp"

namespace schieber {

enum class Mode { Baseline, Schieber };

std::string to_string(Mode mode);
/// Accepts "baseline" or "schieber"; throws std::invalid_argument otherwise.
Mode parse_mode(const std::string& text);

struct ReceiverSettings {
    AcquisitionSettings acquisition;
    int music_window = 10;         // Z
    double music_threshold = 10.0; // tau_M
    RangeBounds bounds;
    int max_iterations = 20;
    double irls_sigma_m = kDefaultIrlsSigma;
    DataModel data;  // K0 is public

    void validate(int antennas) const;
};

struct TrialResult {
    Mode mode = Mode::Baseline;
    std::uint64_t seed = 0;
    EcefVector truth = EcefVector::Zero();
    std::optional<PositionFix> fix;
    std::string failure;  // empty on success
    double error_m = 0.0;
    int acquired = 0;  // candidates after acquisition
    int ranged = 0;    // candidates with a detected data step
    int screened = 0;  // after the LoS screen (baseline: = ranged)
    int clique = 0;    // used for positioning
    std::vector<int> used_prns;
    double seconds = 0.0;
};

/// Runs one receiver on an already synthesised stream. Only the almanac, epoch and
/// array geometry of `scene` are visible to the receiver; the truth scores the fix.
TrialResult process_stream(const Scene& scene, const ReceiveStream& stream, Mode mode,
                           const ReceiverSettings& settings, const AcquisitionEngine& engine,
                           const SteeringTable* table = nullptr);

TrialResult run_trial(const Scene& scene, Mode mode, const ReceiverSettings& settings = {});

/// Synthesises once and runs every requested receiver on the same stream.
std::vector<TrialResult> run_trial_modes(const Scene& scene, const std::vector<Mode>& modes,
                                         const ReceiverSettings& settings = {},
                                         const SteeringTable* table = nullptr);

}  // namespace schieber
