#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "schieber/constants.hpp"
#include "schieber/geometry.hpp"
#include "schieber/random.hpp"

namespace schieber {

/// GPS L1 C/A Gold code, chips mapped 0 -> +1, 1 -> -1, and a 4x sample-and-hold copy.
struct SpreadingCode {
    int prn = 0;
    std::vector<int> chips;        // 1023 entries
    Eigen::VectorXd samples;       // L_c = 4092 entries

    [[nodiscard]] double at(long long k) const {
        const auto n = static_cast<long long>(kCodeSamples);
        return samples[static_cast<Eigen::Index>(((k % n) + n) % n)];
    }
};

/// Throws std::invalid_argument for PRNs outside 1..32.
SpreadingCode gen_ca_code(int prn);

/// All 32 codes, generated once.
const std::array<SpreadingCode, 32>& ca_codes();

/// Message-header model: -1 before the public instant K0, +1 from it on.
struct DataModel {
    long long step_index = 30;
};

int data_symbol(const DataModel& model, long long code_period);

/// Norm of the satellite channel vector under free-space loss, referenced to
/// ||h_0||^2 = antennas at 23,000 km.
double channel_gain(double range_m, int antennas);

inline constexpr double kReferenceRange = 23'000e3;

enum class ChannelKind { LineOfSight, Rayleigh };

struct JammerConfig {
    int antennas = 1;                 // J
    double jsr_db = 30.0;             // per transmit antenna
    ChannelKind channel = ChannelKind::LineOfSight;
    int active_antennas = 0;          // R; 0 selects J - 1 (J >= 2)
    double switch_probability = 0.05;

    [[nodiscard]] int active() const {
        if (antennas == 1) return 1;
        return active_antennas > 0 ? active_antennas : antennas - 1;
    }
    void validate() const;
};

/// A jammer together with its realised channels (receiver antennas x J).
struct JammerSetup {
    JammerConfig config;
    Eigen::MatrixXcd channels;
};

struct SpoofedSignal {
    int prn = 0;
    double delay_s = 0.0;     // total delay seen by the receiver (apparent range / c + clock offset)
    double doppler_hz = 0.0;  // emulated Doppler
};

struct SpooferConfig {
    std::vector<SpoofedSignal> signals;  // one entry per imitated satellite
    double ssr_db = 0.0;                 // per transmitted signal
    ChannelKind channel = ChannelKind::LineOfSight;

    void validate() const;
};

struct SpooferSetup {
    SpooferConfig config;
    Eigen::VectorXcd channel;
};

struct ReceiveStream {
    Eigen::MatrixXcd samples;  // antennas x N
    double sample_period = kSamplePeriod;
    std::uint64_t seed = 0;

    [[nodiscard]] int antennas() const { return static_cast<int>(samples.rows()); }
    [[nodiscard]] Eigen::Index size() const { return samples.cols(); }
};

/// Everything needed to synthesise one trial.
struct Scene {
    SatelliteAlmanac almanac;
    double epoch_s = 0.0;
    ReceiverTruth truth;
    ArrayGeometry array;
    double snr_db = -20.0;
    bool noise = true;
    std::vector<JammerSetup> jammers;
    std::vector<SpooferSetup> spoofers;
    std::size_t code_periods = 150;
    DataModel data;
    std::uint64_t seed = 0;
};

/// Per-satellite forward model quantities at the receiver.
struct SatelliteSignal {
    int prn = 0;
    bool visible = false;
    long long delay_samples = 0;  // floor(tau / T)
    double range_m = 0.0;
    double delay_s = 0.0;
    double doppler_hz = 0.0;
    std::complex<double> attenuation{0.0, 0.0};  // alpha
    Eigen::VectorXcd steering;
    LocalDirection direction;
};

SatelliteSignal satellite_signal(const SatelliteState& sat, const ReceiverTruth& truth,
                                 const ArrayGeometry& geom, double carrier_phase_rad);

/// The satellites' signals for a scene, in almanac order (invisible ones have alpha = 0).
std::vector<SatelliteSignal> satellite_signals(const Scene& scene);

Eigen::MatrixXcd satellite_contribution(const SatelliteSignal& sat, const DataModel& data,
                                        Eigen::Index samples);
void add_satellite_contribution(Eigen::MatrixXcd& out, const SatelliteSignal& sat,
                                const DataModel& data);

/// J x N activity mask of the jammer transmit antennas (all ones for J = 1).
Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> draw_jammer_activity(
    const JammerConfig& cfg, Eigen::Index samples, Rng& rng);

Eigen::MatrixXcd jammer_contribution(const JammerConfig& cfg, const Eigen::MatrixXcd& channels,
                                     Eigen::Index samples, Rng& rng);
void add_jammer_contribution(Eigen::MatrixXcd& out, const JammerConfig& cfg,
                             const Eigen::MatrixXcd& channels, Rng& rng);

Eigen::MatrixXcd spoofer_contribution(const SpooferConfig& cfg, const Eigen::VectorXcd& channel,
                                      const DataModel& data, Eigen::Index samples);
void add_spoofer_contribution(Eigen::MatrixXcd& out, const SpooferConfig& cfg,
                              const Eigen::VectorXcd& channel, const DataModel& data);

ReceiveStream synthesize(const Scene& scene);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace schieber
