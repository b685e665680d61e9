#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "schieber/pipeline.hpp"

namespace schieber {

/// Invalid scenario configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct JammerSpec {
    int count = 1;
    int antennas = 1;
    double jsr_db = 30.0;
    ChannelKind channel = ChannelKind::LineOfSight;
    int active_antennas = 0;  // 0 selects J - 1
    double switch_probability = 0.05;
};

struct SpooferSpec {
    int count = 1;
    int spoofed_count = 1;  // satellites imitated per spoofer
    double ssr_db = 0.0;
    ChannelKind channel = ChannelKind::LineOfSight;
};

struct ScenarioConfig {
    std::string name = "scenario";
    double snr_db = -20.0;
    std::vector<JammerSpec> jammers;
    std::vector<SpooferSpec> spoofers;
    int trial_count = 20;
    std::uint64_t master_seed = 1;
    int sim_ms = 150;  // code periods per trial
    int antennas = 8;
    bool ring_radius_auto = true;  // half-wavelength neighbour spacing
    double ring_radius_m = 0.0;
    std::vector<Mode> modes{Mode::Baseline, Mode::Schieber};
    double max_clock_offset_s = 1e-3;
    double spoof_range_min_m = 20'000e3;
    double spoof_range_max_m = 29'000e3;
    ReceiverSettings receiver;

    void validate() const;
};

ScenarioConfig parse_scenario(std::string_view json_text);
ScenarioConfig load_scenario(const std::filesystem::path& path);
/// Complete configuration with every default filled in.
std::string scenario_to_json(const ScenarioConfig& config, int indent = 2);

ArrayGeometry receiver_array(const ScenarioConfig& config);

/// Deterministic scene for trial `trial` of the scenario.
Scene draw_scene(const ScenarioConfig& config, std::size_t trial);

/// Uniform direction on the upper hemisphere (sin of the elevation uniform).
LocalDirection random_hemisphere_direction(Rng& rng);

struct ScenarioResult {
    ScenarioConfig config;
    std::vector<Mode> modes;
    std::vector<std::vector<TrialResult>> trials;  // [mode][trial]
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Trials run on up to `workers` threads; rows stay in trial order.
ScenarioResult run_scenario(const ScenarioConfig& config, int workers = 1,
                            const ProgressFn& progress = {});

struct CdfTable {
    Mode mode = Mode::Baseline;
    std::vector<double> errors;  // ascending, +inf at the tail
    std::size_t trials = 0;

    /// Fraction of trials with error <= x.
    [[nodiscard]] double fraction_at(double x) const;
    /// Smallest error e with fraction_at(e) >= q (+inf if never reached).
    [[nodiscard]] double quantile(double q) const;
};

CdfTable make_cdf(const std::vector<TrialResult>& results, Mode mode);

struct RateEstimate {
    std::size_t successes = 0;
    std::size_t trials = 0;
    double rate = 0.0;
    double lower = 0.0;  // Wilson 95% interval
    double upper = 0.0;
};

inline constexpr double kSuccessThresholdM = 1000.0;

RateEstimate wilson_rate(std::size_t successes, std::size_t trials, double z = 1.959963984540054);
RateEstimate success_rate(const std::vector<TrialResult>& results,
                          double threshold_m = kSuccessThresholdM);

/// Library version string recorded at configure time.
std::string version_string();

void write_trials_csv(std::ostream& out, const ScenarioResult& result);
void write_cdf_csv(std::ostream& out, const CdfTable& cdf);
std::string summary_json(const ScenarioResult& result);

/// Writes trials.csv, cdf_<mode>.csv and summary.json into `out_dir`; throws IoError.
void emit(const ScenarioResult& result, const std::filesystem::path& out_dir);

}  // namespace schieber
