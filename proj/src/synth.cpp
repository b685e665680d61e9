#include "schieber/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace schieber {

namespace {

// G2 output taps (phase selector) per PRN, 1-based register stages.
constexpr std::array<std::array<int, 2>, 32> kG2Taps = {{
    {2, 6},  {3, 7},  {4, 8},  {5, 9},  {1, 9},  {2, 10}, {1, 8},  {2, 9},
    {3, 10}, {2, 3},  {3, 4},  {5, 6},  {6, 7},  {7, 8},  {8, 9},  {9, 10},
    {1, 4},  {2, 5},  {3, 6},  {4, 7},  {5, 8},  {6, 9},  {1, 3},  {4, 6},
    {5, 7},  {6, 8},  {7, 9},  {8, 10}, {1, 6},  {2, 7},  {3, 8},  {4, 9},
}};

long long floor_div(long long a, long long b) {
    long long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

}  // namespace

SpreadingCode gen_ca_code(int prn) {
    if (prn < 1 || prn > 32) {
        throw std::invalid_argument("gen_ca_code: unknown PRN " + std::to_string(prn));
    }
    std::array<int, 11> g1{}, g2{};  // index 1..10
    g1.fill(1);
    g2.fill(1);
    const auto [s1, s2] = kG2Taps[static_cast<std::size_t>(prn - 1)];

    SpreadingCode code;
    code.prn = prn;
    code.chips.resize(kChipsPerCode);
    for (std::size_t i = 0; i < kChipsPerCode; ++i) {
        const int bit = g1[10] ^ g2[s1] ^ g2[s2];
        code.chips[i] = bit == 0 ? 1 : -1;
        const int f1 = g1[3] ^ g1[10];
        const int f2 = g2[2] ^ g2[3] ^ g2[6] ^ g2[8] ^ g2[9] ^ g2[10];
        for (int j = 10; j > 1; --j) {
            g1[j] = g1[j - 1];
            g2[j] = g2[j - 1];
        }
        g1[1] = f1;
        g2[1] = f2;
    }
    code.samples.resize(static_cast<Eigen::Index>(kCodeSamples));
    for (std::size_t k = 0; k < kCodeSamples; ++k) {
        code.samples[static_cast<Eigen::Index>(k)] = code.chips[k / kSamplesPerChip];
    }
    return code;
}

const std::array<SpreadingCode, 32>& ca_codes() {
    static const std::array<SpreadingCode, 32> codes = [] {
        std::array<SpreadingCode, 32> out;
        for (int prn = 1; prn <= 32; ++prn) out[static_cast<std::size_t>(prn - 1)] = gen_ca_code(prn);
        return out;
    }();
    return codes;
}

int data_symbol(const DataModel& model, long long code_period) {
    return code_period < model.step_index ? -1 : 1;
}

double channel_gain(double range_m, int antennas) {
    return std::sqrt(static_cast<double>(antennas)) * kReferenceRange / range_m;
}

void JammerConfig::validate() const {
    if (antennas < 1) throw std::invalid_argument("jammer: antennas must be >= 1");
    const int r = active();
    if (r < 1 || r > antennas) throw std::invalid_argument("jammer: active antennas must be in 1..J");
    if (switch_probability < 0.0 || switch_probability > 1.0) {
        throw std::invalid_argument("jammer: switch probability must be in [0, 1]");
    }
}

void SpooferConfig::validate() const {
    if (signals.empty()) throw std::invalid_argument("spoofer: spoofed satellite set is empty");
    for (const auto& s : signals) {
        if (s.prn < 1 || s.prn > 32) throw std::invalid_argument("spoofer: invalid spoofed PRN");
        if (std::abs(s.doppler_hz) > 4000.0) {
            throw std::invalid_argument("spoofer: emulated Doppler outside +-4 kHz");
        }
    }
}

SatelliteSignal satellite_signal(const SatelliteState& sat, const ReceiverTruth& truth,
                                 const ArrayGeometry& geom, double carrier_phase_rad) {
    SatelliteSignal s;
    s.prn = sat.prn;
    s.visible = visible(truth.position, sat.position);
    const auto rdd = range_delay_doppler(truth.position, truth.clock_offset_s, sat.position, sat.velocity);
    s.range_m = rdd.range_m;
    s.delay_s = rdd.delay_s;
    s.doppler_hz = rdd.doppler_hz;
    s.delay_samples = static_cast<long long>(std::floor(rdd.delay_s / kSamplePeriod));
    if (s.visible) {
        s.direction = local_direction(truth.position, truth.orientation, sat.position);
        s.steering = steering_vector(geom, s.direction);
        const double gain = channel_gain(rdd.range_m, geom.antennas()) /
                            std::sqrt(static_cast<double>(geom.antennas()));
        s.attenuation = std::polar(gain, carrier_phase_rad);
    } else {
        s.steering = Eigen::VectorXcd::Zero(geom.antennas());
    }
    return s;
}

std::vector<SatelliteSignal> satellite_signals(const Scene& scene) {
    Rng rng(mix_seed(scene.seed, 1));
    std::vector<SatelliteSignal> out;
    for (const auto& state : propagate(scene.almanac, scene.epoch_s)) {
        const double phase = uniform(rng, 0.0, 2.0 * kPi);
        out.push_back(satellite_signal(state, scene.truth, scene.array, phase));
    }
    return out;
}

void add_satellite_contribution(Eigen::MatrixXcd& out, const SatelliteSignal& sat,
                                const DataModel& data) {
    if (!sat.visible || sat.attenuation == std::complex<double>(0.0, 0.0)) return;
    const Eigen::Index n = out.cols();
    const auto& code = ca_codes()[static_cast<std::size_t>(sat.prn - 1)];
    const auto lc = static_cast<long long>(kCodeSamples);
    Eigen::VectorXcd s(n);
    const double w = 2.0 * kPi * sat.doppler_hz * kSamplePeriod;
    for (Eigen::Index k = 0; k < n; ++k) {
        const long long tx = k - sat.delay_samples;
        const double sym = data_symbol(data, floor_div(tx, lc)) * code.at(tx);
        s[k] = sat.attenuation * (sym * std::polar(1.0, w * static_cast<double>(k)));
    }
    out.noalias() += sat.steering * s.transpose();
}

Eigen::MatrixXcd satellite_contribution(const SatelliteSignal& sat, const DataModel& data,
                                        Eigen::Index samples) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(sat.steering.size(), samples);
    add_satellite_contribution(out, sat, data);
    return out;
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> draw_jammer_activity(
    const JammerConfig& cfg, Eigen::Index samples, Rng& rng) {
    cfg.validate();
    const int j = cfg.antennas;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(j, samples);
    if (j == 1) {
        mask.setConstant(true);
        return mask;
    }
    const int r = cfg.active();
    std::vector<int> perm(static_cast<std::size_t>(j));
    auto redraw = [&] {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
    };
    redraw();
    std::bernoulli_distribution do_switch(cfg.switch_probability);
    for (Eigen::Index k = 0; k < samples; ++k) {
        if (k > 0 && do_switch(rng)) redraw();
        for (int i = 0; i < j; ++i) mask(perm[static_cast<std::size_t>(i)], k) = i < r;
    }
    return mask;
}

void add_jammer_contribution(Eigen::MatrixXcd& out, const JammerConfig& cfg,
                             const Eigen::MatrixXcd& channels, Rng& rng) {
    cfg.validate();
    if (channels.cols() != cfg.antennas || channels.rows() != out.rows()) {
        throw std::invalid_argument("jammer: channel matrix must be receiver antennas x J");
    }
    const Eigen::Index n = out.cols();
    const double jsr = db_to_linear(cfg.jsr_db);
    const double b = static_cast<double>(out.rows());
    // Per-transmit-antenna JSR fixes each active antenna's symbol variance.
    Eigen::VectorXd variance(cfg.antennas);
    for (int j = 0; j < cfg.antennas; ++j) {
        const double g2 = channels.col(j).squaredNorm();
        variance[j] = g2 > 0.0 ? jsr * b / g2 : 0.0;
    }
    const auto mask = draw_jammer_activity(cfg, n, rng);
    Eigen::MatrixXcd symbols(cfg.antennas, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        for (int j = 0; j < cfg.antennas; ++j) {
            const auto s = complex_normal(rng, variance[j]);
            symbols(j, k) = mask(j, k) ? s : std::complex<double>(0.0, 0.0);
        }
    }
    out.noalias() += channels * symbols;
}

Eigen::MatrixXcd jammer_contribution(const JammerConfig& cfg, const Eigen::MatrixXcd& channels,
                                     Eigen::Index samples, Rng& rng) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(channels.rows(), samples);
    add_jammer_contribution(out, cfg, channels, rng);
    return out;
}

void add_spoofer_contribution(Eigen::MatrixXcd& out, const SpooferConfig& cfg,
                              const Eigen::VectorXcd& channel, const DataModel& data) {
    cfg.validate();
    if (channel.size() != out.rows()) {
        throw std::invalid_argument("spoofer: channel length must match receiver antennas");
    }
    const double g2 = channel.squaredNorm();
    if (g2 <= 0.0) return;
    const double b = static_cast<double>(out.rows());
    const double amplitude = std::sqrt(db_to_linear(cfg.ssr_db) * b / g2);
    const Eigen::Index n = out.cols();
    const auto lc = static_cast<long long>(kCodeSamples);
    Eigen::VectorXcd s = Eigen::VectorXcd::Zero(n);
    for (const auto& sig : cfg.signals) {
        const auto& code = ca_codes()[static_cast<std::size_t>(sig.prn - 1)];
        const auto delay = static_cast<long long>(std::floor(sig.delay_s / kSamplePeriod));
        const double w = 2.0 * kPi * sig.doppler_hz * kSamplePeriod;
        for (Eigen::Index k = 0; k < n; ++k) {
            const long long tx = k - delay;
            const double sym = data_symbol(data, floor_div(tx, lc)) * code.at(tx);
            s[k] += (amplitude * sym) * std::polar(1.0, w * static_cast<double>(k));
        }
    }
    out.noalias() += channel * s.transpose();
}

Eigen::MatrixXcd spoofer_contribution(const SpooferConfig& cfg, const Eigen::VectorXcd& channel,
                                      const DataModel& data, Eigen::Index samples) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(channel.size(), samples);
    add_spoofer_contribution(out, cfg, channel, data);
    return out;
}

ReceiveStream synthesize(const Scene& scene) {
    const int b = scene.array.antennas();
    const auto n = static_cast<Eigen::Index>(scene.code_periods * kCodeSamples);
    if (n < static_cast<Eigen::Index>(kCodeSamples)) {
        throw std::invalid_argument("synthesize: window shorter than one code period");
    }
    ReceiveStream stream;
    stream.seed = scene.seed;
    stream.samples = Eigen::MatrixXcd::Zero(b, n);

    for (const auto& sat : satellite_signals(scene)) {
        add_satellite_contribution(stream.samples, sat, scene.data);
    }
    for (std::size_t i = 0; i < scene.jammers.size(); ++i) {
        Rng rng(mix_seed(scene.seed, 100 + i));
        add_jammer_contribution(stream.samples, scene.jammers[i].config, scene.jammers[i].channels, rng);
    }
    for (const auto& sp : scene.spoofers) {
        add_spoofer_contribution(stream.samples, sp.config, sp.channel, scene.data);
    }
    if (scene.noise) {
        Rng rng(mix_seed(scene.seed, 2));
        const double variance = 1.0 / db_to_linear(scene.snr_db);
        for (Eigen::Index k = 0; k < n; ++k) {
            for (int a = 0; a < b; ++a) stream.samples(a, k) += complex_normal(rng, variance);
        }
    }
    return stream;
}

}  // namespace schieber
