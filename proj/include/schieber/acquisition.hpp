#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "schieber/candidate.hpp"
#include "schieber/synth.hpp"

namespace schieber {

inline constexpr double kDopplerStepHz = 250.0;
inline constexpr double kDopplerMaxHz = 4000.0;
inline constexpr int kDopplerBins = 33;

/// Frequency of Doppler bin `bin` (0 -> -4 kHz, 32 -> +4 kHz).
double doppler_hz(int bin);

struct AcquisitionSettings {
    double baseline_threshold = 11.2;  // tau
    double jass_threshold = 7.5;       // tau_J
    int nulled_dimensions = 4;         // I
    long long window_start = 5 * static_cast<long long>(kCodeSamples);
    int suppress_samples = 4;
    int suppress_bins = 1;

    void validate(int antennas) const;
};

/// CAF values over code phase (rows, relative to the window start) and Doppler bin (columns).
struct CafGrid {
    int prn = 0;
    long long window_start = 0;
    Eigen::MatrixXd values;

    [[nodiscard]] double at(long long code_phase, int bin) const { return values(code_phase, bin); }
};

struct CafPeak {
    long long code_phase = 0;
    int doppler_bin = 0;
    double value = 0.0;
};

/// Global maximum, ties to the smallest (code phase, bin).
CafPeak global_peak(const CafGrid& grid);

/// Local maxima over the 3x3 neighbourhood (code phase wraps, Doppler does not)
/// that reach `threshold`, strongest first, with main-lobe duplicates removed.
std::vector<CafPeak> find_peaks(const CafGrid& grid, double threshold, int suppress_samples,
                                int suppress_bins);

/// x -> x - c (c^T x) / L_c, the projector onto the complement of the code.
class CodeProjection {
public:
    explicit CodeProjection(const SpreadingCode& code);

    [[nodiscard]] Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;
    /// Right-multiplies every row: Y -> Y T.
    [[nodiscard]] Eigen::MatrixXcd apply_rows(const Eigen::MatrixXcd& y) const;
    [[nodiscard]] double trace() const;

private:
    Eigen::VectorXd code_;
};

/// Y[start], the B x L_c window beginning at absolute sample `start`.
Eigen::MatrixXcd code_window(const ReceiveStream& stream, long long start);

/// Y[start] Delta(f), the phase reference being the absolute sample index.
Eigen::MatrixXcd doppler_wipe(const ReceiveStream& stream, long long start, double f_hz);

/// m = Y[start] Delta(f) c.
Eigen::VectorXcd matched_vector(const ReceiveStream& stream, const SpreadingCode& code,
                                long long start, double f_hz);

double caf_baseline(const ReceiveStream& stream, const SpreadingCode& code, long long start,
                    double f_hz);

/// Nulling projection from the window Gram G = Y Y^H and matched vector m, using
/// Y Delta T (Y Delta)^H = G - m m^H / L_c.
NullingProjection nulling_projection(const Eigen::MatrixXcd& gram, const Eigen::VectorXcd& m,
                                     int nulled);

NullingProjection interference_projection(const ReceiveStream& stream, const SpreadingCode& code,
                                          long long start, double f_hz, int nulled);

/// ||P m||^2 / tr(P G), zero when the denominator vanishes.
double projected_caf(const NullingProjection& p, const Eigen::MatrixXcd& gram,
                     const Eigen::VectorXcd& m);

double caf_jass(const ReceiveStream& stream, const SpreadingCode& code, long long start,
                double f_hz, int nulled);

/// Evaluates full CAF grids for one stream. The per-Doppler spectra of the window
/// and the sliding Grams are shared across PRNs. The stream must outlive the engine.
class AcquisitionEngine {
public:
    explicit AcquisitionEngine(const ReceiveStream& stream, AcquisitionSettings settings = {});
    ~AcquisitionEngine();
    AcquisitionEngine(const AcquisitionEngine&) = delete;
    AcquisitionEngine& operator=(const AcquisitionEngine&) = delete;

    [[nodiscard]] const AcquisitionSettings& settings() const { return settings_; }
    [[nodiscard]] const ReceiveStream& stream() const { return *stream_; }

    /// Matched vectors for every cell: B-vectors stored at ((bin * L_c) + code_phase) * B.
    [[nodiscard]] std::vector<std::complex<double>> matched_field(int prn) const;
    [[nodiscard]] Eigen::VectorXcd matched_vector(int prn, long long code_phase, int bin) const;
    [[nodiscard]] const Eigen::MatrixXcd& gram(long long code_phase) const;
    [[nodiscard]] double gram_trace(long long code_phase) const;

    [[nodiscard]] CafGrid baseline_grid(int prn) const;
    /// Projected CAF over the grid via the rank-one secular equation.
    [[nodiscard]] CafGrid jass_grid(int prn) const;

    [[nodiscard]] std::optional<SignalCandidate> acquire_baseline(int prn) const;
    [[nodiscard]] std::vector<SignalCandidate> acquire_peaks(int prn) const;

private:
    struct Impl;
    const ReceiveStream* stream_;
    AcquisitionSettings settings_;
    std::unique_ptr<Impl> impl_;
};

/// Projected CAF of one cell from the eigendecomposition of its Gram (ascending
/// eigenvalues, column-major eigenvectors). Falls back to a direct decomposition
/// on degenerate spectra.
double secular_caf(const double* eigenvalues, const std::complex<double>* eigenvectors,
                   const Eigen::MatrixXcd& gram, const std::complex<double>* m, int antennas,
                   int nulled);

std::optional<SignalCandidate> acquire_baseline(const ReceiveStream& stream,
                                                const SpreadingCode& code,
                                                const AcquisitionSettings& settings = {});
std::vector<SignalCandidate> acquire_peaks(const ReceiveStream& stream, const SpreadingCode& code,
                                           const AcquisitionSettings& settings = {});

/// Writes "code_phase,doppler_hz,value" rows.
void write_caf_csv(std::ostream& out, const CafGrid& grid);

}  // namespace schieber
