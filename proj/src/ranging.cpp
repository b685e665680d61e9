#include "schieber/ranging.hpp"

#include <cmath>
#include <stdexcept>

namespace schieber {

namespace {
using cd = std::complex<double>;
const long long kLc = static_cast<long long>(kCodeSamples);
}  // namespace

SymbolSequence despread(const ReceiveStream& stream, const SignalCandidate& candidate,
                        bool use_projection) {
    const long long l = candidate.code_phase;
    if (l < 0 || l >= kLc) throw std::out_of_range("despread: code phase outside [0, L_c)");
    const long long periods = (stream.size() - l) / kLc;
    if (periods < 1) throw std::out_of_range("despread: stream shorter than one code window");
    const int b = stream.antennas();
    if (use_projection && (candidate.projection.matrix.rows() != b || candidate.projection.matrix.cols() != b)) {
        throw std::invalid_argument("despread: projection does not match the array size");
    }

    const auto& code = ca_codes().at(static_cast<std::size_t>(candidate.prn - 1));
    const double w = -2.0 * kPi * candidate.doppler_hz * stream.sample_period;
    Eigen::VectorXcd reference(kLc);
    for (long long k = 0; k < kLc; ++k) {
        reference[k] = code.samples[k] * std::polar(1.0, w * static_cast<double>(k));
    }

    SymbolSequence seq;
    seq.code_phase = l;
    seq.symbols.resize(b, periods);
    for (long long K = 0; K < periods; ++K) {
        const long long start = K * kLc + l;
        seq.symbols.col(K).noalias() = stream.samples.middleCols(start, kLc) * reference;
        seq.symbols.col(K) *= std::polar(1.0, w * static_cast<double>(start));
    }
    if (use_projection) seq.symbols = candidate.projection.matrix * seq.symbols;
    return seq;
}

StepDetection detect_step(const SymbolSequence& seq, const DataModel& data, int tail) {
    StepDetection out;
    const Eigen::Index n = seq.length();
    const Eigen::Index search_end = n - tail;
    if (tail < 0 || search_end < 3) return out;

    const Eigen::MatrixXcd cov = seq.symbols * seq.symbols.adjoint();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov);
    const Eigen::VectorXcd e1 = eig.eigenvectors().col(cov.rows() - 1);
    Eigen::VectorXcd z = (e1.adjoint() * seq.symbols).transpose();

    // Residual carrier rotation: coarse lag-one phase, refined on the squared
    // (sign-free) sequence.
    cd lag(0.0, 0.0);
    for (Eigen::Index k = 1; k < n; ++k) lag += z[k] * std::conj(z[k - 1]);
    const double coarse = std::arg(lag);
    double best_nu = 2.0 * coarse, best_power = -1.0;
    for (int i = -300; i <= 300; ++i) {
        const double nu = 2.0 * coarse + 0.001 * i;
        cd acc(0.0, 0.0);
        for (Eigen::Index k = 0; k < n; ++k) acc += z[k] * z[k] * std::polar(1.0, -nu * static_cast<double>(k));
        const double p = std::norm(acc);
        if (p > best_power) {
            best_power = p;
            best_nu = nu;
        }
    }
    out.rotation_rad = 0.5 * best_nu;
    for (Eigen::Index k = 0; k < n; ++k) z[k] *= std::polar(1.0, -out.rotation_rad * static_cast<double>(k));

    const cd total = z.sum();
    out.no_step_statistic = std::abs(total);
    cd prefix(0.0, 0.0);
    long long best_k = -1;
    double best = -1.0;
    for (Eigen::Index k = 1; k < search_end; ++k) {
        prefix += z[k - 1];
        const double s = std::abs(total - 2.0 * prefix);
        if (s > best) {
            best = s;
            best_k = k;
        }
    }
    out.statistic = best;
    out.step_index = best_k;
    out.offset = best_k - data.step_index;
    out.valid = best > out.no_step_statistic && best_k > 1 && best_k < search_end - 1;
    return out;
}

double pseudorange(long long code_phase, long long step_offset) {
    return kSpeedOfLight * static_cast<double>(code_phase + kLc * step_offset) * kSamplePeriod;
}

}  // namespace schieber
