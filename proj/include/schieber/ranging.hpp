#pragma once

#include <Eigen/Dense>

#include "schieber/candidate.hpp"
#include "schieber/synth.hpp"

namespace schieber {

/// Despread symbol vectors r[K], one column per code period.
struct SymbolSequence {
    Eigen::MatrixXcd symbols;  // B x N_sym
    long long code_phase = 0;

    [[nodiscard]] Eigen::Index length() const { return symbols.cols(); }
};

/// r[K] = P Y[K L_c + l] Delta(f) c for every period with a complete window.
SymbolSequence despread(const ReceiveStream& stream, const SignalCandidate& candidate,
                        bool use_projection);

struct StepDetection {
    bool valid = false;
    long long step_index = 0;  // K-hat
    long long offset = 0;      // K-hat - K0
    double statistic = 0.0;
    double no_step_statistic = 0.0;
    double rotation_rad = 0.0;  // residual carrier rotation per period that was removed
};

/// Locates the sign flip of the data step. Step positions are searched in
/// [1, N_sym - tail); `tail` is the trailing block reserved for MUSIC.
StepDetection detect_step(const SymbolSequence& seq, const DataModel& data, int tail = 10);

/// R = c (l + L_c dK) T.
double pseudorange(long long code_phase, long long step_offset);

}  // namespace schieber
