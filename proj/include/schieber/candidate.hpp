#pragma once

#include <optional>

#include <Eigen/Dense>

#include "schieber/geometry.hpp"

namespace schieber {

/// P = I - U U^H over the leading interference eigenvectors U.
struct NullingProjection {
    Eigen::MatrixXcd matrix;
    int nulled = 0;
    Eigen::VectorXd eigenvalues;  // of the code-projected Gram, descending
    Eigen::MatrixXcd nulled_basis;  // B x nulled
};

struct DoaEstimate {
    LocalDirection direction;
    int elevation_deg = 0;
    int azimuth_deg = 0;  // 0..359 grid index
    double objective = 0.0;
    Eigen::VectorXcd steering;
};

/// One acquired signal. Later stages fill in the optional fields.
struct SignalCandidate {
    int prn = 0;
    long long code_phase = 0;  // samples, 0 <= code_phase < L_c
    int doppler_bin = 0;
    double doppler_hz = 0.0;
    double caf = 0.0;
    NullingProjection projection;

    std::optional<long long> step_offset;  // observed step minus K0, in code periods
    std::optional<double> pseudorange_m;
    std::optional<DoaEstimate> doa;
};

}  // namespace schieber
