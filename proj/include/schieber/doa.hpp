#pragma once

#include <vector>

#include <Eigen/Dense>

#include "schieber/candidate.hpp"
#include "schieber/ranging.hpp"

namespace schieber {

inline constexpr int kElevationSteps = 91;  // 0..90 deg
inline constexpr int kAzimuthSteps = 360;   // 0..359 deg

/// (1/Z) sum of r r^H over the Z vectors starting at `start`.
Eigen::MatrixXcd spatial_covariance(const SymbolSequence& seq, long long start, int z);

/// Steering vectors on the 1-degree elevation/azimuth grid, column index el * 360 + az.
class SteeringTable {
public:
    explicit SteeringTable(const ArrayGeometry& geom);

    [[nodiscard]] const Eigen::MatrixXcd& vectors() const { return vectors_; }
    [[nodiscard]] int antennas() const { return static_cast<int>(vectors_.rows()); }
    [[nodiscard]] static LocalDirection direction(Eigen::Index column);

private:
    Eigen::MatrixXcd vectors_;
};

/// ||P a||^2 / (||E_N^H P a||^2 + 1e-12), or 0 when P a vanishes.
double music_objective(const Eigen::MatrixXcd& projection, const Eigen::MatrixXcd& noise_basis,
                       const Eigen::VectorXcd& a);

/// All eigenvectors of the covariance except the principal one.
Eigen::MatrixXcd noise_subspace(const Eigen::MatrixXcd& covariance);

/// Grid search of the projected MUSIC objective; ties keep the lowest grid index.
DoaEstimate estimate_doa(const NullingProjection& projection, const Eigen::MatrixXcd& covariance,
                         const SteeringTable& table);

/// Candidates whose DoA objective reaches tau_M.
std::vector<SignalCandidate> los_screen(const std::vector<SignalCandidate>& candidates,
                                        double threshold = 10.0);

}  // namespace schieber
