#include "schieber/doa.hpp"

#include <stdexcept>

namespace schieber {

Eigen::MatrixXcd spatial_covariance(const SymbolSequence& seq, long long start, int z) {
    if (z < 1 || start < 0 || start + z > seq.length()) {
        throw std::out_of_range("spatial_covariance: not enough symbol vectors");
    }
    const auto r = seq.symbols.middleCols(start, z);
    Eigen::MatrixXcd cov = r * r.adjoint() / static_cast<double>(z);
    return 0.5 * (cov + cov.adjoint());
}

SteeringTable::SteeringTable(const ArrayGeometry& geom) {
    vectors_.resize(geom.antennas(), kElevationSteps * kAzimuthSteps);
    for (Eigen::Index c = 0; c < vectors_.cols(); ++c) {
        vectors_.col(c) = steering_vector(geom, direction(c));
    }
}

LocalDirection SteeringTable::direction(Eigen::Index column) {
    const auto el = static_cast<int>(column / kAzimuthSteps);
    const auto az = static_cast<int>(column % kAzimuthSteps);
    LocalDirection d;
    d.elevation = el * kDeg;
    d.azimuth = (az < 180 ? az : az - 360) * kDeg;
    return d;
}

Eigen::MatrixXcd noise_subspace(const Eigen::MatrixXcd& covariance) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(covariance);
    return eig.eigenvectors().leftCols(covariance.rows() - 1);
}

double music_objective(const Eigen::MatrixXcd& projection, const Eigen::MatrixXcd& noise_basis,
                       const Eigen::VectorXcd& a) {
    const Eigen::VectorXcd pa = projection * a;
    const double num = pa.squaredNorm();
    if (num < 1e-9 * static_cast<double>(a.size())) return 0.0;
    return num / ((noise_basis.adjoint() * pa).squaredNorm() + 1e-12);
}

DoaEstimate estimate_doa(const NullingProjection& projection, const Eigen::MatrixXcd& covariance,
                         const SteeringTable& table) {
    const int b = table.antennas();
    if (covariance.rows() != b || projection.matrix.rows() != b) {
        throw std::invalid_argument("estimate_doa: dimension mismatch");
    }
    const Eigen::MatrixXcd en = noise_subspace(covariance);
    const Eigen::MatrixXcd pa = projection.matrix * table.vectors();
    const Eigen::MatrixXcd ea = en.adjoint() * pa;
    const Eigen::VectorXd num = pa.colwise().squaredNorm().transpose();
    const Eigen::VectorXd den = ea.colwise().squaredNorm().transpose();
    const double floor = 1e-9 * b;

    DoaEstimate best;
    Eigen::Index best_col = 0;
    best.objective = -1.0;
    for (Eigen::Index c = 0; c < pa.cols(); ++c) {
        const double v = num[c] < floor ? 0.0 : num[c] / (den[c] + 1e-12);
        if (v > best.objective) {
            best.objective = v;
            best_col = c;
        }
    }
    best.direction = SteeringTable::direction(best_col);
    best.elevation_deg = static_cast<int>(best_col / kAzimuthSteps);
    best.azimuth_deg = static_cast<int>(best_col % kAzimuthSteps);
    best.steering = table.vectors().col(best_col);
    return best;
}

std::vector<SignalCandidate> los_screen(const std::vector<SignalCandidate>& candidates,
                                        double threshold) {
    std::vector<SignalCandidate> kept;
    for (const auto& c : candidates) {
        if (c.doa && c.doa->objective >= threshold) kept.push_back(c);
    }
    return kept;
}

}  // namespace schieber
