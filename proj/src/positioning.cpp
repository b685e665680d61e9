#include "schieber/positioning.hpp"

#include <cmath>
#include <limits>

namespace schieber {

namespace {

constexpr double kConditionLimit = 1e12;
constexpr double kStepTolerance = 1e-4;

PositionFix gauss_newton(const std::vector<Measurement>& meas, int max_iterations, bool reweight,
                         double sigma) {
    const auto n = static_cast<Eigen::Index>(meas.size());
    if (n < 4) throw PositionFailure("positioning needs at least 4 measurements");
    if (max_iterations < 1) throw std::invalid_argument("positioning: max_iterations must be >= 1");
    if (reweight && !(sigma > 0.0)) throw std::invalid_argument("positioning: sigma must be positive");

    Eigen::Vector3d o = Eigen::Vector3d::Zero();
    Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
    Eigen::MatrixXd a(n, 4);
    Eigen::VectorXd delta(n);
    PositionFix fix;

    for (int k = 0; k < max_iterations; ++k) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Vector3d los = meas[static_cast<std::size_t>(i)].satellite - o;
            const double rho = los.norm();
            if (!(rho > 0.0)) throw PositionFailure("positioning: estimate coincides with a satellite");
            a.row(i) << -los.transpose() / rho, 1.0;
            delta[i] = meas[static_cast<std::size_t>(i)].pseudorange_m - rho;
        }
        const Eigen::MatrixXd normal = a.transpose() * w.asDiagonal() * a;
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(normal);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        if (!(lo > 0.0) || hi / lo > kConditionLimit) {
            throw PositionFailure("positioning: normal matrix is singular");
        }
        const Eigen::Vector4d step = normal.ldlt().solve(a.transpose() * w.asDiagonal() * delta);
        const Eigen::VectorXd e = delta - a * step;
        const Eigen::Vector3d next = o + step.head<3>();
        const double moved = (next - o).norm();
        o = next;
        fix.clock_bias_m = step[3];
        fix.iterations = k + 1;
        fix.weights.assign(w.data(), w.data() + n);
        fix.residuals.assign(e.data(), e.data() + n);
        if (!o.allFinite() || !std::isfinite(fix.clock_bias_m)) {
            throw PositionFailure("positioning: iteration diverged");
        }
        if (reweight) {
            for (Eigen::Index i = 0; i < n; ++i) {
                const double s = std::max(sigma, std::abs(e[i]));
                w[i] = 1.0 / (s * s);
            }
        }
        if (moved < kStepTolerance) {
            fix.converged = true;
            break;
        }
    }
    fix.position = o;
    return fix;
}

}  // namespace

PositionFix solve_ls(const std::vector<Measurement>& measurements, int max_iterations) {
    return gauss_newton(measurements, max_iterations, false, 0.0);
}

PositionFix solve_irls(const std::vector<Measurement>& measurements, int max_iterations, double sigma) {
    return gauss_newton(measurements, max_iterations, true, sigma);
}

double surface_error(const EcefVector& estimate, const EcefVector& truth) {
    const double r = estimate.norm();
    if (!(r > 0.0) || !estimate.allFinite()) return std::numeric_limits<double>::infinity();
    return (kEarthRadius / r * estimate - truth).norm();
}

double surface_error(const PositionFix& fix, const EcefVector& truth) {
    return surface_error(fix.position, truth);
}

}  // namespace schieber
