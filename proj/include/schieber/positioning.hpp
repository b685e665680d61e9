#pragma once

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "schieber/constants.hpp"
#include "schieber/geometry.hpp"

namespace schieber {

struct Measurement {
    EcefVector satellite;
    double pseudorange_m = 0.0;
};

struct PositionFix {
    EcefVector position = EcefVector::Zero();
    double clock_bias_m = 0.0;  // c * dt
    int iterations = 0;
    bool converged = false;
    std::vector<double> weights;    // final weights, aligned with the measurements
    std::vector<double> residuals;  // final linearised residuals
};

class PositionFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultIrlsSigma = kSpeedOfLight * kSamplePeriod / 6.0;

/// Gauss-Newton from the Earth's centre with pseudo-inverse updates.
PositionFix solve_ls(const std::vector<Measurement>& measurements, int max_iterations = 20);

/// Same iteration with weights 1 / max(sigma, |e|)^2 from the previous residuals.
PositionFix solve_irls(const std::vector<Measurement>& measurements, int max_iterations = 20,
                       double sigma = kDefaultIrlsSigma);

/// Distance between the truth and the estimate scaled onto the sphere; +inf at the origin.
double surface_error(const EcefVector& estimate, const EcefVector& truth);
double surface_error(const PositionFix& fix, const EcefVector& truth);

}  // namespace schieber
