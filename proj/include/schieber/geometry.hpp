#pragma once

#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "schieber/constants.hpp"

namespace schieber {

using EcefVector = Eigen::Vector3d;

/// One circular-orbit slot of the constellation.
struct AlmanacEntry {
    int prn = 0;
    double raan_rad = 0.0;
    double inclination_rad = 0.0;
    double arg_lat_epoch_rad = 0.0;
    double radius_m = 0.0;
    double rate_rad_s = 0.0;
};

struct SatelliteAlmanac {
    std::vector<AlmanacEntry> entries;

    /// Throws std::invalid_argument on non-positive radius/rate or bad/duplicate PRN ids.
    void validate() const;
};

/// Parses the JSON almanac format: an array of
/// {prn, raan_rad, inclination_rad, arg_lat_epoch_rad, radius_m, rate_rad_s}.
SatelliteAlmanac parse_almanac(std::string_view json_text);
SatelliteAlmanac load_almanac(const std::string& path);

/// The bundled 24-slot nominal constellation (data/almanac_nominal.json).
const SatelliteAlmanac& nominal_almanac();

struct SatelliteState {
    int prn = 0;
    EcefVector position;
    EcefVector velocity;
};

std::vector<SatelliteState> propagate(const SatelliteAlmanac& almanac, double t_s);

/// Satellite strictly above the local horizon plane of a spherical Earth.
bool visible(const EcefVector& receiver, const EcefVector& satellite);

/// Receiver antenna layout: columns are antenna positions in the receiver-local frame (m).
struct ArrayGeometry {
    Eigen::Matrix3Xd positions;
    double wavelength = kWavelength;

    [[nodiscard]] int antennas() const { return static_cast<int>(positions.cols()); }
};

/// Uniform circular array in the local xy-plane with neighbouring elements
/// `spacing_wavelengths` apart.
ArrayGeometry ring_array(int antennas, double spacing_wavelengths = 0.5,
                         double wavelength = kWavelength);

struct ReceiverTruth {
    EcefVector position;
    Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();  // local -> ECEF
    double clock_offset_s = 0.0;
};

struct LocalDirection {
    double elevation = 0.0;  // [0, pi/2]
    double azimuth = 0.0;    // [-pi, pi)
};

/// v(theta, phi) = [cos t cos p, cos t sin p, sin t].
Eigen::Vector3d direction_to_unit(const LocalDirection& dir);

/// East-North-Up basis at `position` as columns (local -> ECEF), then a yaw about Up.
Eigen::Matrix3d enu_orientation(const EcefVector& position, double yaw_rad = 0.0);

/// Direction of `satellite` in the receiver-local frame. Throws std::domain_error
/// when the satellite lies below the array plane.
LocalDirection local_direction(const EcefVector& receiver, const Eigen::Matrix3d& orientation,
                               const EcefVector& satellite);

Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, const LocalDirection& dir);
Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, const Eigen::Vector3d& unit);

struct RangeDelayDoppler {
    double range_m = 0.0;
    double delay_s = 0.0;
    double doppler_hz = 0.0;
};

RangeDelayDoppler range_delay_doppler(const EcefVector& receiver, double clock_offset_s,
                                      const EcefVector& sat_position,
                                      const EcefVector& sat_velocity);

}  // namespace schieber
