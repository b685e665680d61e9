#include "schieber/geometry.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "almanac_data.hpp"

namespace schieber {

void SatelliteAlmanac::validate() const {
    std::set<int> seen;
    for (const auto& e : entries) {
        if (e.prn < 1 || e.prn > 32) {
            throw std::invalid_argument("almanac: PRN " + std::to_string(e.prn) + " outside 1..32");
        }
        if (!seen.insert(e.prn).second) {
            throw std::invalid_argument("almanac: duplicate PRN " + std::to_string(e.prn));
        }
        if (!(e.radius_m > 0.0) || !(e.rate_rad_s > 0.0)) {
            throw std::invalid_argument("almanac: PRN " + std::to_string(e.prn) +
                                        " needs positive radius and angular rate");
        }
    }
}

SatelliteAlmanac parse_almanac(std::string_view json_text) {
    const auto doc = nlohmann::json::parse(json_text);
    if (!doc.is_array()) {
        throw std::invalid_argument("almanac: expected a JSON array");
    }
    SatelliteAlmanac almanac;
    for (const auto& item : doc) {
        AlmanacEntry e;
        e.prn = item.at("prn").get<int>();
        e.raan_rad = item.at("raan_rad").get<double>();
        e.inclination_rad = item.at("inclination_rad").get<double>();
        e.arg_lat_epoch_rad = item.at("arg_lat_epoch_rad").get<double>();
        e.radius_m = item.at("radius_m").get<double>();
        e.rate_rad_s = item.at("rate_rad_s").get<double>();
        almanac.entries.push_back(e);
    }
    almanac.validate();
    return almanac;
}

SatelliteAlmanac load_almanac(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open almanac file: " + path);
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_almanac(buffer.str());
}

const SatelliteAlmanac& nominal_almanac() {
    static const SatelliteAlmanac almanac = parse_almanac(detail::kNominalAlmanacJson);
    return almanac;
}

std::vector<SatelliteState> propagate(const SatelliteAlmanac& almanac, double t_s) {
    std::vector<SatelliteState> states;
    states.reserve(almanac.entries.size());
    for (const auto& e : almanac.entries) {
        const double u = e.arg_lat_epoch_rad + e.rate_rad_s * t_s;
        const double cu = std::cos(u), su = std::sin(u);
        const double cO = std::cos(e.raan_rad), sO = std::sin(e.raan_rad);
        const double ci = std::cos(e.inclination_rad), si = std::sin(e.inclination_rad);
        // In-plane unit vectors: node direction and its 90 degree advance.
        const Eigen::Vector3d p(cO, sO, 0.0);
        const Eigen::Vector3d q(-sO * ci, cO * ci, si);
        SatelliteState s;
        s.prn = e.prn;
        s.position = e.radius_m * (cu * p + su * q);
        s.velocity = e.radius_m * e.rate_rad_s * (-su * p + cu * q);
        states.push_back(s);
    }
    return states;
}

bool visible(const EcefVector& receiver, const EcefVector& satellite) {
    return (satellite - receiver).dot(receiver) > 0.0;
}

ArrayGeometry ring_array(int antennas, double spacing_wavelengths, double wavelength) {
    if (antennas < 2) {
        throw std::invalid_argument("ring_array: need at least two antennas");
    }
    const double spacing = spacing_wavelengths * wavelength;
    const double radius = spacing / (2.0 * std::sin(kPi / antennas));
    ArrayGeometry geom;
    geom.wavelength = wavelength;
    geom.positions.resize(3, antennas);
    for (int b = 0; b < antennas; ++b) {
        const double angle = 2.0 * kPi * b / antennas;
        geom.positions.col(b) << radius * std::cos(angle), radius * std::sin(angle), 0.0;
    }
    return geom;
}

Eigen::Vector3d direction_to_unit(const LocalDirection& dir) {
    const double ce = std::cos(dir.elevation);
    return {ce * std::cos(dir.azimuth), ce * std::sin(dir.azimuth), std::sin(dir.elevation)};
}

Eigen::Matrix3d enu_orientation(const EcefVector& position, double yaw_rad) {
    const Eigen::Vector3d up = position.normalized();
    Eigen::Vector3d east(-position.y(), position.x(), 0.0);
    if (east.norm() < 1e-9 * position.norm()) {
        east = Eigen::Vector3d::UnitY();  // pole: any horizontal direction
    }
    east.normalize();
    const Eigen::Vector3d north = up.cross(east);
    Eigen::Matrix3d enu;
    enu.col(0) = east;
    enu.col(1) = north;
    enu.col(2) = up;
    const Eigen::Matrix3d yaw = Eigen::AngleAxisd(yaw_rad, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    return enu * yaw;
}

LocalDirection local_direction(const EcefVector& receiver, const Eigen::Matrix3d& orientation,
                               const EcefVector& satellite) {
    const Eigen::Vector3d d = orientation.transpose() * (satellite - receiver).normalized();
    if (d.z() < 0.0) {
        throw std::domain_error("local_direction: source below the array horizon");
    }
    LocalDirection out;
    out.elevation = std::asin(std::min(1.0, d.z()));
    if (std::hypot(d.x(), d.y()) < 1e-15) {
        out.azimuth = 0.0;
    } else {
        out.azimuth = std::atan2(d.y(), d.x());
        if (out.azimuth >= kPi) out.azimuth -= 2.0 * kPi;
    }
    return out;
}

Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, const Eigen::Vector3d& unit) {
    const Eigen::VectorXd path = geom.positions.transpose() * unit;
    Eigen::VectorXcd a(path.size());
    for (Eigen::Index b = 0; b < path.size(); ++b) {
        a[b] = std::polar(1.0, -2.0 * kPi * path[b] / geom.wavelength);
    }
    return a;
}

Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, const LocalDirection& dir) {
    return steering_vector(geom, direction_to_unit(dir));
}

RangeDelayDoppler range_delay_doppler(const EcefVector& receiver, double clock_offset_s,
                                      const EcefVector& sat_position,
                                      const EcefVector& sat_velocity) {
    const Eigen::Vector3d los = sat_position - receiver;
    RangeDelayDoppler out;
    out.range_m = los.norm();
    out.delay_s = out.range_m / kSpeedOfLight + clock_offset_s;
    const double radial_velocity = sat_velocity.dot(los) / out.range_m;
    out.doppler_hz = -radial_velocity / kSpeedOfLight * kCarrierHz;
    return out;
}

}  // namespace schieber
