#pragma once

#include <cstddef>
#include <numbers>

namespace schieber {

inline constexpr double kSpeedOfLight = 299'792'458.0;   // m/s
inline constexpr double kCarrierHz = 1'575.42e6;         // GPS L1
inline constexpr double kWavelength = kSpeedOfLight / kCarrierHz;
inline constexpr double kEarthRadius = 6'371'000.0;      // spherical Earth, m

inline constexpr std::size_t kChipsPerCode = 1023;
inline constexpr std::size_t kSamplesPerChip = 4;
inline constexpr std::size_t kCodeSamples = kChipsPerCode * kSamplesPerChip;  // L_c
inline constexpr double kSampleRateHz = 4.092e6;
inline constexpr double kSamplePeriod = 1.0 / kSampleRateHz;                  // T

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kDeg = kPi / 180.0;

}  // namespace schieber
