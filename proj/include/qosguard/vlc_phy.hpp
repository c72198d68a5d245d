#pragma once

// Line-of-sight optical channel gain and the seven-band visible light plan.
//
// Angles cross the interface in degrees. Channels in the admission model are
// fungible; the band masks here only label them.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace qosguard::vlc {

inline constexpr double degrees_to_radians(double deg) { return deg * std::numbers::pi / 180.0; }

struct OpticalLinkParams {
    double half_power_angle_deg = 60.0;
    double detector_area_m2 = 1e-4;
    double distance_m = 2.0;
    double irradiance_angle_deg = 0.0;
    double incidence_angle_deg = 0.0;
    double fov_deg = 60.0;
    double filter_gain = 1.0;        // T_s
    double refractive_index = 1.5;   // v

    void validate() const {
        if (!(half_power_angle_deg > 0.0 && half_power_angle_deg < 90.0))
            throw std::domain_error("half-power angle must lie in (0, 90) degrees");
        if (!(detector_area_m2 > 0.0)) throw std::domain_error("detector area must be positive");
        if (!(distance_m > 0.0)) throw std::domain_error("distance must be positive");
        if (!(fov_deg >= 0.0 && fov_deg <= 90.0)) throw std::domain_error("field of view must lie in [0, 90] degrees");
        if (!(filter_gain >= 0.0 && filter_gain <= 1.0)) throw std::domain_error("filter gain must lie in [0, 1]");
        if (!(refractive_index >= 1.0)) throw std::domain_error("refractive index must be at least 1");
    }
};

/// Lambertian order -ln 2 / ln cos(half-power angle).
inline double lambertian_order(double half_power_angle_deg) {
    if (!(half_power_angle_deg > 0.0 && half_power_angle_deg < 90.0))
        throw std::domain_error("half-power angle must lie in (0, 90) degrees");
    return -std::log(2.0) / std::log(std::cos(degrees_to_radians(half_power_angle_deg)));
}

/// v^2 / sin^2(fov) inside the field of view, 0 outside.
inline double concentrator_gain(double incidence_deg, double fov_deg, double refractive_index) {
    if (!(refractive_index >= 1.0)) throw std::domain_error("refractive index must be at least 1");
    if (incidence_deg < 0.0 || incidence_deg > fov_deg) return 0.0;
    const double s = std::sin(degrees_to_radians(fov_deg));
    return refractive_index * refractive_index / (s * s);
}

/// DC gain of the direct path.
inline double los_channel_gain(const OpticalLinkParams& p) {
    p.validate();
    if (p.incidence_angle_deg < 0.0 || p.incidence_angle_deg > p.fov_deg) return 0.0;
    const double order = lambertian_order(p.half_power_angle_deg);
    const double irradiance = degrees_to_radians(p.irradiance_angle_deg);
    const double incidence = degrees_to_radians(p.incidence_angle_deg);
    const double radiant = (order + 1.0) * p.detector_area_m2 /
                           (2.0 * std::numbers::pi * p.distance_m * p.distance_m) *
                           std::pow(std::cos(irradiance), order);
    return radiant * p.filter_gain * concentrator_gain(p.incidence_angle_deg, p.fov_deg, p.refractive_index) *
           std::cos(incidence);
}

inline double received_power(double transmit_power_w, double gain) {
    if (!(transmit_power_w >= 0.0)) throw std::domain_error("transmit power must be non-negative");
    if (!(gain >= 0.0)) throw std::domain_error("channel gain must be non-negative");
    return transmit_power_w * gain;
}

struct ColorBand {
    int index;
    double low_nm;
    double high_nm;
    double width_nm;
};

inline constexpr int kBandCount = 7;

inline constexpr std::array<ColorBand, kBandCount> kColorBands{{
    {1, 380, 450, 70},
    {2, 450, 510, 60},
    {3, 510, 560, 50},
    {4, 560, 600, 40},
    {5, 600, 650, 50},
    {6, 650, 710, 60},
    {7, 710, 780, 70},
}};

/// Band containing the wavelength. A shared boundary belongs to the lower band.
inline int band_for_wavelength(double nm) {
    if (!(nm >= kColorBands.front().low_nm && nm <= kColorBands.back().high_nm))
        throw OutOfSpectrum("wavelength " + std::to_string(nm) + " nm is outside the visible plan");
    for (const auto& b : kColorBands)
        if (nm <= b.high_nm) return b.index;
    return kColorBands.back().index;
}

/// Seven-bit band selection. Band 1 is the most significant bit, so the
/// pattern "1000000" selects band 1 and "0000001" selects band 7.
class ColorBandMask {
public:
    explicit ColorBandMask(std::uint8_t bits) : bits_(bits) {
        if (bits == 0 || bits >= (1u << kBandCount))
            throw InvalidMask("band mask must be a non-zero 7-bit pattern");
    }

    static ColorBandMask parse(std::string_view pattern) {
        if (pattern.size() != kBandCount) throw InvalidMask("band mask must have 7 digits");
        std::uint8_t bits = 0;
        for (char c : pattern) {
            if (c != '0' && c != '1') throw InvalidMask("band mask digits must be 0 or 1");
            bits = static_cast<std::uint8_t>((bits << 1) | (c == '1'));
        }
        return ColorBandMask(bits);
    }

    static ColorBandMask from_bands(const std::vector<int>& bands) {
        std::uint8_t bits = 0;
        for (int b : bands) {
            if (b < 1 || b > kBandCount) throw InvalidMask("band index " + std::to_string(b) + " out of range");
            bits |= static_cast<std::uint8_t>(1u << (kBandCount - b));
        }
        return ColorBandMask(bits);
    }

    std::uint8_t bits() const { return bits_; }
    int band_count() const { return std::popcount(bits_); }

    std::string to_string() const {
        std::string s(kBandCount, '0');
        for (int i = 0; i < kBandCount; ++i)
            if (bits_ & (1u << (kBandCount - 1 - i))) s[i] = '1';
        return s;
    }

    friend bool operator==(ColorBandMask, ColorBandMask) = default;

private:
    std::uint8_t bits_;
};

/// Selected band indices, ascending.
inline std::vector<int> decode_band_mask(ColorBandMask mask) {
    std::vector<int> bands;
    for (int b = 1; b <= kBandCount; ++b)
        if (mask.bits() & (1u << (kBandCount - b))) bands.push_back(b);
    return bands;
}

/// All 127 non-empty masks in ascending bit order.
inline std::vector<ColorBandMask> enumerate_masks() {
    std::vector<ColorBandMask> out;
    for (unsigned bits = 1; bits < (1u << kBandCount); ++bits) out.emplace_back(static_cast<std::uint8_t>(bits));
    return out;
}

}  // namespace qosguard::vlc
