#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <set>

#include "qosguard/vlc_phy.hpp"

using namespace qosguard;
using namespace qosguard::vlc;
using Catch::Approx;

namespace {

OpticalLinkParams worked_link() {
    OpticalLinkParams p;
    p.half_power_angle_deg = 60;
    p.detector_area_m2 = 1e-4;
    p.distance_m = 2;
    p.irradiance_angle_deg = 0;
    p.incidence_angle_deg = 0;
    p.fov_deg = 60;
    p.filter_gain = 1;
    p.refractive_index = 1.5;
    return p;
}

}  // namespace

TEST_CASE("lambertian_order", "[vlc]") {
    CHECK(lambertian_order(60.0) == Approx(1.0).epsilon(1e-14));
    CHECK(lambertian_order(30.0) == Approx(4.8188).margin(5e-5));
    CHECK(lambertian_order(89.999) > 0.0);
    CHECK(lambertian_order(89.999) < 0.1);
    CHECK_THROWS_AS(lambertian_order(0.0), std::domain_error);
    CHECK_THROWS_AS(lambertian_order(90.0), std::domain_error);
    CHECK_THROWS_AS(lambertian_order(-10.0), std::domain_error);
}

TEST_CASE("concentrator_gain", "[vlc]") {
    CHECK(concentrator_gain(30, 60, 1.5) == Approx(3.0).epsilon(1e-14));
    CHECK(concentrator_gain(70, 60, 1.5) == 0.0);
    CHECK(concentrator_gain(70, 60, 2.4) == 0.0);
    CHECK(concentrator_gain(0, 90, 1.0) == Approx(1.0).epsilon(1e-15));
    CHECK(concentrator_gain(60, 60, 1.5) == Approx(3.0));
    CHECK_THROWS_AS(concentrator_gain(10, 60, 0.9), std::domain_error);
}

TEST_CASE("los_channel_gain", "[vlc]") {
    const auto p = worked_link();
    const double h = los_channel_gain(p);
    CHECK(h == Approx(2.0 * 1e-4 / (8.0 * std::numbers::pi) * 3.0).epsilon(1e-12));
    CHECK(std::abs(h - 2.387e-5) / 2.387e-5 < 1e-3);

    auto outside = p;
    outside.incidence_angle_deg = 61;
    CHECK(los_channel_gain(outside) == 0.0);

    auto far = p;
    far.distance_m = 4;
    CHECK(los_channel_gain(far) == Approx(h / 4).epsilon(1e-14));

    auto bad = p;
    bad.distance_m = 0;
    CHECK_THROWS_AS(los_channel_gain(bad), std::domain_error);
}

TEST_CASE("los_channel_gain is non-increasing in distance and incidence", "[vlc][property]") {
    auto p = worked_link();
    for (double fov : {20.0, 45.0, 60.0, 85.0}) {
        p.fov_deg = fov;
        double previous = std::numeric_limits<double>::infinity();
        for (double psi = 0.0; psi <= 90.0; psi += 0.5) {
            p.incidence_angle_deg = psi;
            const double h = los_channel_gain(p);
            CHECK(h <= previous);
            CHECK((h == 0.0) == (psi > fov));
            previous = h;
        }
    }
    p = worked_link();
    double previous = std::numeric_limits<double>::infinity();
    for (double d = 0.1; d < 20.0; d *= 1.1) {
        p.distance_m = d;
        const double h = los_channel_gain(p);
        CHECK(h <= previous);
        previous = h;
    }
}

TEST_CASE("received_power", "[vlc]") {
    CHECK(received_power(1.0, 2.387e-5) == Approx(23.87e-6));
    CHECK(received_power(1.0, 0.0) == 0.0);
    CHECK(received_power(0.0, 0.3) == 0.0);
    CHECK_THROWS_AS(received_power(-1.0, 0.3), std::domain_error);
    for (double h = 0.0; h <= 1.0; h += 0.125) CHECK(received_power(5.0, h) <= 5.0);
}

TEST_CASE("band masks", "[vlc]") {
    CHECK(decode_band_mask(ColorBandMask::parse("0100110")) == std::vector<int>{2, 5, 6});
    CHECK(decode_band_mask(ColorBandMask::parse("1111111")) == std::vector<int>{1, 2, 3, 4, 5, 6, 7});
    CHECK(decode_band_mask(ColorBandMask::parse("1000000")) == std::vector<int>{1});
    CHECK(decode_band_mask(ColorBandMask::parse("0000001")) == std::vector<int>{7});
    CHECK(decode_band_mask(ColorBandMask::parse("0000010")) == std::vector<int>{6});

    CHECK_THROWS_AS(ColorBandMask::parse("0000000"), InvalidMask);
    CHECK_THROWS_AS(ColorBandMask(0), InvalidMask);
    CHECK_THROWS_AS(ColorBandMask(128), InvalidMask);
    CHECK_THROWS_AS(ColorBandMask::parse("010011"), InvalidMask);
    CHECK_THROWS_AS(ColorBandMask::parse("01001x0"), InvalidMask);
}

TEST_CASE("enumerate_masks", "[vlc]") {
    const auto masks = enumerate_masks();
    CHECK(masks.size() == 127);
    std::set<std::string> seen;
    for (const auto& m : masks) {
        seen.insert(m.to_string());
        // Decode then re-encode is the identity.
        CHECK(ColorBandMask::from_bands(decode_band_mask(m)) == m);
        CHECK(ColorBandMask::parse(m.to_string()) == m);
    }
    CHECK(seen.size() == 127);
    CHECK(seen.contains("0000001"));
    CHECK(seen.contains("1111111"));
    CHECK(!seen.contains("0000000"));
}

TEST_CASE("color band plan", "[vlc]") {
    double width = 0.0;
    for (std::size_t i = 0; i < kColorBands.size(); ++i) {
        const auto& b = kColorBands[i];
        CHECK(b.index == static_cast<int>(i) + 1);
        CHECK(b.width_nm == b.high_nm - b.low_nm);
        if (i > 0) CHECK(b.low_nm == kColorBands[i - 1].high_nm);
        width += b.width_nm;
    }
    CHECK(kColorBands.front().low_nm == 380);
    CHECK(kColorBands.back().high_nm == 780);
    CHECK(width == 400);

    CHECK(band_for_wavelength(400) == 1);
    CHECK(band_for_wavelength(450) == 1);
    CHECK(band_for_wavelength(450.5) == 2);
    CHECK(band_for_wavelength(380) == 1);
    CHECK(band_for_wavelength(600) == 4);
    CHECK(band_for_wavelength(779) == 7);
    CHECK(band_for_wavelength(780) == 7);
    CHECK_THROWS_AS(band_for_wavelength(379.9), OutOfSpectrum);
    CHECK_THROWS_AS(band_for_wavelength(781), OutOfSpectrum);
}
