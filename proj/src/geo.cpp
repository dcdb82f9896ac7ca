#include "geoloc/geo.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace geoloc {

namespace {
constexpr double kPi = 3.14159265358979323846;

double toRadians(double deg) { return deg * (kPi / 180.0); }
}  // namespace

GeoPosition::GeoPosition(double lat_deg, double lon_deg) : lat(lat_deg), lon(lon_deg) {
    if (!(lat >= -90.0 && lat <= 90.0)) {
        throw std::out_of_range("latitude out of range [-90, 90]: " + std::to_string(lat_deg));
    }
    if (!(lon >= -180.0 && lon <= 180.0)) {
        throw std::out_of_range("longitude out of range [-180, 180]: " + std::to_string(lon_deg));
    }
}

double distanceMeters(const GeoPosition& a, const GeoPosition& b) {
    const double phi1 = toRadians(a.lat);
    const double phi2 = toRadians(b.lat);
    const double dphi = toRadians(b.lat - a.lat);
    const double dlambda = toRadians(b.lon - a.lon);

    const double sp = std::sin(dphi / 2.0);
    const double sl = std::sin(dlambda / 2.0);
    // sin and cos of the half-deltas are even/symmetric in (a, b), so the
    // result is bit-for-bit symmetric.
    const double h = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
    const double clamped = h > 1.0 ? 1.0 : h;
    return 2.0 * kEarthRadiusMeters * std::asin(std::sqrt(clamped));
}

bool within(const GeoPosition& a, const GeoPosition& b, double radius_m) {
    return distanceMeters(a, b) <= radius_m;
}

}  // namespace geoloc
