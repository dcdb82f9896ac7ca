#pragma once

#include <compare>
#include <cstdint>
#include <functional>

namespace geoloc {

// Global identifier of a node (client or server). The total order on ids is
// the order used by the bully election: lowest id wins.
struct NodeId {
    uint64_t value = 0;
    auto operator<=>(const NodeId&) const = default;
};

struct ObjectId {
    uint64_t value = 0;
    auto operator<=>(const ObjectId&) const = default;
};

inline constexpr double kEarthRadiusMeters = 6371000.0;

// Latitude/longitude in degrees. Bounds are checked on construction and on
// every parse path, so a GeoPosition in hand is always valid.
struct GeoPosition {
    double lat = 0.0;
    double lon = 0.0;

    GeoPosition() = default;
    GeoPosition(double lat_deg, double lon_deg);  // throws std::out_of_range

    bool operator==(const GeoPosition&) const = default;
};

// Great-circle (haversine) distance in meters on a sphere of radius
// kEarthRadiusMeters. Symmetric by construction; zero iff a == b.
double distanceMeters(const GeoPosition& a, const GeoPosition& b);

// Inclusive-boundary radius test: distance(a, b) <= radius.
bool within(const GeoPosition& a, const GeoPosition& b, double radius_m);

}  // namespace geoloc

template <>
struct std::hash<geoloc::NodeId> {
    size_t operator()(const geoloc::NodeId& id) const noexcept {
        return std::hash<uint64_t>{}(id.value);
    }
};

template <>
struct std::hash<geoloc::ObjectId> {
    size_t operator()(const geoloc::ObjectId& id) const noexcept {
        return std::hash<uint64_t>{}(id.value);
    }
};
