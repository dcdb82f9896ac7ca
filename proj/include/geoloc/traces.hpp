#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "geoloc/config.hpp"
#include "geoloc/crdt.hpp"
#include "geoloc/geo.hpp"

namespace geoloc {

class TraceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Synthesis could not satisfy the overlap/exclusivity constraints; the
// message suggests parameter changes. CLI exit code 3.
class InfeasibleError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

constexpr double kWalkSpeedMps = 1.4;

struct Waypoint {
    GeoPosition pos;
    int64_t dwellMs = 1000;
};

struct Route {
    NodeId clientId;
    std::vector<Waypoint> waypoints;
};

struct ObjectPlacement {
    ObjectId id;
    GeoPosition pos;
    CrdtKind kind = CrdtKind::Counter;
};

// Arrival time of each waypoint: dwell at every stop, constant walking
// speed between stops, first arrival at t=0.
std::vector<int64_t> arrivalTimes(const Route& r);

// Position along the route at an arbitrary time (linear interpolation
// between stops, clamped to the endpoints).
GeoPosition positionAt(const Route& r, const std::vector<int64_t>& arrivals, int64_t t);

double maxHopMeters(const std::vector<Route>& routes);

// Throws TraceError with a precise complaint on malformed input: a route
// needs >= 2 waypoints, unique (client, seq), client ids in [1, 9999].
void validateRoutes(const std::vector<Route>& routes);
void validatePlacements(const std::vector<ObjectPlacement>& placements);

// CSV: client_id,seq,lat,lon[,dwell_ms]; a header line is optional.
std::vector<Route> loadRoutes(const std::string& path, int64_t defaultDwellMs = 1000);
// CSV: object_id,lat,lon,kind with kind in {counter, register, map}.
std::vector<ObjectPlacement> loadPlacements(const std::string& path);
void saveRoutes(const std::string& path, const std::vector<Route>& routes);
void savePlacements(const std::string& path, const std::vector<ObjectPlacement>& placements);

struct SynthParams {
    uint32_t clients = 5;
    uint32_t waypoints = 40;
    uint32_t objects = 50;
    uint32_t sharedVenues = 4;
    double maxHop = 400.0;
    int64_t dwellMs = 1000;
    double latMin = 41.13;
    double latMax = 41.19;
    double lonMin = -8.66;
    double lonMax = -8.59;
    uint64_t seed = 42;
};

struct SynthResult {
    std::vector<Route> routes;
    std::vector<ObjectPlacement> placements;
};

// Deterministic in (params, cfg). Guarantees: all clients start co-located
// at a common anchor (pairwise within max_distance), sharedVenues objects
// inside everyone's initial interest radius, one exclusive object per
// client that no other route ever approaches. Throws InfeasibleError when
// the bounding box cannot host that layout.
SynthResult synthesize(const SynthParams& p, const ProtocolConfig& cfg);

}  // namespace geoloc
