#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include "geoloc/traces.hpp"

using namespace geoloc;

namespace {

const GeoPosition kA(41.16, -8.62);
const GeoPosition kB(41.17, -8.62);
const GeoPosition kC(41.17, -8.61);

std::string tmpPath(const std::string& name) {
    return std::string("/tmp/geoloc_test_") + name;
}

}  // namespace

TEST_CASE("arrival times: dwell at every stop plus ceil of walk time") {
    Route r{NodeId{1}, {{kA, 1000}, {kB, 2500}, {kC, 700}}};
    auto arr = arrivalTimes(r);
    REQUIRE(arr.size() == 3);
    CHECK(arr[0] == 0);

    int64_t walk1 =
        static_cast<int64_t>(std::ceil(distanceMeters(kA, kB) * 1000.0 / kWalkSpeedMps));
    int64_t walk2 =
        static_cast<int64_t>(std::ceil(distanceMeters(kB, kC) * 1000.0 / kWalkSpeedMps));
    CHECK(arr[1] == 1000 + walk1);
    CHECK(arr[2] == arr[1] + 2500 + walk2);

    // ~1112 m at 1.4 m/s is ~794 s; sanity-bound the scale.
    CHECK(arr[1] > 700000);
    CHECK(arr[1] < 900000);
}

TEST_CASE("positionAt: clamped ends, dwell holds, midpoint interpolation") {
    Route r{NodeId{1}, {{kA, 1000}, {kB, 1000}}};
    auto arr = arrivalTimes(r);

    CHECK(positionAt(r, arr, -50) == kA);
    CHECK(positionAt(r, arr, 0) == kA);
    CHECK(positionAt(r, arr, 999) == kA);
    CHECK(positionAt(r, arr, 1000) == kA);
    CHECK(positionAt(r, arr, arr[1]) == kB);
    CHECK(positionAt(r, arr, arr[1] + 100000) == kB);

    int64_t leave = 1000;
    int64_t mid = leave + (arr[1] - leave) / 2;
    GeoPosition p = positionAt(r, arr, mid);
    double f = static_cast<double>(mid - leave) / static_cast<double>(arr[1] - leave);
    CHECK(p.lat == doctest::Approx(kA.lat + f * (kB.lat - kA.lat)).epsilon(1e-12));
    CHECK(p.lon == doctest::Approx(kA.lon).epsilon(1e-12));
}

TEST_CASE("route validation rejects malformed inputs with precise complaints") {
    CHECK_THROWS_AS(validateRoutes({}), TraceError);
    CHECK_THROWS_AS(validateRoutes({Route{NodeId{1}, {{kA, 0}}}}), TraceError);
    CHECK_THROWS_AS(validateRoutes({Route{NodeId{0}, {{kA, 0}, {kB, 0}}}}), TraceError);
    CHECK_THROWS_AS(validateRoutes({Route{NodeId{10000}, {{kA, 0}, {kB, 0}}}}), TraceError);
    CHECK_THROWS_AS(validateRoutes({Route{NodeId{1}, {{kA, 0}, {kB, 0}}},
                                    Route{NodeId{1}, {{kA, 0}, {kB, 0}}}}),
                    TraceError);
    CHECK_THROWS_AS(validateRoutes({Route{NodeId{1}, {{kA, -5}, {kB, 0}}}}), TraceError);
    CHECK_NOTHROW(validateRoutes({Route{NodeId{1}, {{kA, 0}, {kB, 0}}}}));

    CHECK_THROWS_AS(validatePlacements({}), TraceError);
    CHECK_THROWS_AS(validatePlacements({ObjectPlacement{ObjectId{1}, kA, CrdtKind::Counter},
                                        ObjectPlacement{ObjectId{1}, kB, CrdtKind::Map}}),
                    TraceError);
}

TEST_CASE("routes and placements survive a CSV round trip bit-exactly") {
    std::vector<Route> routes{
        Route{NodeId{3}, {{GeoPosition(41.163217, -8.621452), 1500}, {kB, 1000}, {kC, 250}}},
        Route{NodeId{7}, {{kA, 1000}, {GeoPosition(41.1700000001, -8.6099999999), 900}}}};
    std::vector<ObjectPlacement> objs{
        ObjectPlacement{ObjectId{1}, GeoPosition(41.161111, -8.622222), CrdtKind::Counter},
        ObjectPlacement{ObjectId{2}, kB, CrdtKind::Register},
        ObjectPlacement{ObjectId{9}, kC, CrdtKind::Map}};

    std::string rp = tmpPath("routes.csv"), op = tmpPath("objects.csv");
    saveRoutes(rp, routes);
    savePlacements(op, objs);
    auto routes2 = loadRoutes(rp);
    auto objs2 = loadPlacements(op);

    REQUIRE(routes2.size() == routes.size());
    for (size_t i = 0; i < routes.size(); ++i) {
        CHECK(routes2[i].clientId == routes[i].clientId);
        REQUIRE(routes2[i].waypoints.size() == routes[i].waypoints.size());
        for (size_t k = 0; k < routes[i].waypoints.size(); ++k) {
            CHECK(routes2[i].waypoints[k].pos == routes[i].waypoints[k].pos);
            CHECK(routes2[i].waypoints[k].dwellMs == routes[i].waypoints[k].dwellMs);
        }
    }
    REQUIRE(objs2.size() == objs.size());
    for (size_t i = 0; i < objs.size(); ++i) {
        CHECK(objs2[i].id == objs[i].id);
        CHECK(objs2[i].pos == objs[i].pos);
        CHECK(objs2[i].kind == objs[i].kind);
    }
    std::remove(rp.c_str());
    std::remove(op.c_str());
}

TEST_CASE("CSV loader complaints: duplicate seq, bad kind, out-of-range coordinates") {
    std::string p = tmpPath("bad.csv");
    {
        std::ofstream f(p);
        f << "client_id,seq,lat,lon,dwell_ms\n1,0,41.16,-8.62,1000\n1,0,41.17,-8.62,1000\n";
    }
    CHECK_THROWS_WITH_AS(loadRoutes(p), doctest::Contains("duplicate seq"), TraceError);
    {
        std::ofstream f(p);
        f << "1,0,141.16,-8.62\n";
    }
    CHECK_THROWS_AS(loadRoutes(p), TraceError);
    {
        std::ofstream f(p);
        f << "object_id,lat,lon,kind\n1,41.16,-8.62,blob\n";
    }
    CHECK_THROWS_WITH_AS(loadPlacements(p), doctest::Contains("unknown kind"), TraceError);
    CHECK_THROWS_WITH_AS(loadRoutes(tmpPath("missing.csv")), doctest::Contains("cannot open"),
                         TraceError);
    std::remove(p.c_str());
}

TEST_CASE("synthesis meets its layout guarantees on the default parameters") {
    SynthParams p;
    ProtocolConfig cfg;
    auto out = synthesize(p, cfg);

    REQUIRE(out.routes.size() == p.clients);
    REQUIRE(out.placements.size() == p.objects);
    CHECK_NOTHROW(validateRoutes(out.routes));
    CHECK_NOTHROW(validatePlacements(out.placements));

    for (const Route& r : out.routes) {
        // Routes carry the requested stops plus the hops of the walk home.
        CHECK(r.waypoints.size() >= p.waypoints);
        CHECK(r.waypoints.size() <= 4 * static_cast<size_t>(p.waypoints));
        for (const Waypoint& w : r.waypoints) {
            CHECK(w.pos.lat >= p.latMin);
            CHECK(w.pos.lat <= p.latMax);
            CHECK(w.pos.lon >= p.lonMin);
            CHECK(w.pos.lon <= p.lonMax);
        }
    }
    CHECK(maxHopMeters(out.routes) <= p.maxHop + 1e-6);

    // All clients start pairwise within max_distance.
    for (size_t i = 0; i < out.routes.size(); ++i)
        for (size_t j = i + 1; j < out.routes.size(); ++j)
            CHECK(distanceMeters(out.routes[i].waypoints.front().pos,
                                 out.routes[j].waypoints.front().pos) <= cfg.max_distance);

    // The first sharedVenues objects sit inside everyone's initial interest.
    for (uint32_t v = 0; v < p.sharedVenues; ++v)
        for (const Route& r : out.routes)
            CHECK(distanceMeters(out.placements[v].pos, r.waypoints.front().pos) <=
                  cfg.interest_radius);

    // Each client has an exclusive venue only its own route ever approaches.
    std::set<uint64_t> exclusiveOwners;
    for (const auto& pl : out.placements) {
        size_t approachers = 0;
        uint64_t owner = 0;
        for (const Route& r : out.routes) {
            auto arr = arrivalTimes(r);
            bool close = false;
            for (const Waypoint& w : r.waypoints)
                if (distanceMeters(w.pos, pl.pos) <= cfg.interest_radius) close = true;
            if (close) {
                ++approachers;
                owner = r.clientId.value;
            }
        }
        if (approachers == 1) exclusiveOwners.insert(owner);
    }
    CHECK(exclusiveOwners.size() == p.clients);
}

TEST_CASE("synthesis is deterministic in the seed and varies across seeds") {
    SynthParams p;
    ProtocolConfig cfg;
    auto a = synthesize(p, cfg);
    auto b = synthesize(p, cfg);
    REQUIRE(a.routes.size() == b.routes.size());
    for (size_t i = 0; i < a.routes.size(); ++i) {
        REQUIRE(a.routes[i].waypoints.size() == b.routes[i].waypoints.size());
        for (size_t k = 0; k < a.routes[i].waypoints.size(); ++k)
            CHECK(a.routes[i].waypoints[k].pos == b.routes[i].waypoints[k].pos);
    }
    for (size_t i = 0; i < a.placements.size(); ++i)
        CHECK(a.placements[i].pos == b.placements[i].pos);

    SynthParams q = p;
    q.seed = p.seed + 1;
    auto c = synthesize(q, cfg);
    bool differs = false;
    for (size_t i = 0; i < a.routes.size() && !differs; ++i)
        for (size_t k = 1; k < a.routes[i].waypoints.size() && !differs; ++k)
            if (!(a.routes[i].waypoints[k].pos == c.routes[i].waypoints[k].pos)) differs = true;
    CHECK(differs);
}

TEST_CASE("synthesis refuses an impossible layout with a suggestion") {
    SynthParams p;
    p.clients = 60;
    p.latMin = 41.16;
    p.latMax = 41.161;
    p.lonMin = -8.62;
    p.lonMax = -8.619;
    ProtocolConfig cfg;
    CHECK_THROWS_AS(synthesize(p, cfg), InfeasibleError);
    try {
        synthesize(p, cfg);
    } catch (const InfeasibleError& e) {
        CHECK(std::string(e.what()).size() > 20);
    }
}
