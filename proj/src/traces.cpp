#include "geoloc/traces.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "geoloc/rng.hpp"

namespace geoloc {

namespace {

constexpr double kMetersPerDegLat = kEarthRadiusMeters * 3.14159265358979323846 / 180.0;

double degLat(double meters) { return meters / kMetersPerDegLat; }

double degLon(double meters, double atLat) {
    return meters / (kMetersPerDegLat * std::cos(atLat * 3.14159265358979323846 / 180.0));
}

GeoPosition offset(const GeoPosition& base, double northM, double eastM) {
    return {base.lat + degLat(northM), base.lon + degLon(eastM, base.lat)};
}

GeoPosition discJitter(SplitMix64& rng, const GeoPosition& base, double radiusM) {
    double ang = rng.nextUnit() * 2.0 * 3.14159265358979323846;
    double r = radiusM * std::sqrt(rng.nextUnit());
    return offset(base, r * std::cos(ang), r * std::sin(ang));
}

std::string fmtDouble(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> splitCsv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parseDouble(const std::string& path, size_t line, const std::string& field) {
    try {
        size_t used = 0;
        double v = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw TraceError(path + ":" + std::to_string(line) + ": bad number '" + field + "'");
    }
}

uint64_t parseU64(const std::string& path, size_t line, const std::string& field) {
    try {
        size_t used = 0;
        unsigned long long v = std::stoull(field, &used);
        if (used != field.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw TraceError(path + ":" + std::to_string(line) + ": bad integer '" + field + "'");
    }
}

bool looksNumeric(const std::string& s) {
    return !s.empty() && (std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '-');
}

}  // namespace

std::vector<int64_t> arrivalTimes(const Route& r) {
    std::vector<int64_t> arr;
    arr.reserve(r.waypoints.size());
    int64_t t = 0;
    arr.push_back(t);
    for (size_t k = 1; k < r.waypoints.size(); ++k) {
        double d = distanceMeters(r.waypoints[k - 1].pos, r.waypoints[k].pos);
        int64_t travel = static_cast<int64_t>(std::ceil(d * 1000.0 / kWalkSpeedMps));
        t += r.waypoints[k - 1].dwellMs + travel;
        arr.push_back(t);
    }
    return arr;
}

GeoPosition positionAt(const Route& r, const std::vector<int64_t>& arrivals, int64_t t) {
    if (r.waypoints.empty()) throw TraceError("positionAt on empty route");
    if (t <= arrivals.front()) return r.waypoints.front().pos;
    for (size_t k = 0; k + 1 < r.waypoints.size(); ++k) {
        int64_t leave = arrivals[k] + r.waypoints[k].dwellMs;
        if (t <= leave) return r.waypoints[k].pos;
        if (t < arrivals[k + 1]) {
            double f = static_cast<double>(t - leave) / static_cast<double>(arrivals[k + 1] - leave);
            const GeoPosition& a = r.waypoints[k].pos;
            const GeoPosition& b = r.waypoints[k + 1].pos;
            return {a.lat + f * (b.lat - a.lat),
                    a.lon + f * (b.lon - a.lon)};
        }
    }
    return r.waypoints.back().pos;
}

double maxHopMeters(const std::vector<Route>& routes) {
    double best = 0.0;
    for (const Route& r : routes)
        for (size_t k = 1; k < r.waypoints.size(); ++k)
            best = std::max(best, distanceMeters(r.waypoints[k - 1].pos, r.waypoints[k].pos));
    return best;
}

void validateRoutes(const std::vector<Route>& routes) {
    if (routes.empty()) throw TraceError("no routes");
    std::set<NodeId> seen;
    for (const Route& r : routes) {
        if (r.clientId.value < 1 || r.clientId.value > 9999)
            throw TraceError("client_id " + std::to_string(r.clientId.value) +
                             " out of range [1, 9999]");
        if (!seen.insert(r.clientId).second)
            throw TraceError("duplicate client_id " + std::to_string(r.clientId.value));
        if (r.waypoints.size() < 2)
            throw TraceError("client " + std::to_string(r.clientId.value) +
                             " needs at least 2 waypoints");
        for (const Waypoint& w : r.waypoints)
            if (w.dwellMs < 0)
                throw TraceError("client " + std::to_string(r.clientId.value) +
                                 " has negative dwell");
    }
}

void validatePlacements(const std::vector<ObjectPlacement>& placements) {
    if (placements.empty()) throw TraceError("no object placements");
    std::set<ObjectId> seen;
    for (const ObjectPlacement& p : placements)
        if (!seen.insert(p.id).second)
            throw TraceError("duplicate object_id " + std::to_string(p.id.value));
}

std::vector<Route> loadRoutes(const std::string& path, int64_t defaultDwellMs) {
    std::ifstream in(path);
    if (!in) throw TraceError("cannot open " + path);
    std::map<NodeId, std::map<uint64_t, Waypoint>> byClient;
    std::string line;
    size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty() || line == "\r") continue;
        auto f = splitCsv(line);
        if (lineNo == 1 && !looksNumeric(f[0])) continue;
        if (f.size() != 4 && f.size() != 5)
            throw TraceError(path + ":" + std::to_string(lineNo) +
                             ": expected 4 or 5 fields, got " + std::to_string(f.size()));
        NodeId client{parseU64(path, lineNo, f[0])};
        uint64_t seq = parseU64(path, lineNo, f[1]);
        double lat = parseDouble(path, lineNo, f[2]);
        double lon = parseDouble(path, lineNo, f[3]);
        int64_t dwell = defaultDwellMs;
        if (f.size() == 5) dwell = static_cast<int64_t>(parseU64(path, lineNo, f[4]));
        Waypoint w;
        try {
            w.pos = GeoPosition(lat, lon);
        } catch (const std::out_of_range& e) {
            throw TraceError(path + ":" + std::to_string(lineNo) + ": " + e.what());
        }
        w.dwellMs = dwell;
        if (!byClient[client].emplace(seq, w).second)
            throw TraceError(path + ":" + std::to_string(lineNo) + ": duplicate seq " +
                             std::to_string(seq) + " for client " +
                             std::to_string(client.value));
    }
    std::vector<Route> routes;
    for (auto& [id, stops] : byClient) {
        Route r;
        r.clientId = id;
        for (auto& [seq, w] : stops) r.waypoints.push_back(w);
        routes.push_back(std::move(r));
    }
    validateRoutes(routes);
    return routes;
}

std::vector<ObjectPlacement> loadPlacements(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TraceError("cannot open " + path);
    std::vector<ObjectPlacement> out;
    std::string line;
    size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty() || line == "\r") continue;
        auto f = splitCsv(line);
        if (lineNo == 1 && !looksNumeric(f[0])) continue;
        if (f.size() != 4)
            throw TraceError(path + ":" + std::to_string(lineNo) +
                             ": expected 4 fields, got " + std::to_string(f.size()));
        ObjectPlacement p;
        p.id = ObjectId{parseU64(path, lineNo, f[0])};
        double lat = parseDouble(path, lineNo, f[1]);
        double lon = parseDouble(path, lineNo, f[2]);
        try {
            p.pos = GeoPosition(lat, lon);
        } catch (const std::out_of_range& e) {
            throw TraceError(path + ":" + std::to_string(lineNo) + ": " + e.what());
        }
        if (f[3] == "counter") p.kind = CrdtKind::Counter;
        else if (f[3] == "register") p.kind = CrdtKind::Register;
        else if (f[3] == "map") p.kind = CrdtKind::Map;
        else
            throw TraceError(path + ":" + std::to_string(lineNo) + ": unknown kind '" + f[3] +
                             "'");
        out.push_back(p);
    }
    validatePlacements(out);
    return out;
}

void saveRoutes(const std::string& path, const std::vector<Route>& routes) {
    std::ofstream out(path);
    if (!out) throw TraceError("cannot write " + path);
    out << "client_id,seq,lat,lon,dwell_ms\n";
    for (const Route& r : routes) {
        uint64_t seq = 0;
        for (const Waypoint& w : r.waypoints) {
            out << r.clientId.value << ',' << seq++ << ',' << fmtDouble(w.pos.lat) << ','
                << fmtDouble(w.pos.lon) << ',' << w.dwellMs << '\n';
        }
    }
}

void savePlacements(const std::string& path, const std::vector<ObjectPlacement>& placements) {
    std::ofstream out(path);
    if (!out) throw TraceError("cannot write " + path);
    out << "object_id,lat,lon,kind\n";
    for (const ObjectPlacement& p : placements)
        out << p.id.value << ',' << fmtDouble(p.pos.lat) << ','
            << fmtDouble(p.pos.lon) << ',' << kindName(p.kind) << '\n';
}

namespace {

struct SynthAttempt {
    SynthResult result;
    bool ok = false;
    std::string why;
};

SynthAttempt trySynth(const SynthParams& p, const ProtocolConfig& cfg, uint64_t attempt) {
    SynthAttempt a;
    SplitMix64 rng(mix64(p.seed ^ mix64(attempt + 1)));

    double midLat = 0.5 * (p.latMin + p.latMax);
    GeoPosition anchor{midLat, 0.5 * (p.lonMin + p.lonMax)};
    double heightM = (p.latMax - p.latMin) * kMetersPerDegLat;
    double widthM = (p.lonMax - p.lonMin) * kMetersPerDegLat *
                    std::cos(midLat * 3.14159265358979323846 / 180.0);
    double attractorR = 0.42 * std::min(heightM, widthM);

    auto clampBox = [&](GeoPosition g) {
        g.lat = std::clamp(g.lat, p.latMin, p.latMax);
        g.lon = std::clamp(g.lon, p.lonMin, p.lonMax);
        return g;
    };

    for (uint32_t i = 0; i < p.clients; ++i) {
        Route r;
        r.clientId = NodeId{i + 1};
        double ang = 2.0 * 3.14159265358979323846 * i / p.clients;
        GeoPosition attractor =
            offset(anchor, attractorR * std::cos(ang), attractorR * std::sin(ang));

        GeoPosition cur = clampBox(discJitter(rng, anchor, 100.0));
        r.waypoints.push_back({cur, p.dwellMs});
        for (uint32_t k = 1; k + 1 < p.waypoints; ++k) {
            GeoPosition goal = discJitter(rng, attractor, 250.0);
            double northM = (goal.lat - cur.lat) * kMetersPerDegLat;
            double eastM = (goal.lon - cur.lon) * kMetersPerDegLat *
                           std::cos(midLat * 3.14159265358979323846 / 180.0);
            double len = std::hypot(northM, eastM);
            GeoPosition next;
            if (len < 1.0) {
                next = discJitter(rng, cur, 0.2 * p.maxHop);
            } else {
                double hop = std::min(0.9 * p.maxHop, len);
                next = offset(cur, northM / len * hop, eastM / len * hop);
            }
            next = clampBox(next);
            while (distanceMeters(cur, next) > p.maxHop) {
                next = GeoPosition{0.5 * (cur.lat + next.lat),
                                   0.5 * (cur.lon + next.lon)};
            }
            r.waypoints.push_back({next, p.dwellMs});
            cur = next;
        }
        GeoPosition home = clampBox(discJitter(rng, anchor, 100.0));
        while (distanceMeters(cur, home) > p.maxHop &&
               r.waypoints.size() + 1 < 4 * static_cast<size_t>(p.waypoints)) {
            double northM = (home.lat - cur.lat) * kMetersPerDegLat;
            double eastM = (home.lon - cur.lon) * kMetersPerDegLat *
                           std::cos(midLat * 3.14159265358979323846 / 180.0);
            double len = std::hypot(northM, eastM);
            double hop = std::min(0.9 * p.maxHop, len);
            cur = clampBox(offset(cur, northM / len * hop, eastM / len * hop));
            r.waypoints.push_back({cur, p.dwellMs});
        }
        r.waypoints.push_back({home, p.dwellMs});
        a.result.routes.push_back(std::move(r));
    }

    uint64_t nextObj = 1;
    for (uint32_t j = 0; j < p.sharedVenues; ++j) {
        ObjectPlacement o;
        o.id = ObjectId{nextObj++};
        o.pos = discJitter(rng, anchor, 250.0);
        o.kind = (j % 2 == 0) ? CrdtKind::Counter : CrdtKind::Map;
        a.result.placements.push_back(o);
    }
    // The exclusive venue sits at the route's farthest excursion from the
    // anchor, which maximises separation from every other route.
    std::vector<size_t> exclusiveIdx;
    std::vector<size_t> farStop;
    for (uint32_t i = 0; i < p.clients; ++i) {
        const Route& r = a.result.routes[i];
        size_t e = 0;
        double best = -1.0;
        for (size_t k = 0; k < r.waypoints.size(); ++k) {
            double d = distanceMeters(anchor, r.waypoints[k].pos);
            if (d > best) {
                best = d;
                e = k;
            }
        }
        farStop.push_back(e);
        ObjectPlacement o;
        o.id = ObjectId{nextObj++};
        o.pos = discJitter(rng, r.waypoints[e].pos, 150.0);
        o.kind = (i % 2 == 0) ? CrdtKind::Counter : CrdtKind::Map;
        exclusiveIdx.push_back(a.result.placements.size());
        a.result.placements.push_back(o);
    }
    static const CrdtKind cycle[3] = {CrdtKind::Counter, CrdtKind::Register, CrdtKind::Map};
    uint32_t placed = p.sharedVenues + p.clients;
    for (uint32_t j = placed; j < p.objects; ++j) {
        ObjectPlacement o;
        o.id = ObjectId{nextObj++};
        o.pos = GeoPosition{p.latMin + rng.nextUnit() * (p.latMax - p.latMin),
                            p.lonMin + rng.nextUnit() * (p.lonMax - p.lonMin)};
        o.kind = cycle[(j - placed) % 3];
        a.result.placements.push_back(o);
    }

    for (uint32_t i = 0; i < p.clients; ++i)
        for (uint32_t j = i + 1; j < p.clients; ++j)
            if (distanceMeters(a.result.routes[i].waypoints[0].pos,
                               a.result.routes[j].waypoints[0].pos) > cfg.max_distance) {
                a.why = "clients not co-located at start";
                return a;
            }
    for (uint32_t j = 0; j < p.sharedVenues; ++j)
        for (const Route& r : a.result.routes) {
            if (distanceMeters(a.result.placements[j].pos, r.waypoints[0].pos) >
                    0.9 * cfg.interest_radius ||
                distanceMeters(a.result.placements[j].pos, r.waypoints.back().pos) >
                    0.9 * cfg.interest_radius) {
                a.why = "shared venue outside a client's initial interest";
                return a;
            }
        }
    for (uint32_t i = 0; i < p.clients; ++i) {
        const ObjectPlacement& o = a.result.placements[exclusiveIdx[i]];
        const Route& own = a.result.routes[i];
        size_t e = farStop[i];
        if (distanceMeters(o.pos, own.waypoints[e].pos) > 0.9 * cfg.interest_radius) {
            a.why = "exclusive venue outside its owner's reach";
            return a;
        }
        for (uint32_t j = 0; j < p.clients; ++j) {
            if (j == i) continue;
            for (const Waypoint& w : a.result.routes[j].waypoints)
                if (distanceMeters(o.pos, w.pos) <= 1.05 * cfg.interest_radius + p.maxHop) {
                    a.why = "exclusive venue reachable by another client";
                    return a;
                }
        }
    }
    a.ok = true;
    return a;
}

}  // namespace

SynthResult synthesize(const SynthParams& p, const ProtocolConfig& cfg) {
    if (p.clients < 1) throw TraceError("clients must be >= 1");
    if (p.waypoints < 2) throw TraceError("waypoints must be >= 2");
    if (p.maxHop <= 0.0) throw TraceError("max hop must be positive");
    if (p.latMin >= p.latMax || p.lonMin >= p.lonMax)
        throw TraceError("empty bounding box");
    if (p.objects < p.sharedVenues + p.clients)
        throw InfeasibleError(
            "objects must cover shared venues plus one exclusive venue per client; "
            "need at least " +
            std::to_string(p.sharedVenues + p.clients));

    std::string lastWhy;
    for (uint64_t attempt = 0; attempt < 64; ++attempt) {
        SynthAttempt a = trySynth(p, cfg, attempt);
        if (a.ok) {
            validateRoutes(a.result.routes);
            validatePlacements(a.result.placements);
            return std::move(a.result);
        }
        lastWhy = a.why;
    }
    throw InfeasibleError(
        "synthesis failed (" + lastWhy +
        "); try a larger bounding box, more waypoints per route, fewer clients, or a "
        "smaller interest_radius");
}

}  // namespace geoloc
