#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "geoloc/config.hpp"
#include "geoloc/crdt.hpp"
#include "geoloc/geo.hpp"
#include "geoloc/scenarios.hpp"
#include "geoloc/traces.hpp"

namespace py = pybind11;
using namespace geoloc;

namespace {

ScenarioKind parseScenario(const std::string& s) {
    if (s == "checkin") return ScenarioKind::CheckIn;
    if (s == "review") return ScenarioKind::Review;
    if (s == "latency") return ScenarioKind::Latency;
    throw ConfigError("unknown scenario '" + s + "' (checkin, review, latency)");
}

OverlayMode parseMode(const std::string& s) {
    if (s == "cs" || s == "client-server") return OverlayMode::ClientServer;
    if (s == "glo-partial") return OverlayMode::GloPartial;
    if (s == "glo-full") return OverlayMode::GloFull;
    throw ConfigError("unknown mode '" + s + "' (cs, glo-partial, glo-full)");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "geoloc core bindings";

    m.def("distance_meters",
          [](double lat1, double lon1, double lat2, double lon2) {
              return distanceMeters(GeoPosition(lat1, lon1), GeoPosition(lat2, lon2));
          },
          py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"));
    m.def("within",
          [](double lat1, double lon1, double lat2, double lon2, double radius_m) {
              return within(GeoPosition(lat1, lon1), GeoPosition(lat2, lon2), radius_m);
          },
          py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"),
          py::arg("radius_m"));

    py::class_<ProtocolConfig>(m, "ProtocolConfig")
        .def(py::init<>())
        .def_readwrite("max_distance", &ProtocolConfig::max_distance)
        .def_readwrite("max_peers", &ProtocolConfig::max_peers)
        .def_readwrite("announcement_time", &ProtocolConfig::announcement_time)
        .def_readwrite("broadcast_time", &ProtocolConfig::broadcast_time)
        .def_readwrite("bully_timeout", &ProtocolConfig::bully_timeout)
        .def_readwrite("interest_radius", &ProtocolConfig::interest_radius)
        .def_readwrite("review_probability", &ProtocolConfig::review_probability)
        .def_readwrite("latency_low", &ProtocolConfig::latency_low)
        .def_readwrite("latency_high", &ProtocolConfig::latency_high)
        .def_readwrite("seed", &ProtocolConfig::seed)
        .def("validate", &ProtocolConfig::validate)
        .def("fingerprint", &ProtocolConfig::fingerprint)
        .def("to_json", [](const ProtocolConfig& c) { return c.toJson().dump(2); })
        .def_static("load", &ProtocolConfig::load, py::arg("path"));

    py::class_<PnCounter>(m, "PnCounter")
        .def(py::init<>())
        .def("increment",
             [](PnCounter& c, uint64_t replica, uint64_t n) {
                 return c.increment(NodeId{replica}, n);
             },
             py::arg("replica"), py::arg("n") = 1)
        .def("decrement",
             [](PnCounter& c, uint64_t replica, uint64_t n) {
                 return c.decrement(NodeId{replica}, n);
             },
             py::arg("replica"), py::arg("n") = 1)
        .def("join", &PnCounter::join, py::arg("other"))
        .def("value", &PnCounter::value)
        .def("__eq__", [](const PnCounter& a, const PnCounter& b) { return a == b; });

    py::class_<OrMap>(m, "OrMap")
        .def(py::init<>())
        .def("put",
             [](OrMap& m_, uint64_t replica, const std::string& key, int64_t stamp,
                const std::string& value) {
                 return m_.put(NodeId{replica}, key, stamp, value);
             },
             py::arg("replica"), py::arg("key"), py::arg("stamp"), py::arg("value"))
        .def("erase",
             [](OrMap& m_, uint64_t replica, const std::string& key) {
                 return m_.erase(NodeId{replica}, key);
             },
             py::arg("replica"), py::arg("key"))
        .def("join", &OrMap::join, py::arg("other"))
        .def("lookup", &OrMap::lookup, py::arg("key"))
        .def("snapshot", &OrMap::snapshot)
        .def("__len__", &OrMap::size)
        .def("__contains__", &OrMap::containsKey)
        .def("__eq__", [](const OrMap& a, const OrMap& b) { return a == b; });

    py::class_<LwwRegister>(m, "LwwRegister")
        .def(py::init<>())
        .def("set",
             [](LwwRegister& r, int64_t stamp, uint64_t writer, const std::string& value) {
                 r.set(stamp, NodeId{writer}, value);
             },
             py::arg("stamp"), py::arg("writer"), py::arg("value"))
        .def("join", &LwwRegister::join, py::arg("other"))
        .def("value", [](const LwwRegister& r) { return r.value(); })
        .def("stamp", &LwwRegister::stamp)
        .def("empty", &LwwRegister::empty)
        .def("__eq__", [](const LwwRegister& a, const LwwRegister& b) { return a == b; });

    m.def("synthesize",
          [](uint32_t clients, uint32_t waypoints, uint32_t objects, uint32_t shared_venues,
             uint64_t seed, const ProtocolConfig& cfg) {
              SynthParams p;
              p.clients = clients;
              p.waypoints = waypoints;
              p.objects = objects;
              p.sharedVenues = shared_venues;
              p.seed = seed;
              auto out = synthesize(p, cfg);
              py::list routes;
              for (const Route& r : out.routes) {
                  py::list stops;
                  for (const Waypoint& w : r.waypoints)
                      stops.append(py::make_tuple(w.pos.lat, w.pos.lon, w.dwellMs));
                  routes.append(py::make_tuple(r.clientId.value, stops));
              }
              py::list placements;
              for (const ObjectPlacement& o : out.placements)
                  placements.append(
                      py::make_tuple(o.id.value, o.pos.lat, o.pos.lon, kindName(o.kind)));
              py::dict d;
              d["routes"] = routes;
              d["placements"] = placements;
              return d;
          },
          py::arg("clients") = 5, py::arg("waypoints") = 40, py::arg("objects") = 50,
          py::arg("shared_venues") = 4, py::arg("seed") = 42,
          py::arg("cfg") = ProtocolConfig{});

    m.def("run_scenario",
          [](const std::string& scenario, const std::string& mode, const ProtocolConfig& cfg,
             double loss_rate, double jitter_fraction) {
              ScenarioSpec spec;
              spec.kind = parseScenario(scenario);
              spec.mode = parseMode(mode);
              spec.cfg = cfg;
              spec.lossRate = loss_rate;
              spec.jitterFraction = jitter_fraction;
              ScenarioResult r = runScenario(spec);
              py::dict d;
              d["total_messages"] = r.metrics.totalMessages();
              d["total_bytes"] = r.metrics.totalBytes();
              d["server_messages"] = r.metrics.serverMessages();
              d["peer_messages"] = r.metrics.peerMessages();
              d["obligations_committed"] = r.obligationsCommitted;
              d["obligations_pending"] = r.obligationsPending;
              d["all_acked"] = r.allAcked;
              d["max_degree"] = r.maxDegree;
              d["flood_violations"] = r.floodViolations;
              d["locality_ok"] = r.localityOk;
              d["end_time_ms"] = r.endTime;
              d["latencies_ms"] = r.latenciesMs;
              py::dict cloud;
              for (const auto& [id, state] : r.cloudState) {
                  auto bytes = state.encode();
                  cloud[py::int_(id.value)] =
                      py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
              }
              d["cloud_state"] = cloud;
              return d;
          },
          py::arg("scenario") = "checkin", py::arg("mode") = "glo-partial",
          py::arg("cfg") = ProtocolConfig{}, py::arg("loss_rate") = 0.0,
          py::arg("jitter_fraction") = 0.0);

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<ProtocolError>(m, "ProtocolError");
    py::register_exception<TraceError>(m, "TraceError");
    py::register_exception<InfeasibleError>(m, "InfeasibleError");
}
