#include "geoloc/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include <json.hpp>

namespace geoloc {

const char* scenarioName(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::CheckIn: return "checkin";
        case ScenarioKind::Review: return "review";
        case ScenarioKind::Latency: return "latency";
    }
    return "?";
}

namespace {

// Stationary co-located cluster: five clients a few meters apart around one
// map object they all write to in turn.
void latencyWorld(std::vector<Route>& routes, std::vector<ObjectPlacement>& placements) {
    const GeoPosition anchor{41.16, -8.62};
    const double step = 4.0 / (kEarthRadiusMeters * M_PI / 180.0);
    for (uint64_t i = 0; i < 5; ++i) {
        Route r;
        r.clientId = NodeId{i + 1};
        GeoPosition pos(anchor.lat + static_cast<double>(i) * step, anchor.lon);
        r.waypoints.push_back({pos, 1000});
        r.waypoints.push_back({pos, 1000});
        routes.push_back(std::move(r));
    }
    placements.push_back({ObjectId{1}, anchor, CrdtKind::Map});
}

constexpr int64_t kLatencyFirstWrite = 5000;
constexpr int64_t kLatencyWriteGap = 1000;
constexpr int kLatencyWrites = 100;

}  // namespace

double medianOf(std::vector<double> xs) {
    if (xs.empty()) return std::nan("");
    std::sort(xs.begin(), xs.end());
    size_t n = xs.size();
    if (n % 2 == 1) return xs[n / 2];
    return (xs[n / 2 - 1] + xs[n / 2]) / 2.0;
}

ScenarioResult runScenario(const ScenarioSpec& spec) {
    std::vector<Route> routes = spec.routes;
    std::vector<ObjectPlacement> placements = spec.placements;
    if (routes.empty()) {
        if (spec.kind == ScenarioKind::Latency) {
            latencyWorld(routes, placements);
        } else {
            SynthParams sp;
            sp.seed = spec.cfg.seed;
            SynthResult world = synthesize(sp, spec.cfg);
            routes = std::move(world.routes);
            placements = std::move(world.placements);
        }
    }
    validateRoutes(routes);
    validatePlacements(placements);

    uint32_t rows = spec.gridRows;
    uint32_t cols = spec.gridCols;
    if (spec.mode == OverlayMode::ClientServer || spec.kind == ScenarioKind::Latency) {
        rows = 0;
        cols = 0;
    }
    InfraConfig infra = InfraConfig::build(placements, routes, spec.cfg, rows, cols);

    SimNet net(spec.cfg);
    net.setEventCap(spec.eventCap);
    net.setLossRate(spec.lossRate);
    net.setJitterFraction(spec.jitterFraction);

    auto cloud = std::make_unique<ServerNode>(net, infra.cloudId, spec.mode, infra);
    net.addNode(infra.cloudId, NodeKind::Cloud, cloud.get());
    std::vector<std::unique_ptr<ServerNode>> edges;
    for (const EdgeSpec& e : infra.edges) {
        edges.push_back(std::make_unique<ServerNode>(net, e.id, spec.mode, infra));
        net.addNode(e.id, NodeKind::Edge, edges.back().get());
    }

    Workload workload = Workload::None;
    if (spec.kind == ScenarioKind::CheckIn) workload = Workload::CheckIn;
    if (spec.kind == ScenarioKind::Review) workload = Workload::Review;

    ScenarioResult result;
    std::vector<std::unique_ptr<ClientNode>> clients;
    int64_t lastInteresting = 0;
    for (size_t i = 0; i < routes.size(); ++i) {
        auto c = std::make_unique<ClientNode>(net, routes[i].clientId, spec.mode, workload,
                                              routes[i], infra);
        c->setDeltaLog(&result.issuedDeltas);
        if (spec.kind == ScenarioKind::Latency) {
            std::vector<int64_t> times;
            for (int j = 0; j < kLatencyWrites; ++j)
                if (j % routes.size() == i)
                    times.push_back(kLatencyFirstWrite + j * kLatencyWriteGap);
            lastInteresting = std::max<int64_t>(
                lastInteresting, kLatencyFirstWrite + (kLatencyWrites - 1) * kLatencyWriteGap);
            c->setWritePlan(placements[0].id, std::move(times));
        }
        net.addNode(routes[i].clientId, NodeKind::Client, c.get());
        std::vector<int64_t> arrivals = arrivalTimes(routes[i]);
        for (size_t k = 1; k < routes[i].waypoints.size(); ++k)
            net.scheduleMovement(routes[i].clientId, arrivals[k], k);
        lastInteresting = std::max(lastInteresting, arrivals.back());
        clients.push_back(std::move(c));
    }

    int64_t hardStop = spec.hardStopMs > 0 ? spec.hardStopMs : lastInteresting + 600000;
    net.run(hardStop);

    result.metrics = net.metrics();
    for (const auto& [id, g] : cloud->objects()) result.cloudState.emplace(id, g.state);
    for (const auto& c : clients) {
        result.obligationsCommitted += c->obligationsCommitted();
        result.obligationsPending += c->obligationsPending();
        result.allAcked = result.allAcked && c->allAcked();
        result.maxDegree = std::max(result.maxDegree, c->maxDegree());
        result.floodViolations += c->floodViolations();
    }
    std::map<NodeId, GeoPosition> finalPos;
    for (const Route& r : routes)
        finalPos[r.clientId] = positionAt(r, arrivalTimes(r), net.metrics().endTime);
    for (size_t i = 0; i < clients.size(); ++i) {
        GeoPosition mine = finalPos[routes[i].clientId];
        for (NodeId p : clients[i]->connectedPeers()) {
            auto it = finalPos.find(p);
            if (it != finalPos.end() &&
                distanceMeters(mine, it->second) > spec.cfg.max_distance + 1e-9)
                result.localityOk = false;
        }
    }
    result.endTime = net.metrics().endTime;
    for (const LatencySample& s : net.metrics().latencies)
        result.latenciesMs.push_back(static_cast<double>(s.receivedAt - s.sentAt));
    return result;
}

namespace {

std::string fmtNum(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void exportMetrics(const ScenarioResult& r, const ScenarioSpec& spec, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    std::ofstream csv(fs::path(dir) / "metrics.csv");
    csv << "key,value\n";
    csv << "scenario," << scenarioName(spec.kind) << "\n";
    csv << "mode," << modeName(spec.mode) << "\n";
    csv << "seed," << spec.cfg.seed << "\n";
    static const char* names[kChannelCount] = {"peer", "client_edge", "client_cloud",
                                               "edge_cloud"};
    for (size_t i = 0; i < kChannelCount; ++i) {
        const auto& ch = r.metrics.perChannel[i];
        csv << "channel." << names[i] << ".messages_sent," << ch.messagesSent << "\n";
        csv << "channel." << names[i] << ".messages_delivered," << ch.messagesDelivered << "\n";
        csv << "channel." << names[i] << ".messages_dropped," << ch.messagesDropped << "\n";
        csv << "channel." << names[i] << ".bytes_sent," << ch.bytesSent << "\n";
    }
    csv << "control_messages," << r.metrics.controlMessages << "\n";
    csv << "data_messages," << r.metrics.dataMessages << "\n";
    csv << "wasted_bytes," << r.metrics.wastedBytes << "\n";
    csv << "deltas_issued," << r.metrics.deltasIssued << "\n";
    csv << "deltas_acked," << r.metrics.deltasAcked << "\n";
    csv << "events_processed," << r.metrics.eventsProcessed << "\n";
    csv << "server_messages," << r.metrics.serverMessages() << "\n";
    csv << "peer_messages," << r.metrics.peerMessages() << "\n";
    csv << "total_messages," << r.metrics.totalMessages() << "\n";
    csv << "total_bytes," << r.metrics.totalBytes() << "\n";
    csv << "obligations_committed," << r.obligationsCommitted << "\n";
    csv << "obligations_pending," << r.obligationsPending << "\n";
    csv << "all_acked," << (r.allAcked ? 1 : 0) << "\n";
    csv << "max_degree," << r.maxDegree << "\n";
    csv << "flood_violations," << r.floodViolations << "\n";
    csv << "locality_ok," << (r.localityOk ? 1 : 0) << "\n";
    csv << "latency_samples," << r.latenciesMs.size() << "\n";
    double med = medianOf(r.latenciesMs);
    csv << "latency_median_ms," << (std::isnan(med) ? "na" : fmtNum(med)) << "\n";
    csv << "end_time_ms," << r.endTime << "\n";

    std::ofstream lat(fs::path(dir) / "latencies.csv");
    lat << "origin,origin_seq,receiver,sent_at,received_at,latency_ms\n";
    for (const LatencySample& s : r.metrics.latencies)
        lat << s.origin.value << "," << s.originSeq << "," << s.receiver.value << ","
            << s.sentAt << "," << s.receivedAt << "," << (s.receivedAt - s.sentAt) << "\n";

    nlohmann::ordered_json j;
    j["scenario"] = scenarioName(spec.kind);
    j["mode"] = modeName(spec.mode);
    j["seed"] = spec.cfg.seed;
    j["server_messages"] = r.metrics.serverMessages();
    j["peer_messages"] = r.metrics.peerMessages();
    j["total_messages"] = r.metrics.totalMessages();
    j["total_bytes"] = r.metrics.totalBytes();
    j["wasted_bytes"] = r.metrics.wastedBytes;
    j["deltas_issued"] = r.metrics.deltasIssued;
    j["deltas_acked"] = r.metrics.deltasAcked;
    j["obligations_committed"] = r.obligationsCommitted;
    j["obligations_pending"] = r.obligationsPending;
    j["all_acked"] = r.allAcked;
    j["max_degree"] = r.maxDegree;
    j["flood_violations"] = r.floodViolations;
    j["locality_ok"] = r.localityOk;
    j["latency_samples"] = r.latenciesMs.size();
    if (std::isnan(med))
        j["latency_median_ms"] = nullptr;
    else
        j["latency_median_ms"] = med;
    j["end_time_ms"] = r.endTime;
    j["events_processed"] = r.metrics.eventsProcessed;
    std::ofstream js(fs::path(dir) / "summary.json");
    js << j.dump(2) << "\n";
}

}  // namespace geoloc
