#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "geoloc/client_node.hpp"
#include "geoloc/server_node.hpp"

namespace geoloc {

enum class ScenarioKind { CheckIn, Review, Latency };
const char* scenarioName(ScenarioKind k);

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::CheckIn;
    OverlayMode mode = OverlayMode::GloPartial;
    ProtocolConfig cfg;
    // Empty routes mean: synthesize the default world for the scenario kind
    // from cfg.seed (a stationary co-located cluster for Latency).
    std::vector<Route> routes;
    std::vector<ObjectPlacement> placements;
    uint32_t gridRows = 2;
    uint32_t gridCols = 2;
    int64_t hardStopMs = 0;  // 0: derived from the routes
    uint64_t eventCap = 50000000;
    double lossRate = 0.0;
    double jitterFraction = 0.0;
};

struct ScenarioResult {
    Metrics metrics;
    std::map<ObjectId, CrdtPayload> cloudState;
    std::vector<std::pair<ObjectId, CrdtPayload>> issuedDeltas;
    uint64_t obligationsCommitted = 0;
    uint64_t obligationsPending = 0;
    bool allAcked = true;
    size_t maxDegree = 0;
    uint64_t floodViolations = 0;
    bool localityOk = true;
    int64_t endTime = 0;
    std::vector<double> latenciesMs;
};

double medianOf(std::vector<double> xs);  // NaN when empty

ScenarioResult runScenario(const ScenarioSpec& spec);

// metrics.csv, latencies.csv and summary.json under dir (created if needed).
// Row order and formatting are fixed, so equal runs give equal bytes.
void exportMetrics(const ScenarioResult& r, const ScenarioSpec& spec, const std::string& dir);

}  // namespace geoloc
