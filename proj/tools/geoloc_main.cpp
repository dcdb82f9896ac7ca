#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "geoloc/scenarios.hpp"

namespace {

using namespace geoloc;

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

// Flag > GEOLOC_SEED > config default.
void applySeed(ProtocolConfig& cfg, bool seedSet, uint64_t seed) {
    if (seedSet) {
        cfg.seed = seed;
        return;
    }
    if (const char* env = std::getenv("GEOLOC_SEED")) {
        try {
            cfg.seed = std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError(std::string("GEOLOC_SEED is not a number: ") + env);
        }
    }
}

struct CommonOpts {
    std::string configPath;
    std::string routesPath;
    std::string objectsPath;
    uint64_t seed = 0;
    bool seedSet = false;
    double reviewProbability = -1.0;
};

void addCommon(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.configPath, "protocol config JSON");
    cmd->add_option("--routes", o.routesPath, "routes CSV (default: synthesized)");
    cmd->add_option("--objects", o.objectsPath, "object placements CSV");
    cmd->add_option("--seed", o.seed, "run seed (else GEOLOC_SEED, else config)")
        ->each([&o](const std::string&) { o.seedSet = true; });
    cmd->add_option("--review-probability", o.reviewProbability,
                    "override review_probability in [0,1]");
}

ProtocolConfig makeConfig(const CommonOpts& o) {
    ProtocolConfig cfg =
        o.configPath.empty() ? ProtocolConfig{} : ProtocolConfig::load(o.configPath);
    applySeed(cfg, o.seedSet, o.seed);
    if (o.reviewProbability >= 0.0) cfg.review_probability = o.reviewProbability;
    cfg.validate();
    return cfg;
}

void loadWorld(const CommonOpts& o, ScenarioSpec& spec) {
    if (!o.routesPath.empty()) {
        if (o.objectsPath.empty())
            throw TraceError("--routes requires --objects (the placements CSV)");
        spec.routes = loadRoutes(o.routesPath);
        spec.placements = loadPlacements(o.objectsPath);
    } else if (!o.objectsPath.empty()) {
        throw TraceError("--objects requires --routes");
    }
}

void printRun(const ScenarioSpec& spec, const ScenarioResult& r) {
    std::cout << "scenario=" << scenarioName(spec.kind) << "\n";
    std::cout << "mode=" << modeName(spec.mode) << "\n";
    std::cout << "seed=" << spec.cfg.seed << "\n";
    std::cout << "server_messages=" << r.metrics.serverMessages() << "\n";
    std::cout << "peer_messages=" << r.metrics.peerMessages() << "\n";
    std::cout << "total_messages=" << r.metrics.totalMessages() << "\n";
    std::cout << "total_bytes=" << r.metrics.totalBytes() << "\n";
    std::cout << "wasted_bytes=" << r.metrics.wastedBytes << "\n";
    std::cout << "deltas_issued=" << r.metrics.deltasIssued << "\n";
    std::cout << "deltas_acked=" << r.metrics.deltasAcked << "\n";
    std::cout << "obligations_committed=" << r.obligationsCommitted << "\n";
    std::cout << "obligations_pending=" << r.obligationsPending << "\n";
    std::cout << "all_acked=" << (r.allAcked ? 1 : 0) << "\n";
    std::cout << "latency_samples=" << r.latenciesMs.size() << "\n";
    double med = medianOf(r.latenciesMs);
    if (!std::isnan(med)) std::cout << "latency_median_ms=" << med << "\n";
    std::cout << "end_time_ms=" << r.endTime << "\n";
    std::cout << "events_processed=" << r.metrics.eventsProcessed << "\n";
}

int cmdRun(const CommonOpts& o, const std::string& scenario, const std::string& mode,
           const std::string& outDir) {
    ScenarioSpec spec;
    spec.kind = parseScenario(scenario);
    spec.mode = parseMode(mode);
    spec.cfg = makeConfig(o);
    loadWorld(o, spec);
    ScenarioResult r = runScenario(spec);
    printRun(spec, r);
    if (!outDir.empty()) exportMetrics(r, spec, outDir);
    return 0;
}

int cmdCompare(const CommonOpts& o, const std::string& scenario, std::string modesCsv,
               const std::string& outDir) {
    ScenarioKind kind = parseScenario(scenario);
    std::vector<OverlayMode> modes;
    for (size_t start = 0; start <= modesCsv.size();) {
        size_t comma = modesCsv.find(',', start);
        if (comma == std::string::npos) comma = modesCsv.size();
        if (comma > start) modes.push_back(parseMode(modesCsv.substr(start, comma - start)));
        start = comma + 1;
    }
    if (modes.empty()) throw ConfigError("--modes lists no modes");

    std::map<OverlayMode, ScenarioResult> results;
    ScenarioSpec base;
    base.kind = kind;
    base.cfg = makeConfig(o);
    loadWorld(o, base);
    for (OverlayMode m : modes) {
        ScenarioSpec spec = base;
        spec.mode = m;
        ScenarioResult r = runScenario(spec);
        std::cout << modeName(m) << ".server_messages=" << r.metrics.serverMessages() << "\n";
        std::cout << modeName(m) << ".peer_messages=" << r.metrics.peerMessages() << "\n";
        std::cout << modeName(m) << ".total_messages=" << r.metrics.totalMessages() << "\n";
        std::cout << modeName(m) << ".total_bytes=" << r.metrics.totalBytes() << "\n";
        double med = medianOf(r.latenciesMs);
        if (!std::isnan(med))
            std::cout << modeName(m) << ".latency_median_ms=" << med << "\n";
        if (!outDir.empty()) exportMetrics(r, spec, outDir + "/" + modeName(m));
        results.emplace(m, std::move(r));
    }

    auto have = [&](OverlayMode m) { return results.count(m) != 0; };
    if (have(OverlayMode::GloPartial) && have(OverlayMode::GloFull)) {
        const auto& p = results.at(OverlayMode::GloPartial);
        const auto& f = results.at(OverlayMode::GloFull);
        std::cout << "partial_lt_full_total_messages="
                  << (p.metrics.totalMessages() < f.metrics.totalMessages() ? 1 : 0) << "\n";
        std::cout << "partial_lt_full_total_bytes="
                  << (p.metrics.totalBytes() < f.metrics.totalBytes() ? 1 : 0) << "\n";
        std::cout << "partial_gt_full_total_messages="
                  << (p.metrics.totalMessages() > f.metrics.totalMessages() ? 1 : 0) << "\n";
    }
    if (have(OverlayMode::ClientServer) && have(OverlayMode::GloPartial)) {
        const auto& c = results.at(OverlayMode::ClientServer);
        const auto& p = results.at(OverlayMode::GloPartial);
        std::cout << "cs_le_partial_server_messages="
                  << (c.metrics.serverMessages() <= p.metrics.serverMessages() ? 1 : 0) << "\n";
        double mc = medianOf(c.latenciesMs);
        double mp = medianOf(p.latenciesMs);
        if (!std::isnan(mc) && !std::isnan(mp))
            std::cout << "glo_median_lt_cs_median=" << (mp < mc ? 1 : 0) << "\n";
    }
    if (modes.size() > 1) {
        bool equal = true;
        const auto& ref = results.at(modes[0]).cloudState;
        for (size_t i = 1; i < modes.size(); ++i)
            if (!(results.at(modes[i]).cloudState == ref)) equal = false;
        std::cout << "cloud_state_equal=" << (equal ? 1 : 0) << "\n";
    }
    return 0;
}

int cmdValidate(const CommonOpts& o) {
    ProtocolConfig cfg = makeConfig(o);
    (void)cfg;
    if (o.routesPath.empty()) throw TraceError("validate needs --routes");
    std::vector<Route> routes = loadRoutes(o.routesPath);
    validateRoutes(routes);
    std::cout << "routes=" << routes.size() << "\n";
    if (!o.objectsPath.empty()) {
        std::vector<ObjectPlacement> placements = loadPlacements(o.objectsPath);
        validatePlacements(placements);
        std::cout << "placements=" << placements.size() << "\n";
    }
    std::cout << "ok=1\n";
    return 0;
}

int cmdSynth(const CommonOpts& o, SynthParams p, const std::string& outDir) {
    ProtocolConfig cfg = makeConfig(o);
    p.seed = cfg.seed;
    SynthResult world = synthesize(p, cfg);
    saveRoutes(outDir + "/routes.csv", world.routes);
    savePlacements(outDir + "/objects.csv", world.placements);
    std::cout << "routes=" << world.routes.size() << "\n";
    std::cout << "placements=" << world.placements.size() << "\n";
    std::cout << "routes_csv=" << outDir << "/routes.csv" << "\n";
    std::cout << "objects_csv=" << outDir << "/objects.csv" << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geoloc: location-scoped replication simulator"};
    app.require_subcommand(1);

    CommonOpts runOpts, cmpOpts, valOpts, synOpts;
    std::string scenario = "checkin", mode = "glo-partial", outDir;
    std::string cmpScenario = "checkin", cmpModes = "cs,glo-partial,glo-full", cmpOut;
    SynthParams synth;
    std::string synthOut = ".";

    CLI::App* run = app.add_subcommand("run", "run one scenario in one mode");
    addCommon(run, runOpts);
    run->add_option("--scenario", scenario, "checkin, review or latency");
    run->add_option("--mode", mode, "cs, glo-partial or glo-full");
    run->add_option("--out", outDir, "directory for metrics.csv/latencies.csv/summary.json");

    CLI::App* cmp = app.add_subcommand("compare", "run several modes on the same world");
    addCommon(cmp, cmpOpts);
    cmp->add_option("--scenario", cmpScenario, "checkin, review or latency");
    cmp->add_option("--modes", cmpModes, "comma list of modes");
    cmp->add_option("--out", cmpOut, "directory; per-mode metrics under <out>/<mode>");

    CLI::App* val = app.add_subcommand("validate", "check route/placement files");
    addCommon(val, valOpts);

    CLI::App* syn = app.add_subcommand("synth", "generate a default world");
    syn->add_option("--config", synOpts.configPath, "protocol config JSON");
    syn->add_option("--seed", synOpts.seed, "synthesis seed (else GEOLOC_SEED, else config)")
        ->each([&synOpts](const std::string&) { synOpts.seedSet = true; });
    syn->add_option("--clients", synth.clients);
    syn->add_option("--waypoints", synth.waypoints);
    syn->add_option("--objects", synth.objects);
    syn->add_option("--shared-venues", synth.sharedVenues);
    syn->add_option("--max-hop", synth.maxHop);
    syn->add_option("--dwell-ms", synth.dwellMs);
    syn->add_option("--lat-min", synth.latMin);
    syn->add_option("--lat-max", synth.latMax);
    syn->add_option("--lon-min", synth.lonMin);
    syn->add_option("--lon-max", synth.lonMax);
    syn->add_option("--out", synthOut, "directory for routes.csv and objects.csv");

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmdRun(runOpts, scenario, mode, outDir);
        if (cmp->parsed()) return cmdCompare(cmpOpts, cmpScenario, cmpModes, cmpOut);
        if (val->parsed()) return cmdValidate(valOpts);
        if (syn->parsed()) return cmdSynth(synOpts, synth, synthOut);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const geoloc::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 3;
    } catch (const geoloc::TraceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const geoloc::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
