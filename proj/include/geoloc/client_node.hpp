#pragma once

#include <deque>
#include <map>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "geoloc/bully.hpp"
#include "geoloc/overlay.hpp"
#include "geoloc/replication.hpp"
#include "geoloc/simnet.hpp"
#include "geoloc/traces.hpp"

namespace geoloc {

enum class OverlayMode { ClientServer, GloPartial, GloFull };
const char* modeName(OverlayMode m);

enum TimerKind : int {
    kTimerAnnounce = 1,
    kTimerBroadcast = 2,
    kTimerBully = 3,
    kTimerWrite = 4,
};

// What the scenario asks clients to do on venue entry.
enum class Workload { CheckIn, Review, None };

// A mobile client: overlay maintenance, per-object elections, interest-
// scoped replication, and the venue workload driven by its route.
class ClientNode : public Actor {
  public:
    ClientNode(SimNet& net, NodeId id, OverlayMode mode, Workload workload, Route route,
               const InfraConfig& infra);

    void onStart() override;
    void onMessage(NodeId src, const WireMessage& msg) override;
    void onTimer(int kind, uint64_t a, uint64_t b) override;
    void onMovement(uint64_t waypointIdx) override;
    void onPeerDown(NodeId peer) override;
    std::vector<NodeId> connectedPeers() const override;

    // Latency workload: scripted puts into one target object.
    void setWritePlan(ObjectId target, std::vector<int64_t> times);
    // Scenario-owned log of every delta this client originates.
    void setDeltaLog(std::vector<std::pair<ObjectId, CrdtPayload>>* log) { deltaLog_ = log; }

    const PeerView& view() const { return view_; }
    const ClientStore& store() const { return store_; }
    const BullyTable& bullies() const { return bullies_; }
    GeoPosition currentPosition() const;
    bool allAcked() const { return unacked_.empty(); }
    size_t obligationsPending() const { return pending_.size(); }
    uint64_t obligationsCommitted() const { return obligationsCommitted_; }
    // Overlay invariant observations: worst degree seen after any review or
    // accepted dial, and flood-bound breaches (a position transmitted twice
    // by one node, or a burst wider than its degree).
    size_t maxDegree() const { return maxDegree_; }
    uint64_t floodViolations() const { return floodViolations_; }

  private:
    struct Obligation {
        int64_t anchor = 0;
        ObjectId obj;
    };
    struct Unacked {
        ObjectId obj;
        CrdtPayload delta;
        uint32_t tries = 0;
    };
    struct PendingFetch {
        NodeId target;
        int64_t sentAt = 0;
        bool subscribe = false;
    };

    bool glo() const { return mode_ != OverlayMode::ClientServer; }
    const ProtocolConfig& cfg() const { return net_.config(); }
    GeoPosition waypointPos() const { return route_.waypoints[curWp_].pos; }

    void sendToServer(WireMessage msg);
    std::vector<NodeId> interestedPeers(ObjectId obj) const;

    void handleJoinReply(const PeerList& reply);
    void handleDelta(NodeId src, const DeltaMsg& d, size_t bytes);
    void handleClaim(NodeId src, const ImTheBully& m);
    void announceTick();
    void broadcastTick();
    void refreshInterest(const GeoPosition& pos);
    void scanEntries();
    void updateCoverage();
    void commitReady();
    void issueDelta(ObjectId obj, CrdtPayload delta);
    void uploadDelta(const DeltaMsg& d);
    void claimObjects(const std::vector<ObjectId>& objs);
    void evaluateServerLinks();
    bool hasBlockingWork(ObjectId obj) const;
    void noteDegree();
    void noteFlood(NodeId sender, const GeoPosition& pos, size_t burst);

    SimNet& net_;
    NodeId id_;
    OverlayMode mode_;
    Workload workload_;
    Route route_;
    std::vector<int64_t> arrivals_;
    InfraConfig infra_;

    PeerView view_;
    BullyTable bullies_;
    ClientStore store_;
    NodeId servingServer_;

    std::vector<DirectoryEntry> directory_;
    std::set<ObjectId> dirIds_;
    bool fullDirectory_ = false;
    std::vector<GeoPosition> sliceCenters_;

    std::set<ObjectId> interest_;
    std::map<NodeId, std::set<ObjectId>> peerInterest_;
    std::map<ObjectId, PendingFetch> pendingFetch_;
    std::set<ObjectId> subscribed_;
    std::map<NodeId, std::deque<GeoPosition>> outstanding_;

    size_t curWp_ = 0;
    bool waypointCovered_ = false;
    std::set<ObjectId> inside_;
    std::deque<Obligation> pending_;
    std::set<ObjectId> reviewsDone_;
    uint64_t reviewSeq_ = 0;
    uint64_t obligationsCommitted_ = 0;

    uint64_t nextSeq_ = 1;
    std::map<uint64_t, Unacked> unacked_;
    std::set<std::pair<NodeId, uint64_t>> seen_;

    ObjectId writeTarget_;
    std::vector<int64_t> writeTimes_;
    std::vector<std::pair<ObjectId, CrdtPayload>>* deltaLog_ = nullptr;

    size_t maxDegree_ = 0;
    uint64_t floodViolations_ = 0;
    std::set<std::tuple<NodeId, double, double>> floodSent_;
};

}  // namespace geoloc
