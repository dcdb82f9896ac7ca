#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "geoloc/config.hpp"
#include "geoloc/geo.hpp"
#include "geoloc/wire.hpp"

namespace geoloc {

// Server-side position registry: latest position per node plus an
// append-only history.
class SignallingState {
  public:
    struct HistoryRow {
        NodeId node;
        GeoPosition pos;
        int64_t time;
    };

    // Records the report and returns every other registered node currently
    // within max_distance of pos, nearest first (ties on id).
    std::vector<PeerInfo> onNodePos(NodeId nodeId, const GeoPosition& pos, int64_t now,
                                    double maxDistance);

    bool knows(NodeId id) const { return nodesPos_.count(id) != 0; }
    void forget(NodeId id) { nodesPos_.erase(id); }
    const std::map<NodeId, GeoPosition>& nodesPos() const { return nodesPos_; }
    const std::vector<HistoryRow>& history() const { return history_; }

  private:
    std::map<NodeId, GeoPosition> nodesPos_;
    std::vector<HistoryRow> history_;
};

// Client-side overlay state machine (peer set, candidate set, announcement
// threshold). Pure: methods mutate the view and return what to send; all
// I/O belongs to the driving node.
class PeerView {
  public:
    struct Outbound {
        std::optional<JoinOrPos> toServer;
        std::vector<std::pair<NodeId, PositionMessage>> toPeers;
    };
    struct ReviewActions {
        std::vector<NodeId> dials;
        std::vector<NodeId> hangups;
    };

    PeerView(NodeId self, const ProtocolConfig& cfg);

    void setServerLink(std::optional<NodeId> server) { server_ = server; }
    std::optional<NodeId> serverLink() const { return server_; }

    // First report; also the re-join sent after a redirect.
    std::optional<JoinOrPos> clientJoin(const GeoPosition& pos);

    // The every-announcement_time tick. Sends only if displacement since the
    // last sent position exceeds max_distance.
    Outbound updatePosition(const GeoPosition& currentPos);

    // Unconditional announcement (used once at end of route so peers judge
    // the final geometry from fresh positions).
    Outbound forceAnnounce(const GeoPosition& currentPos);

    void onPeerList(const PeerList& reply, int64_t now);

    // Returns forwards to emit (flood handling included).
    std::vector<std::pair<NodeId, PositionMessage>> onPositionMessage(
        const PositionMessage& m, const GeoPosition& myPos, int64_t now);

    ReviewActions reviewPeers(const GeoPosition& myPos, int64_t now);

    // Inbound dial decision: accept while below max_peers.
    bool onDial(NodeId from, int64_t now);
    void onDialAck(NodeId from, bool accept, int64_t now);
    void onHangup(NodeId from);
    void onPeerDown(NodeId peer);

    const std::set<NodeId>& peers() const { return peers_; }
    bool isPeer(NodeId id) const { return peers_.count(id) != 0; }
    std::optional<GeoPosition> knownPosition(NodeId id) const;
    std::set<NodeId> nodesOfInterest() const;
    size_t pendingDialCount() const { return pendingDials_.size(); }

  private:
    struct Known {
        GeoPosition pos;
        int64_t lastHeard = 0;
        bool hasPos = false;
    };

    void hear(NodeId id, const GeoPosition& pos, int64_t now, bool insertIfNew);

    NodeId self_;
    double maxDistance_;
    uint32_t maxPeers_;
    int64_t reviewPeriod_;
    int64_t staleAfter_;
    std::optional<NodeId> server_;
    GeoPosition lastSentPos_;
    bool everSent_ = false;
    std::set<NodeId> peers_;
    std::map<NodeId, Known> known_;
    std::map<NodeId, int64_t> pendingDials_;  // target -> sent time
    std::map<NodeId, int64_t> cooldown_;      // target -> retry-allowed time
    std::set<std::tuple<NodeId, double, double>> forwarded_;
};

}  // namespace geoloc
