#pragma once

#include <deque>
#include <map>
#include <set>
#include <utility>

#include "geoloc/client_node.hpp"
#include "geoloc/overlay.hpp"
#include "geoloc/replication.hpp"
#include "geoloc/simnet.hpp"

namespace geoloc {

// Edge or cloud replica. An edge holds the objects placed inside its region
// and forwards every first-sight delta upstream; the cloud holds everything.
// Servers are passive: no timers, no movement, state changes only on receipt.
class ServerNode : public Actor {
  public:
    ServerNode(SimNet& net, NodeId id, OverlayMode mode, const InfraConfig& infra);

    void onStart() override;
    void onMessage(NodeId src, const WireMessage& msg) override;

    bool isCloud() const { return id_ == infra_.cloudId; }
    const std::map<ObjectId, GeoObject>& objects() const { return objects_; }
    const SignallingState& signalling() const { return signalling_; }
    const std::set<NodeId>& subscribers(ObjectId obj) const;

  private:
    void handleJoin(NodeId src, const JoinOrPos& m);
    void handleFetch(NodeId src, const FetchReq& m);
    void handleDelta(NodeId src, const DeltaMsg& d);
    std::vector<DirectoryEntry> sliceAround(const GeoPosition& pos) const;

    SimNet& net_;
    NodeId id_;
    OverlayMode mode_;
    InfraConfig infra_;

    SignallingState signalling_;
    std::map<ObjectId, GeoObject> objects_;
    std::map<ObjectId, std::set<NodeId>> subscribers_;
    std::set<std::pair<NodeId, uint64_t>> seen_;
    std::set<NodeId> fullSent_;
};

}  // namespace geoloc
