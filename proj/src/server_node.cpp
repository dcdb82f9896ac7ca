#include "geoloc/server_node.hpp"

namespace geoloc {

ServerNode::ServerNode(SimNet& net, NodeId id, OverlayMode mode, const InfraConfig& infra)
    : net_(net), id_(id), mode_(mode), infra_(infra) {}

void ServerNode::onStart() {
    std::optional<Region> region = infra_.regionOf(id_);
    for (const DirectoryEntry& e : infra_.catalog) {
        if (!isCloud() && (!region || !region->contains(e.pos))) continue;
        GeoObject g;
        g.id = e.id;
        g.pos = e.pos;
        g.kind = e.kind;
        g.state = CrdtPayload::make(e.kind);
        objects_.emplace(e.id, std::move(g));
    }
}

const std::set<NodeId>& ServerNode::subscribers(ObjectId obj) const {
    static const std::set<NodeId> empty;
    auto it = subscribers_.find(obj);
    return it == subscribers_.end() ? empty : it->second;
}

std::vector<DirectoryEntry> ServerNode::sliceAround(const GeoPosition& pos) const {
    std::vector<DirectoryEntry> out;
    for (const DirectoryEntry& e : infra_.catalog)
        if (within(pos, e.pos, infra_.directorySlack)) out.push_back(e);
    return out;
}

void ServerNode::handleJoin(NodeId src, const JoinOrPos& m) {
    if (isCloud() && mode_ != OverlayMode::ClientServer) {
        NodeId responsible = infra_.serverFor(m.pos);
        if (responsible != id_) {
            net_.send(id_, src, Redirect{responsible});
            return;
        }
    }

    std::vector<PeerInfo> near =
        signalling_.onNodePos(m.nodeId, m.pos, net_.now(), net_.config().max_distance);

    PeerList reply;
    if (mode_ != OverlayMode::ClientServer) reply.peers = std::move(near);
    if (mode_ == OverlayMode::GloFull) {
        if (fullSent_.insert(src).second) reply.directory = infra_.catalog;
    } else {
        reply.directory = sliceAround(m.pos);
    }
    net_.send(id_, src, std::move(reply));
}

void ServerNode::handleFetch(NodeId src, const FetchReq& m) {
    FetchReply reply;
    reply.objectId = m.objectId;
    auto it = objects_.find(m.objectId);
    if (it != objects_.end()) {
        reply.found = true;
        reply.pos = it->second.pos;
        reply.kind = it->second.kind;
        reply.state = it->second.state;
        if (m.subscribe) subscribers_[m.objectId].insert(m.fromId);
    }
    net_.send(id_, src, std::move(reply));
}

void ServerNode::handleDelta(NodeId src, const DeltaMsg& d) {
    if (!seen_.insert({d.origin, d.originSeq}).second) {
        if (d.ackRequested) net_.send(id_, d.origin, Ack{d.objectId, d.origin, d.originSeq});
        return;
    }

    if (!isCloud()) {
        DeltaMsg up = d;
        up.ackRequested = false;
        net_.send(id_, infra_.cloudId, std::move(up));
    }

    bool changed = false;
    auto it = objects_.find(d.objectId);
    if (it != objects_.end()) changed = it->second.state.join(d.delta);

    if (d.ackRequested) net_.send(id_, d.origin, Ack{d.objectId, d.origin, d.originSeq});

    auto subs = subscribers_.find(d.objectId);
    if (subs != subscribers_.end()) {
        for (NodeId dst : subs->second) {
            if (dst == d.origin || dst == src) continue;
            DeltaMsg push = d;
            push.fromServer = true;
            push.ackRequested = false;
            net_.send(id_, dst, std::move(push));
        }
    }
    if (changed) net_.materialChange();
}

void ServerNode::onMessage(NodeId src, const WireMessage& msg) {
    if (auto* m = std::get_if<JoinOrPos>(&msg)) {
        handleJoin(src, *m);
    } else if (auto* m = std::get_if<Dial>(&msg)) {
        net_.send(id_, m->toId, *m);
    } else if (auto* m = std::get_if<DialAck>(&msg)) {
        net_.send(id_, m->toId, *m);
    } else if (auto* m = std::get_if<Hangup>(&msg)) {
        if (m->objectId) subscribers_[*m->objectId].erase(m->fromId);
    } else if (auto* m = std::get_if<FetchReq>(&msg)) {
        handleFetch(src, *m);
    } else if (auto* m = std::get_if<DeltaMsg>(&msg)) {
        handleDelta(src, *m);
    }
}

}  // namespace geoloc
