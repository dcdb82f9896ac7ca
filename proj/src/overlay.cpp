#include "geoloc/overlay.hpp"

#include <algorithm>
#include <limits>

namespace geoloc {

std::vector<PeerInfo> SignallingState::onNodePos(NodeId nodeId, const GeoPosition& pos,
                                                 int64_t now, double maxDistance) {
    auto [it, inserted] = nodesPos_.try_emplace(nodeId, pos);
    if (!inserted) it->second = pos;
    history_.push_back({nodeId, pos, now});

    std::vector<PeerInfo> near;
    for (const auto& [id, p] : nodesPos_) {
        if (id == nodeId) continue;
        if (within(pos, p, maxDistance)) near.push_back({id, p});
    }
    std::sort(near.begin(), near.end(), [&](const PeerInfo& a, const PeerInfo& b) {
        double da = distanceMeters(pos, a.pos);
        double db = distanceMeters(pos, b.pos);
        if (da != db) return da < db;
        return a.id < b.id;
    });
    return near;
}

PeerView::PeerView(NodeId self, const ProtocolConfig& cfg)
    : self_(self),
      maxDistance_(cfg.max_distance),
      maxPeers_(cfg.max_peers),
      reviewPeriod_(cfg.announcement_time),
      staleAfter_(5 * cfg.announcement_time),
      lastSentPos_(0.0, 0.0) {}

std::optional<JoinOrPos> PeerView::clientJoin(const GeoPosition& pos) {
    lastSentPos_ = pos;
    everSent_ = true;
    if (!server_) return std::nullopt;
    return JoinOrPos{self_, pos};
}

PeerView::Outbound PeerView::updatePosition(const GeoPosition& currentPos) {
    if (everSent_ && distanceMeters(lastSentPos_, currentPos) <= maxDistance_) return {};
    return forceAnnounce(currentPos);
}

PeerView::Outbound PeerView::forceAnnounce(const GeoPosition& currentPos) {
    lastSentPos_ = currentPos;
    everSent_ = true;
    Outbound out;
    if (server_) out.toServer = JoinOrPos{self_, currentPos};
    PositionMessage m{self_, currentPos, !server_.has_value(), {self_}};
    for (NodeId p : peers_) out.toPeers.emplace_back(p, m);
    return out;
}

void PeerView::hear(NodeId id, const GeoPosition& pos, int64_t now, bool insertIfNew) {
    if (id == self_) return;
    auto it = known_.find(id);
    if (it == known_.end()) {
        if (!insertIfNew) return;
        known_[id] = Known{pos, now, true};
        return;
    }
    it->second.pos = pos;
    it->second.hasPos = true;
    it->second.lastHeard = now;
}

void PeerView::onPeerList(const PeerList& reply, int64_t now) {
    for (const PeerInfo& p : reply.peers) hear(p.id, p.pos, now, true);
}

std::vector<std::pair<NodeId, PositionMessage>> PeerView::onPositionMessage(
    const PositionMessage& m, const GeoPosition& myPos, int64_t now) {
    bool isNew = known_.find(m.sender) == known_.end() && peers_.count(m.sender) == 0;
    bool inRange = within(myPos, m.pos, maxDistance_);
    hear(m.sender, m.pos, now, isNew ? inRange : true);

    std::vector<std::pair<NodeId, PositionMessage>> forwards;
    if (!m.propagate) return forwards;
    auto key = std::make_tuple(m.sender, m.pos.lat, m.pos.lon);
    if (!forwarded_.insert(key).second) return forwards;

    PositionMessage fwd = m;
    fwd.visitedPeers.insert(self_);
    for (NodeId p : peers_) {
        if (p == m.sender || fwd.visitedPeers.count(p)) continue;
        forwards.emplace_back(p, fwd);
    }
    return forwards;
}

PeerView::ReviewActions PeerView::reviewPeers(const GeoPosition& myPos, int64_t now) {
    ReviewActions act;

    for (auto it = known_.begin(); it != known_.end();) {
        if (peers_.count(it->first) == 0 && pendingDials_.count(it->first) == 0 &&
            it->second.lastHeard + staleAfter_ < now) {
            it = known_.erase(it);
        } else {
            ++it;
        }
    }
    for (auto it = pendingDials_.begin(); it != pendingDials_.end();) {
        if (it->second + reviewPeriod_ < now) {
            cooldown_[it->first] = now + reviewPeriod_;
            it = pendingDials_.erase(it);
        } else {
            ++it;
        }
    }
    for (auto it = cooldown_.begin(); it != cooldown_.end();) {
        if (it->second <= now) it = cooldown_.erase(it);
        else ++it;
    }

    auto distOf = [&](NodeId id) {
        auto it = known_.find(id);
        if (it == known_.end() || !it->second.hasPos)
            return std::numeric_limits<double>::infinity();
        return distanceMeters(myPos, it->second.pos);
    };

    // Out-of-range peers go first.
    for (auto it = peers_.begin(); it != peers_.end();) {
        auto k = known_.find(*it);
        if (k != known_.end() && k->second.hasPos &&
            distanceMeters(myPos, k->second.pos) > maxDistance_) {
            act.hangups.push_back(*it);
            it = peers_.erase(it);
        } else {
            ++it;
        }
    }

    // Fill up with the nearest known candidates.
    std::vector<NodeId> candidates;
    for (const auto& [id, k] : known_) {
        if (peers_.count(id) || pendingDials_.count(id) || cooldown_.count(id)) continue;
        if (!k.hasPos || !within(myPos, k.pos, maxDistance_)) continue;
        candidates.push_back(id);
    }
    std::sort(candidates.begin(), candidates.end(), [&](NodeId a, NodeId b) {
        double da = distOf(a), db = distOf(b);
        if (da != db) return da < db;
        return a < b;
    });
    for (NodeId id : candidates) {
        if (peers_.size() + pendingDials_.size() >= maxPeers_) break;
        act.dials.push_back(id);
        pendingDials_[id] = now;
    }

    // Shed the most distant links while over capacity.
    while (peers_.size() > maxPeers_) {
        auto worst = std::max_element(peers_.begin(), peers_.end(),
                                      [&](NodeId a, NodeId b) { return distOf(a) < distOf(b); });
        act.hangups.push_back(*worst);
        peers_.erase(worst);
    }
    return act;
}

bool PeerView::onDial(NodeId from, int64_t now) {
    if (peers_.count(from)) return true;
    if (peers_.size() >= maxPeers_) return false;
    peers_.insert(from);
    known_.try_emplace(from, Known{lastSentPos_, now, false});
    known_[from].lastHeard = now;
    pendingDials_.erase(from);
    return true;
}

void PeerView::onDialAck(NodeId from, bool accept, int64_t now) {
    pendingDials_.erase(from);
    if (accept) {
        peers_.insert(from);
        auto it = known_.find(from);
        if (it != known_.end()) it->second.lastHeard = now;
    } else {
        cooldown_[from] = now + reviewPeriod_;
    }
}

void PeerView::onHangup(NodeId from) { peers_.erase(from); }

void PeerView::onPeerDown(NodeId peer) {
    peers_.erase(peer);
    known_.erase(peer);
    pendingDials_.erase(peer);
    cooldown_.erase(peer);
}

std::optional<GeoPosition> PeerView::knownPosition(NodeId id) const {
    auto it = known_.find(id);
    if (it == known_.end() || !it->second.hasPos) return std::nullopt;
    return it->second.pos;
}

std::set<NodeId> PeerView::nodesOfInterest() const {
    std::set<NodeId> out = peers_;
    for (const auto& [id, k] : known_) out.insert(id);
    return out;
}

}  // namespace geoloc
