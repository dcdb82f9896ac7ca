#include "geoloc/client_node.hpp"

#include <algorithm>

namespace geoloc {

const char* modeName(OverlayMode m) {
    switch (m) {
        case OverlayMode::ClientServer: return "client-server";
        case OverlayMode::GloPartial: return "glo-partial";
        case OverlayMode::GloFull: return "glo-full";
    }
    return "?";
}

ClientNode::ClientNode(SimNet& net, NodeId id, OverlayMode mode, Workload workload,
                       Route route, const InfraConfig& infra)
    : net_(net),
      id_(id),
      mode_(mode),
      workload_(workload),
      route_(std::move(route)),
      arrivals_(arrivalTimes(route_)),
      infra_(infra),
      view_(id, net.config()),
      bullies_(id, net.config()),
      store_(id),
      servingServer_(infra.cloudId) {}

GeoPosition ClientNode::currentPosition() const {
    return positionAt(route_, arrivals_, net_.now());
}

void ClientNode::setWritePlan(ObjectId target, std::vector<int64_t> times) {
    writeTarget_ = target;
    writeTimes_ = std::move(times);
}

void ClientNode::sendToServer(WireMessage msg) { net_.send(id_, servingServer_, std::move(msg)); }

std::vector<NodeId> ClientNode::interestedPeers(ObjectId obj) const {
    std::vector<NodeId> out;
    for (NodeId p : view_.peers()) {
        if (mode_ == OverlayMode::GloFull) {
            out.push_back(p);
            continue;
        }
        auto it = peerInterest_.find(p);
        if (it != peerInterest_.end() && it->second.count(obj)) out.push_back(p);
    }
    return out;
}

void ClientNode::onStart() {
    GeoPosition pos = waypointPos();
    servingServer_ = infra_.serverFor(pos);
    view_.setServerLink(servingServer_);
    if (auto j = view_.clientJoin(pos)) {
        outstanding_[servingServer_].push_back(pos);
        sendToServer(*j);
    }
    net_.scheduleTimer(id_, cfg().announcement_time, kTimerAnnounce);
    net_.scheduleTimer(id_, cfg().broadcast_time, kTimerBroadcast);
    for (size_t i = 0; i < writeTimes_.size(); ++i)
        net_.scheduleTimer(id_, writeTimes_[i], kTimerWrite, i);
    net_.materialChange();
}

void ClientNode::onTimer(int kind, uint64_t a, uint64_t b) {
    switch (kind) {
        case kTimerAnnounce:
            announceTick();
            net_.scheduleTimer(id_, net_.now() + cfg().announcement_time, kTimerAnnounce);
            break;
        case kTimerBroadcast:
            broadcastTick();
            net_.scheduleTimer(id_, net_.now() + cfg().broadcast_time, kTimerBroadcast);
            break;
        case kTimerBully: {
            ObjectId obj{a};
            if (bullies_.onBullyTimeout(obj, static_cast<int64_t>(b))) {
                claimObjects({obj});
                net_.materialChange();
            }
            break;
        }
        case kTimerWrite: {
            if (!store_.has(writeTarget_)) {
                net_.scheduleTimer(id_, net_.now() + cfg().announcement_time, kTimerWrite, a);
                break;
            }
            std::string key = "w/" + std::to_string(id_.value) + "/" + std::to_string(a);
            issueDelta(writeTarget_,
                       store_.put(writeTarget_, key, net_.now(), "ping"));
            break;
        }
        default: break;
    }
}

void ClientNode::onMovement(uint64_t waypointIdx) {
    curWp_ = static_cast<size_t>(waypointIdx);
    GeoPosition pos = waypointPos();
    updateCoverage();

    NodeId srv = infra_.serverFor(pos);
    if (srv != servingServer_) {
        servingServer_ = srv;
        view_.setServerLink(srv);
        if (auto j = view_.clientJoin(pos)) {
            outstanding_[srv].push_back(pos);
            sendToServer(*j);
        }
    } else {
        bool last = curWp_ + 1 == route_.waypoints.size();
        PeerView::Outbound out = last ? view_.forceAnnounce(pos) : view_.updatePosition(pos);
        if (out.toServer) {
            outstanding_[servingServer_].push_back(pos);
            sendToServer(*out.toServer);
        }
        noteFlood(id_, pos, out.toPeers.size());
        for (auto& [p, m] : out.toPeers) net_.send(id_, p, m);
    }

    scanEntries();
    refreshInterest(pos);
    commitReady();
    net_.materialChange();
}

void ClientNode::onPeerDown(NodeId peer) {
    view_.onPeerDown(peer);
    peerInterest_.erase(peer);
    std::vector<ObjectId> promoted = bullies_.onPeerDisconnect(peer);
    claimObjects(promoted);
    net_.materialChange();
}

std::vector<NodeId> ClientNode::connectedPeers() const {
    return {view_.peers().begin(), view_.peers().end()};
}

void ClientNode::announceTick() {
    GeoPosition pos = currentPosition();
    NodeId srv = infra_.serverFor(pos);
    if (srv != servingServer_) {
        servingServer_ = srv;
        view_.setServerLink(srv);
        if (auto j = view_.clientJoin(pos)) {
            outstanding_[srv].push_back(pos);
            sendToServer(*j);
        }
    } else {
        PeerView::Outbound out = view_.updatePosition(pos);
        if (out.toServer) {
            outstanding_[servingServer_].push_back(pos);
            sendToServer(*out.toServer);
        }
        noteFlood(id_, pos, out.toPeers.size());
        for (auto& [p, m] : out.toPeers) net_.send(id_, p, m);
    }

    PeerView::ReviewActions act = view_.reviewPeers(pos, net_.now());
    noteDegree();
    for (NodeId target : act.dials) sendToServer(Dial{id_, target});
    for (NodeId target : act.hangups) {
        net_.send(id_, target, Hangup{id_, std::nullopt});
        net_.materialChange();
    }

    refreshInterest(pos);
    commitReady();
}

void ClientNode::broadcastTick() {
    if (glo()) {
        for (const auto& c : bullies_.selfClaims())
            for (NodeId p : interestedPeers(c.obj))
                net_.send(id_, p, ImTheBully{id_, c.obj, c.epoch, false});
        evaluateServerLinks();
    }

    for (auto& [seq, u] : unacked_) {
        u.tries += 1;
        DeltaMsg d{u.obj, u.delta, id_, seq, net_.now(), false, false};
        if (!glo()) {
            d.ackRequested = true;
            net_.send(id_, infra_.cloudId, d);
        } else {
            if (u.tries >= 3 && !bullies_.isSelfBully(u.obj)) {
                bullies_.promoteSelf(u.obj);
                claimObjects({u.obj});
            }
            if (bullies_.isSelfBully(u.obj)) {
                uploadDelta(d);
            } else {
                auto believed = bullies_.believed(u.obj);
                if (believed && view_.isPeer(*believed)) net_.send(id_, *believed, d);
            }
        }
        net_.materialChange();
    }
}

void ClientNode::evaluateServerLinks() {
    for (const auto& [obj, who] : bullies_.all()) {
        bool want = who == id_ && interest_.count(obj) != 0;
        bool have = subscribed_.count(obj) != 0;
        if (want && !have) {
            const DirectoryEntry* e = infra_.find(obj);
            if (!e) continue;
            net_.send(id_, infra_.homeServer(e->pos), FetchReq{id_, obj, true});
            subscribed_.insert(obj);
            net_.materialChange();
        } else if (!want && have) {
            const DirectoryEntry* e = infra_.find(obj);
            if (e) net_.send(id_, infra_.homeServer(e->pos), Hangup{id_, obj});
            subscribed_.erase(obj);
            net_.materialChange();
        }
    }
    // Links for objects no longer tracked at all.
    for (auto it = subscribed_.begin(); it != subscribed_.end();) {
        if (!bullies_.tracks(*it)) {
            const DirectoryEntry* e = infra_.find(*it);
            if (e) net_.send(id_, infra_.homeServer(e->pos), Hangup{id_, *it});
            it = subscribed_.erase(it);
            net_.materialChange();
        } else {
            ++it;
        }
    }
}

void ClientNode::updateCoverage() {
    if (fullDirectory_) {
        waypointCovered_ = true;
        return;
    }
    waypointCovered_ = false;
    double need = infra_.directorySlack - cfg().interest_radius;
    for (const GeoPosition& c : sliceCenters_)
        if (distanceMeters(waypointPos(), c) <= need) {
            waypointCovered_ = true;
            return;
        }
}

void ClientNode::refreshInterest(const GeoPosition& pos) {
    if (directory_.empty()) return;
    std::set<ObjectId> want;
    if (mode_ == OverlayMode::GloFull && fullDirectory_) {
        want = dirIds_;
    } else {
        want = store_.interestSet(pos, directory_, cfg().interest_radius);
    }

    std::vector<ObjectId> gone;
    for (const auto& [obj, g] : store_.objects())
        if (!want.count(obj) && !hasBlockingWork(obj)) gone.push_back(obj);
    for (ObjectId obj : gone) {
        store_.evict(obj);
        bullies_.removeObject(obj);
        pendingFetch_.erase(obj);
        if (subscribed_.count(obj)) {
            const DirectoryEntry* e = infra_.find(obj);
            if (e) net_.send(id_, infra_.homeServer(e->pos), Hangup{id_, obj});
            subscribed_.erase(obj);
        }
        net_.materialChange();
    }

    for (ObjectId obj : want) {
        if (store_.has(obj)) continue;
        auto pf = pendingFetch_.find(obj);
        if (pf != pendingFetch_.end()) {
            if (net_.now() - pf->second.sentAt <= cfg().announcement_time) continue;
            net_.send(id_, pf->second.target, FetchReq{id_, obj, pf->second.subscribe});
            pf->second.sentAt = net_.now();
            net_.materialChange();
            continue;
        }
        const DirectoryEntry* e = infra_.find(obj);
        if (!e) continue;
        NodeId target = infra_.homeServer(e->pos);
        if (glo()) {
            for (NodeId p : view_.peers()) {
                auto it = peerInterest_.find(p);
                if (it != peerInterest_.end() && it->second.count(obj)) {
                    target = p;
                    break;
                }
            }
        }
        bool subscribe = mode_ == OverlayMode::ClientServer;
        net_.send(id_, target, FetchReq{id_, obj, subscribe});
        if (subscribe) subscribed_.insert(obj);
        pendingFetch_[obj] = PendingFetch{target, net_.now(), subscribe};
        bullies_.addObject(obj);
        net_.materialChange();
    }

    if (want != interest_) {
        interest_ = std::move(want);
        if (mode_ == OverlayMode::GloPartial)
            for (NodeId p : view_.peers()) net_.send(id_, p, InterestMsg{id_, interest_});
        net_.materialChange();
    }
}

void ClientNode::scanEntries() {
    GeoPosition pos = waypointPos();
    std::set<ObjectId> nowInside;
    for (const DirectoryEntry& d : directory_)
        if (within(pos, d.pos, cfg().interest_radius)) nowInside.insert(d.id);

    for (ObjectId v : nowInside) {
        if (inside_.count(v)) continue;
        const DirectoryEntry* e = infra_.find(v);
        if (!e) continue;
        int64_t anchor = arrivals_[curWp_];
        if (workload_ == Workload::CheckIn && e->kind == CrdtKind::Counter) {
            pending_.push_back({anchor, v});
        } else if (workload_ == Workload::Review && e->kind == CrdtKind::Map) {
            if (!reviewsDone_.count(v) &&
                unitHash(cfg().seed, id_.value, v.value, 0) < cfg().review_probability) {
                reviewsDone_.insert(v);
                pending_.push_back({anchor, v});
            }
        }
    }
    inside_ = std::move(nowInside);
    std::sort(pending_.begin(), pending_.end(), [](const Obligation& a, const Obligation& b) {
        if (a.anchor != b.anchor) return a.anchor < b.anchor;
        return a.obj < b.obj;
    });
}

void ClientNode::commitReady() {
    while (!pending_.empty()) {
        const Obligation& ob = pending_.front();
        bool pastWaypoint = ob.anchor < arrivals_[curWp_];
        if (!pastWaypoint && !waypointCovered_) break;
        if (!store_.has(ob.obj)) break;
        const GeoObject* g = store_.get(ob.obj);
        if (g->kind == CrdtKind::Counter) {
            issueDelta(ob.obj, store_.increment(ob.obj, 1));
        } else {
            uint64_t len = 500 + hashStream(cfg().seed, id_.value, ob.obj.value, 1) % 9501;
            char fill = static_cast<char>(
                'a' + hashStream(cfg().seed, id_.value, ob.obj.value, 2) % 26);
            std::string key =
                "review/" + std::to_string(id_.value) + "/" + std::to_string(reviewSeq_);
            issueDelta(ob.obj, store_.put(ob.obj, key, ob.anchor,
                                          std::string(len, fill)));
            reviewSeq_ += 1;
        }
        obligationsCommitted_ += 1;
        pending_.pop_front();
    }
}

void ClientNode::noteDegree() { maxDegree_ = std::max(maxDegree_, view_.peers().size()); }

void ClientNode::noteFlood(NodeId sender, const GeoPosition& pos, size_t burst) {
    if (burst == 0) return;
    if (!floodSent_.insert({sender, pos.lat, pos.lon}).second) floodViolations_ += 1;
    if (burst > view_.peers().size()) floodViolations_ += 1;
}

bool ClientNode::hasBlockingWork(ObjectId obj) const {
    for (const auto& [seq, u] : unacked_)
        if (u.obj == obj) return true;
    for (const Obligation& ob : pending_)
        if (ob.obj == obj) return true;
    return false;
}

void ClientNode::issueDelta(ObjectId obj, CrdtPayload delta) {
    uint64_t seq = nextSeq_++;
    seen_.insert({id_, seq});
    net_.metrics().deltasIssued += 1;
    if (deltaLog_) deltaLog_->push_back({obj, delta});
    unacked_[seq] = Unacked{obj, delta, 0};

    DeltaMsg d{obj, std::move(delta), id_, seq, net_.now(), false, false};
    if (!glo()) {
        d.ackRequested = true;
        net_.send(id_, infra_.cloudId, std::move(d));
    } else {
        for (NodeId p : interestedPeers(obj)) net_.send(id_, p, d);
        if (bullies_.isSelfBully(obj)) uploadDelta(d);
    }
    net_.materialChange();
}

void ClientNode::uploadDelta(const DeltaMsg& d) {
    const DirectoryEntry* e = infra_.find(d.objectId);
    if (!e) return;
    DeltaMsg up = d;
    up.ackRequested = true;
    up.fromServer = false;
    net_.send(id_, infra_.homeServer(e->pos), std::move(up));
}

void ClientNode::claimObjects(const std::vector<ObjectId>& objs) {
    if (objs.empty()) return;
    uint64_t e = bullies_.mintEpoch();
    for (ObjectId obj : objs)
        for (NodeId p : interestedPeers(obj))
            net_.send(id_, p, ImTheBully{id_, obj, e, false});
    net_.materialChange();
}

void ClientNode::handleJoinReply(const PeerList& reply) {
    auto& q = outstanding_[servingServer_];
    GeoPosition center = waypointPos();
    if (!q.empty()) {
        center = q.front();
        q.pop_front();
    }
    sliceCenters_.push_back(center);
    view_.onPeerList(reply, net_.now());

    bool grew = false;
    for (const DirectoryEntry& d : reply.directory)
        if (dirIds_.insert(d.id).second) {
            directory_.push_back(d);
            grew = true;
        }
    if (mode_ == OverlayMode::GloFull && grew) fullDirectory_ = true;
    updateCoverage();
    if (grew) scanEntries();
    refreshInterest(currentPosition());
    commitReady();
    net_.materialChange();
}

void ClientNode::handleClaim(NodeId src, const ImTheBully& m) {
    if (!bullies_.tracks(m.objectId)) return;
    BullyTable::ClaimResult r =
        bullies_.onBullyClaim(m.objectId, m.senderId, m.epoch, net_.now(), m.reply);
    if (r.armedDeadline)
        net_.scheduleTimer(id_, *r.armedDeadline, kTimerBully, m.objectId.value,
                           static_cast<uint64_t>(*r.armedDeadline));
    if (r.adopted || r.refreshed) {
        for (NodeId p : interestedPeers(m.objectId))
            if (p != src && p != m.senderId)
                net_.send(id_, p, ImTheBully{m.senderId, m.objectId, m.epoch, false});
    }
    if (r.adopted) net_.materialChange();
    if (r.correctTo)
        net_.send(id_, src, ImTheBully{*r.correctTo, m.objectId, r.correctEpoch, true});
}

void ClientNode::handleDelta(NodeId src, const DeltaMsg& d, size_t bytes) {
    if (!seen_.insert({d.origin, d.originSeq}).second) return;
    if (!interest_.count(d.objectId)) {
        net_.metrics().wastedBytes += bytes;
        return;
    }
    const DirectoryEntry* e = infra_.find(d.objectId);
    if (!e) return;
    bool changed;
    if (!store_.has(d.objectId)) {
        store_.adopt(*e, d.delta);
        bullies_.addObject(d.objectId);
        changed = true;
    } else {
        changed = store_.applyRemote(d.objectId, d.delta);
    }
    if (d.origin != id_)
        net_.metrics().latencies.push_back(
            {d.origin, d.originSeq, id_, d.sentAt, net_.now()});
    if (glo()) {
        for (NodeId p : interestedPeers(d.objectId)) {
            if (p == src || p == d.origin) continue;
            DeltaMsg fwd = d;
            fwd.fromServer = false;
            fwd.ackRequested = false;
            net_.send(id_, p, std::move(fwd));
        }
        if (bullies_.isSelfBully(d.objectId) && !d.fromServer) uploadDelta(d);
    }
    if (changed) net_.materialChange();
    commitReady();
}

void ClientNode::onMessage(NodeId src, const WireMessage& msg) {
    size_t bytes = wireSize(msg);
    if (auto* m = std::get_if<PeerList>(&msg)) {
        handleJoinReply(*m);
    } else if (auto* m = std::get_if<Redirect>(&msg)) {
        // Stale addressing: re-join at the indicated server.
        auto& q = outstanding_[servingServer_];
        if (!q.empty()) q.pop_front();
        servingServer_ = m->serverId;
        view_.setServerLink(servingServer_);
        GeoPosition pos = currentPosition();
        if (auto j = view_.clientJoin(pos)) {
            outstanding_[servingServer_].push_back(pos);
            sendToServer(*j);
        }
    } else if (auto* m = std::get_if<PositionMessage>(&msg)) {
        auto forwards = view_.onPositionMessage(*m, currentPosition(), net_.now());
        noteFlood(m->sender, m->pos, forwards.size());
        for (auto& [p, fwd] : forwards) net_.send(id_, p, fwd);
    } else if (auto* m = std::get_if<Dial>(&msg)) {
        bool accept = view_.onDial(m->fromId, net_.now());
        sendToServer(DialAck{id_, m->fromId, accept});
        if (accept) {
            noteDegree();
            if (mode_ == OverlayMode::GloPartial)
                net_.send(id_, m->fromId, InterestMsg{id_, interest_});
            net_.materialChange();
        }
    } else if (auto* m = std::get_if<DialAck>(&msg)) {
        view_.onDialAck(m->fromId, m->accept, net_.now());
        if (m->accept) {
            noteDegree();
            if (mode_ == OverlayMode::GloPartial)
                net_.send(id_, m->fromId, InterestMsg{id_, interest_});
            net_.materialChange();
        }
    } else if (auto* m = std::get_if<Hangup>(&msg)) {
        if (!m->objectId) view_.onHangup(m->fromId);
    } else if (auto* m = std::get_if<ImTheBully>(&msg)) {
        handleClaim(src, *m);
    } else if (auto* m = std::get_if<InterestMsg>(&msg)) {
        peerInterest_[m->sender] = m->interest;
    } else if (auto* m = std::get_if<FetchReq>(&msg)) {
        FetchReply reply;
        reply.objectId = m->objectId;
        const GeoObject* g = store_.get(m->objectId);
        if (g) {
            reply.found = true;
            reply.pos = g->pos;
            reply.kind = g->kind;
            reply.state = g->state;
        }
        net_.send(id_, src, std::move(reply));
    } else if (auto* m = std::get_if<FetchReply>(&msg)) {
        auto pf = pendingFetch_.find(m->objectId);
        if (!m->found) {
            if (pf != pendingFetch_.end()) {
                const DirectoryEntry* e = infra_.find(m->objectId);
                NodeId next = infra_.cloudId;
                if (e && src.value < infra_.cloudId.value) next = infra_.homeServer(e->pos);
                if (next == src) next = infra_.cloudId;
                if (src == infra_.cloudId) {
                    pendingFetch_.erase(pf);
                } else {
                    net_.send(id_, next, FetchReq{id_, m->objectId, pf->second.subscribe});
                    pf->second.target = next;
                    pf->second.sentAt = net_.now();
                }
            }
            return;
        }
        if (interest_.count(m->objectId)) {
            const DirectoryEntry* e = infra_.find(m->objectId);
            if (e) {
                store_.adopt(*e, m->state);
                bullies_.addObject(m->objectId);
                pendingFetch_.erase(m->objectId);
                net_.materialChange();
                commitReady();
            }
        } else {
            net_.metrics().wastedBytes += bytes;
            pendingFetch_.erase(m->objectId);
            if (subscribed_.count(m->objectId)) {
                const DirectoryEntry* e = infra_.find(m->objectId);
                if (e) net_.send(id_, infra_.homeServer(e->pos), Hangup{id_, m->objectId});
                subscribed_.erase(m->objectId);
            }
        }
    } else if (auto* m = std::get_if<DeltaMsg>(&msg)) {
        handleDelta(src, *m, bytes);
    } else if (auto* m = std::get_if<Ack>(&msg)) {
        auto it = unacked_.find(m->originSeq);
        if (it != unacked_.end() && m->origin == id_) {
            unacked_.erase(it);
            net_.metrics().deltasAcked += 1;
        }
    }
}

}  // namespace geoloc
