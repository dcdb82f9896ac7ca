#include "geoloc/simnet.hpp"

#include <cmath>

namespace geoloc {

const char* channelName(Channel c) {
    switch (c) {
        case Channel::Peer: return "peer";
        case Channel::ClientEdge: return "client-edge";
        case Channel::ClientCloud: return "client-cloud";
        case Channel::EdgeCloud: return "edge-cloud";
    }
    return "?";
}

uint64_t Metrics::totalMessages() const {
    uint64_t n = 0;
    for (const auto& ch : perChannel) n += ch.messagesSent;
    return n;
}

uint64_t Metrics::totalBytes() const {
    uint64_t n = 0;
    for (const auto& ch : perChannel) n += ch.bytesSent;
    return n;
}

SimNet::SimNet(const ProtocolConfig& cfg)
    : cfg_(cfg), grace_(5 * cfg.broadcast_time), lossRng_(mix64(cfg.seed ^ 0x10c5)) {}

void SimNet::addNode(NodeId id, NodeKind kind, Actor* actor) {
    if (!nodes_.emplace(id, Node{kind, actor, true}).second)
        throw SimAbort("duplicate node id " + std::to_string(id.value));
}

bool SimNet::alive(NodeId id) const {
    auto it = nodes_.find(id);
    return it != nodes_.end() && it->second.alive;
}

NodeKind SimNet::kindOf(NodeId id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw SimAbort("unknown node id " + std::to_string(id.value));
    return it->second.kind;
}

Channel SimNet::classify(NodeId a, NodeId b) const {
    const NodeKind ka = kindOf(a);
    const NodeKind kb = kindOf(b);
    auto pair = [&](NodeKind x, NodeKind y) {
        return (ka == x && kb == y) || (ka == y && kb == x);
    };
    if (pair(NodeKind::Client, NodeKind::Client)) return Channel::Peer;
    if (pair(NodeKind::Client, NodeKind::Edge)) return Channel::ClientEdge;
    if (pair(NodeKind::Client, NodeKind::Cloud)) return Channel::ClientCloud;
    if (pair(NodeKind::Edge, NodeKind::Cloud)) return Channel::EdgeCloud;
    throw SimAbort(std::string("no channel between node kinds for ") +
                   std::to_string(a.value) + " -> " + std::to_string(b.value));
}

int64_t SimNet::latencyOf(Channel c) {
    const int64_t base = (c == Channel::Peer || c == Channel::ClientEdge)
                             ? cfg_.latency_low
                             : cfg_.latency_high;
    if (jitterFraction_ <= 0.0) return base;
    const double u = lossRng_.nextUnit() * 2.0 - 1.0;
    const int64_t jittered =
        base + static_cast<int64_t>(std::llround(u * jitterFraction_ * double(base)));
    return jittered < 1 ? 1 : jittered;
}

void SimNet::push(Event ev) {
    ev.seq = seq_++;
    queue_.push(std::move(ev));
    if (queue_.size() > queueCap_)
        throw SimAbort("event backlog exceeded " + std::to_string(queueCap_) +
                       " events at t=" + std::to_string(now_) +
                       "; likely a runaway message flood");
}

void SimNet::send(NodeId src, NodeId dst, WireMessage msg) {
    if (!alive(src)) return;
    const Channel ch = classify(src, dst);
    const size_t size = wireSize(msg);
    auto& stats = metrics_.channel(ch);
    stats.messagesSent += 1;
    stats.bytesSent += size;
    if (isControl(msg))
        metrics_.controlMessages += 1;
    else
        metrics_.dataMessages += 1;

    Event ev;
    ev.time = now_ + latencyOf(ch);
    ev.prio = 1;
    ev.kind = Event::Kind::Message;
    ev.src = src;
    ev.dst = dst;
    ev.msg = std::move(msg);
    ev.channel = ch;
    push(std::move(ev));
}

void SimNet::scheduleTimer(NodeId node, int64_t at, int kind, uint64_t a, uint64_t b) {
    Event ev;
    ev.time = at < now_ ? now_ : at;
    ev.prio = 2;
    ev.kind = Event::Kind::Timer;
    ev.dst = node;
    ev.timerKind = kind;
    ev.a = a;
    ev.b = b;
    push(std::move(ev));
}

void SimNet::scheduleMovement(NodeId node, int64_t at, uint64_t waypointIdx) {
    Event ev;
    ev.time = at < now_ ? now_ : at;
    ev.prio = 0;
    ev.kind = Event::Kind::Movement;
    ev.dst = node;
    ev.a = waypointIdx;
    pendingStructural_ += 1;
    push(std::move(ev));
}

void SimNet::scheduleCrash(NodeId node, int64_t at) {
    Event ev;
    ev.time = at < now_ ? now_ : at;
    ev.prio = -1;
    ev.kind = Event::Kind::Crash;
    ev.dst = node;
    pendingStructural_ += 1;
    push(std::move(ev));
}

void SimNet::materialChange() { lastMaterial_ = now_; }

void SimNet::dispatch(const Event& ev) {
    auto it = nodes_.find(ev.dst);
    if (it == nodes_.end()) throw SimAbort("event for unknown node");
    Node& node = it->second;
    switch (ev.kind) {
        case Event::Kind::Crash: {
            pendingStructural_ -= 1;
            if (!node.alive) return;
            node.alive = false;
            materialChange();
            for (NodeId peer : node.actor->connectedPeers()) {
                if (!alive(peer))
                    continue;
                Event down;
                down.time = now_ + latencyOf(classify(ev.dst, peer));
                down.prio = 1;
                down.kind = Event::Kind::PeerDown;
                down.src = ev.dst;
                down.dst = peer;
                push(std::move(down));
            }
            return;
        }
        case Event::Kind::Movement: {
            pendingStructural_ -= 1;
            if (!node.alive) return;
            materialChange();
            node.actor->onMovement(ev.a);
            return;
        }
        case Event::Kind::Message: {
            auto& stats = metrics_.channel(ev.channel);
            if (!node.alive || (lossRate_ > 0.0 && lossRng_.nextUnit() < lossRate_)) {
                stats.messagesDropped += 1;
                return;
            }
            stats.messagesDelivered += 1;
            node.actor->onMessage(ev.src, ev.msg);
            return;
        }
        case Event::Kind::PeerDown: {
            if (!node.alive) return;
            node.actor->onPeerDown(ev.src);
            return;
        }
        case Event::Kind::Timer: {
            if (!node.alive) return;
            node.actor->onTimer(ev.timerKind, ev.a, ev.b);
            return;
        }
    }
}

void SimNet::run(int64_t hardStop) {
    for (auto& [id, node] : nodes_) {
        (void)id;
        if (node.alive) node.actor->onStart();
    }
    while (!queue_.empty()) {
        Event ev = queue_.top();
        queue_.pop();
        if (ev.time > hardStop) break;
        const bool quiescent =
            pendingStructural_ == 0 && ev.time > lastMaterial_ + grace_;
        if (quiescent) horizonPassed_ = true;
        if (horizonPassed_ &&
            (ev.kind == Event::Kind::Timer || ev.kind == Event::Kind::Movement)) {
            if (ev.kind == Event::Kind::Movement) pendingStructural_ -= 1;
            continue;
        }
        now_ = ev.time;
        metrics_.eventsProcessed += 1;
        if (metrics_.eventsProcessed > eventCap_)
            throw SimAbort("event cap exceeded (" + std::to_string(eventCap_) +
                           "); simulation did not quiesce");
        dispatch(ev);
    }
    metrics_.endTime = now_;
}

}  // namespace geoloc
