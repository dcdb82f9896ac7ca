#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "geoloc/config.hpp"
#include "geoloc/geo.hpp"
#include "geoloc/rng.hpp"
#include "geoloc/wire.hpp"

namespace geoloc {

class SimAbort : public std::runtime_error {
  public:
    explicit SimAbort(const std::string& what) : std::runtime_error(what) {}
};

enum class Channel : uint8_t { Peer = 0, ClientEdge = 1, ClientCloud = 2, EdgeCloud = 3 };
constexpr size_t kChannelCount = 4;
const char* channelName(Channel c);

enum class NodeKind : uint8_t { Client, Edge, Cloud };

struct LatencySample {
    NodeId origin;
    uint64_t originSeq = 0;
    NodeId receiver;
    int64_t sentAt = 0;
    int64_t receivedAt = 0;
};

struct Metrics {
    struct ChannelStats {
        uint64_t messagesSent = 0;
        uint64_t messagesDelivered = 0;
        uint64_t messagesDropped = 0;
        uint64_t bytesSent = 0;
    };
    ChannelStats perChannel[kChannelCount];
    uint64_t controlMessages = 0;
    uint64_t dataMessages = 0;
    uint64_t wastedBytes = 0;
    uint64_t deltasIssued = 0;
    uint64_t deltasAcked = 0;
    uint64_t eventsProcessed = 0;
    int64_t endTime = 0;
    std::vector<LatencySample> latencies;

    ChannelStats& channel(Channel c) { return perChannel[static_cast<size_t>(c)]; }
    const ChannelStats& channel(Channel c) const {
        return perChannel[static_cast<size_t>(c)];
    }
    uint64_t serverMessages() const {
        return channel(Channel::ClientEdge).messagesSent +
               channel(Channel::ClientCloud).messagesSent;
    }
    uint64_t peerMessages() const { return channel(Channel::Peer).messagesSent; }
    uint64_t totalMessages() const;
    uint64_t totalBytes() const;
};

// A node's behaviour. Driven single-threaded by the event loop; handlers may
// send messages and arm timers but must not block.
class SimNet;
class Actor {
  public:
    virtual ~Actor() = default;
    virtual void onStart() {}
    virtual void onMessage(NodeId src, const WireMessage& msg) = 0;
    virtual void onTimer(int kind, uint64_t a, uint64_t b) {
        (void)kind;
        (void)a;
        (void)b;
    }
    virtual void onMovement(uint64_t waypointIdx) { (void)waypointIdx; }
    // Link-layer notification that an established peer connection died.
    virtual void onPeerDown(NodeId peer) { (void)peer; }
    // Peers the link layer would notice disconnecting if this node crashed.
    virtual std::vector<NodeId> connectedPeers() const { return {}; }
};

// Deterministic discrete-event loop. Same config + same actor behaviour
// gives a bit-identical event order: ties break on (priority class, enqueue
// sequence), and nothing here reads wall clock or unseeded randomness.
class SimNet {
  public:
    explicit SimNet(const ProtocolConfig& cfg);

    void addNode(NodeId id, NodeKind kind, Actor* actor);
    bool alive(NodeId id) const;
    NodeKind kindOf(NodeId id) const;

    int64_t now() const { return now_; }
    const ProtocolConfig& config() const { return cfg_; }

    void send(NodeId src, NodeId dst, WireMessage msg);
    void scheduleTimer(NodeId node, int64_t at, int kind, uint64_t a = 0, uint64_t b = 0);
    void scheduleMovement(NodeId node, int64_t at, uint64_t waypointIdx);
    void scheduleCrash(NodeId node, int64_t at);

    // Nodes call this when protocol state materially changed; the run keeps
    // going until grace ms pass with no material change.
    void materialChange();

    // Extra quiescence horizon beyond the last material change. Default
    // 5 x broadcast_time.
    void setGrace(int64_t ms) { grace_ = ms; }
    void setEventCap(uint64_t cap) { eventCap_ = cap; }
    // Loss applies to delivery; defaults to 0 (reliable links).
    void setLossRate(double rate) { lossRate_ = rate; }
    void setJitterFraction(double f) { jitterFraction_ = f; }

    // Runs to quiescence (or hardStop, whichever first). After the horizon
    // passes, pending timers are discarded but in-flight messages still
    // drain, so per-channel conservation holds at return.
    void run(int64_t hardStop);

    Metrics& metrics() { return metrics_; }
    const Metrics& metrics() const { return metrics_; }

    Channel classify(NodeId a, NodeId b) const;

  private:
    struct Event {
        int64_t time = 0;
        int prio = 0;
        uint64_t seq = 0;
        enum class Kind : uint8_t { Crash, Movement, Message, PeerDown, Timer } kind =
            Kind::Timer;
        NodeId src;
        NodeId dst;
        WireMessage msg;
        Channel channel = Channel::Peer;
        int timerKind = 0;
        uint64_t a = 0;
        uint64_t b = 0;
    };
    struct EventAfter {
        bool operator()(const Event& x, const Event& y) const {
            if (x.time != y.time) return x.time > y.time;
            if (x.prio != y.prio) return x.prio > y.prio;
            return x.seq > y.seq;
        }
    };
    struct Node {
        NodeKind kind;
        Actor* actor;
        bool alive = true;
    };

    int64_t latencyOf(Channel c);
    void push(Event ev);
    void dispatch(const Event& ev);

    ProtocolConfig cfg_;
    std::map<NodeId, Node> nodes_;
    std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
    Metrics metrics_;
    int64_t now_ = 0;
    uint64_t seq_ = 0;
    int64_t lastMaterial_ = 0;
    int64_t grace_ = 0;
    uint64_t eventCap_ = 50'000'000;
    uint64_t queueCap_ = 2'000'000;
    uint64_t pendingStructural_ = 0;  // movements and crashes not yet processed
    double lossRate_ = 0.0;
    double jitterFraction_ = 0.0;
    SplitMix64 lossRng_;
    bool horizonPassed_ = false;
};

}  // namespace geoloc
