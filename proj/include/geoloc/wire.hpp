#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <variant>
#include <vector>

#include "geoloc/crdt.hpp"
#include "geoloc/geo.hpp"

namespace geoloc {

struct PeerInfo {
    NodeId id;
    GeoPosition pos;
};

struct DirectoryEntry {
    ObjectId id;
    GeoPosition pos;
    CrdtKind kind = CrdtKind::Counter;
};

// Position report; doubles as the join message (first contact).
struct JoinOrPos {
    NodeId nodeId;
    GeoPosition pos;
};

// Signalling reply: nearby candidate peers plus the object directory slice.
struct PeerList {
    std::vector<PeerInfo> peers;
    std::vector<DirectoryEntry> directory;
};

struct Redirect {
    NodeId serverId;
};

// Gossiped position. sender stays the originating node across forwards;
// visitedPeers implements flood suppression.
struct PositionMessage {
    NodeId sender;
    GeoPosition pos;
    bool propagate = false;
    std::set<NodeId> visitedPeers;
};

// Dial and DialAck travel via the signalling server (WebRTC-style relay).
struct Dial {
    NodeId fromId;
    NodeId toId;
};

struct DialAck {
    NodeId fromId;
    NodeId toId;
    bool accept = false;
};

// Without objectId: tear down a peer link. With objectId: close the
// per-object server link (unsubscribe).
struct Hangup {
    NodeId fromId;
    std::optional<ObjectId> objectId;
};

// Broadcast claim, relayed claim, and directed counter-claim share this
// encoding. epoch is minted by the claimed bully and carried unchanged by
// relays; receivers only act on epochs fresher than any already consumed,
// so claims from a dead or unreachable bully cannot circulate forever.
// reply marks a directed correction; replies never provoke counter-replies.
struct ImTheBully {
    NodeId senderId;
    ObjectId objectId;
    uint64_t epoch = 0;
    bool reply = false;
};

// Interest-set exchange between peers; feeds claim fan-out and delta gossip.
struct InterestMsg {
    NodeId sender;
    std::set<ObjectId> interest;
};

// subscribe=true additionally registers the requester for pushes of later
// deltas (bully server links; every fetch in client-server mode).
struct FetchReq {
    NodeId fromId;
    ObjectId objectId;
    bool subscribe = false;
};

struct FetchReply {
    ObjectId objectId;
    bool found = false;
    GeoPosition pos;
    CrdtKind kind = CrdtKind::Counter;
    CrdtPayload state;
};

struct DeltaMsg {
    ObjectId objectId;
    CrdtPayload delta;
    NodeId origin;        // the mutating client
    uint64_t originSeq;   // origin's delta counter, for acks and dedup
    int64_t sentAt = 0;   // origin's send time, for propagation latency
    bool fromServer = false;
    bool ackRequested = false;
};

struct Ack {
    ObjectId objectId;
    NodeId origin;
    uint64_t originSeq;
};

using WireMessage = std::variant<JoinOrPos, PeerList, Redirect, PositionMessage, Dial,
                                 DialAck, Hangup, ImTheBully, InterestMsg, FetchReq,
                                 FetchReply, DeltaMsg, Ack>;

const char* wireName(const WireMessage& m);

// Canonical size in bytes of the simulated encoding; documented in
// docs/wire-formats.md. Deterministic, drives all byte metrics.
size_t wireSize(const WireMessage& m);

// Control/data split: DeltaMsg and FetchReply carry object payloads, the
// rest is overlay and protocol control.
bool isControl(const WireMessage& m);

}  // namespace geoloc
