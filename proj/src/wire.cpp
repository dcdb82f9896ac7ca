#include "geoloc/wire.hpp"

namespace geoloc {

namespace {

// Field size model: header 8, id 8, position 16, bool 1, count 4, time 8.
constexpr size_t kHeader = 8;
constexpr size_t kId = 8;
constexpr size_t kPos = 16;
constexpr size_t kBool = 1;
constexpr size_t kCount = 4;
constexpr size_t kTime = 8;

struct SizeVisitor {
    size_t operator()(const JoinOrPos&) const { return kHeader + kId + kPos; }
    size_t operator()(const PeerList& m) const {
        return kHeader + kCount + m.peers.size() * (kId + kPos) + kCount +
               m.directory.size() * (kId + kPos + 1);
    }
    size_t operator()(const Redirect&) const { return kHeader + kId; }
    size_t operator()(const PositionMessage& m) const {
        return kHeader + kId + kPos + kBool + kCount + m.visitedPeers.size() * kId;
    }
    size_t operator()(const Dial&) const { return kHeader + 2 * kId; }
    size_t operator()(const DialAck&) const { return kHeader + 2 * kId + kBool; }
    size_t operator()(const Hangup& m) const {
        return kHeader + kId + kBool + (m.objectId ? kId : 0);
    }
    size_t operator()(const ImTheBully&) const {
        return kHeader + 2 * kId + kTime + kBool;
    }
    size_t operator()(const InterestMsg& m) const {
        return kHeader + kId + kCount + m.interest.size() * kId;
    }
    size_t operator()(const FetchReq&) const { return kHeader + 2 * kId + kBool; }
    size_t operator()(const FetchReply& m) const {
        return kHeader + kId + kBool +
               (m.found ? kPos + 1 + m.state.serializedSize() : 0);
    }
    size_t operator()(const DeltaMsg& m) const {
        return kHeader + kId + m.delta.serializedSize() + kId + 8 + kTime + 2 * kBool;
    }
    size_t operator()(const Ack&) const { return kHeader + 2 * kId + 8; }
};

struct NameVisitor {
    const char* operator()(const JoinOrPos&) const { return "JoinOrPos"; }
    const char* operator()(const PeerList&) const { return "PeerList"; }
    const char* operator()(const Redirect&) const { return "Redirect"; }
    const char* operator()(const PositionMessage&) const { return "PositionMessage"; }
    const char* operator()(const Dial&) const { return "Dial"; }
    const char* operator()(const DialAck&) const { return "DialAck"; }
    const char* operator()(const Hangup&) const { return "Hangup"; }
    const char* operator()(const ImTheBully&) const { return "ImTheBully"; }
    const char* operator()(const InterestMsg&) const { return "InterestMsg"; }
    const char* operator()(const FetchReq&) const { return "FetchReq"; }
    const char* operator()(const FetchReply&) const { return "FetchReply"; }
    const char* operator()(const DeltaMsg&) const { return "DeltaMsg"; }
    const char* operator()(const Ack&) const { return "Ack"; }
};

}  // namespace

const char* wireName(const WireMessage& m) { return std::visit(NameVisitor{}, m); }

size_t wireSize(const WireMessage& m) { return std::visit(SizeVisitor{}, m); }

bool isControl(const WireMessage& m) {
    return !std::holds_alternative<DeltaMsg>(m) && !std::holds_alternative<FetchReply>(m);
}

}  // namespace geoloc
