#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "geoloc/geo.hpp"

namespace geoloc {

class ProtocolError : public std::runtime_error {
  public:
    explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

// Grow-only pair of per-replica tallies. increment/decrement return the
// delta that carries just the touched entry; join is entrywise max.
class PnCounter {
  public:
    PnCounter increment(NodeId replica, uint64_t n = 1);
    PnCounter decrement(NodeId replica, uint64_t n = 1);

    int64_t value() const;

    // Returns true when this state actually grew.
    bool join(const PnCounter& other);

    // Just this replica's entries. A client keeps this across evictions so
    // its per-replica tallies never move backwards when it refetches the
    // object from a copy that has not seen its writes yet.
    PnCounter ownSlice(NodeId replica) const;

    bool operator==(const PnCounter& other) const = default;

    const std::map<NodeId, uint64_t>& positive() const { return pos_; }
    const std::map<NodeId, uint64_t>& negative() const { return neg_; }

    friend struct CrdtCodec;

  private:
    std::map<NodeId, uint64_t> pos_;
    std::map<NodeId, uint64_t> neg_;
};

// Last-writer-wins register. Ties on the stamp break on writer id, then on
// the value itself, so every replica resolves concurrent writes the same way.
class LwwRegister {
  public:
    LwwRegister() = default;
    LwwRegister(int64_t stamp, NodeId writer, std::string value)
        : stamp_(stamp), writer_(writer), value_(std::move(value)) {}

    void set(int64_t stamp, NodeId writer, std::string value);
    bool join(const LwwRegister& other);

    int64_t stamp() const { return stamp_; }
    NodeId writer() const { return writer_; }
    const std::string& value() const { return value_; }
    bool empty() const { return stamp_ < 0; }

    bool operator==(const LwwRegister& other) const = default;

  private:
    int64_t stamp_ = -1;
    NodeId writer_{0};
    std::string value_;
};

struct Dot {
    NodeId replica{0};
    uint64_t seq = 0;
    auto operator<=>(const Dot&) const = default;
};

// Causal context: a version vector for the contiguous prefix plus a cloud of
// stray dots, compacted whenever the prefix catches up.
class DotContext {
  public:
    bool contains(const Dot& d) const;
    Dot nextDot(NodeId replica);
    void add(const Dot& d);
    void join(const DotContext& other);
    void compact();

    bool operator==(const DotContext& other) const = default;

    const std::map<NodeId, uint64_t>& versionVector() const { return vv_; }
    const std::set<Dot>& cloud() const { return cloud_; }

    friend struct CrdtCodec;

  private:
    std::map<NodeId, uint64_t> vv_;
    std::set<Dot> cloud_;
};

// Observed-remove map of string keys to LWW registers, dot-tagged so
// removals only affect writes that were actually seen. Concurrent put and
// erase of the same key resolves add-wins.
class OrMap {
  public:
    // Mutators return the delta to ship. put replaces every currently
    // visible write of the key; erase covers them without a replacement.
    OrMap put(NodeId replica, const std::string& key, int64_t stamp, std::string value);
    OrMap erase(NodeId replica, const std::string& key);

    bool join(const OrMap& other);

    // Highest dot sequence this replica has used here, including any floor
    // restored after an eviction. The floor only steers dot generation; it
    // never enters the causal context, so writes this copy has not observed
    // are not treated as removed.
    uint64_t replicaSeq(NodeId replica) const;
    void ensureReplicaFloor(NodeId replica, uint64_t seqFloor);

    std::optional<std::string> lookup(const std::string& key) const;
    std::map<std::string, std::string> snapshot() const;
    size_t size() const { return entries_.size(); }
    bool containsKey(const std::string& key) const { return entries_.count(key) != 0; }

    // The generation floor is replica-local bookkeeping, not replicated
    // state, so it does not participate in equality.
    bool operator==(const OrMap& other) const;

    const DotContext& context() const { return ctx_; }
    const std::map<std::string, std::map<Dot, LwwRegister>>& entries() const {
        return entries_;
    }

    friend struct CrdtCodec;

  private:
    uint64_t floorOf(NodeId replica) const;

    DotContext ctx_;
    std::map<std::string, std::map<Dot, LwwRegister>> entries_;
    std::map<NodeId, uint64_t> seqFloor_;
};

enum class CrdtKind : uint8_t { Counter = 1, Register = 2, Map = 3 };

const char* kindName(CrdtKind k);

// Tagged union over the three replicated types. join across different kinds
// is a protocol violation, not a merge.
class CrdtPayload {
  public:
    CrdtPayload() : state_(PnCounter{}) {}
    explicit CrdtPayload(PnCounter c) : state_(std::move(c)) {}
    explicit CrdtPayload(LwwRegister r) : state_(std::move(r)) {}
    explicit CrdtPayload(OrMap m) : state_(std::move(m)) {}

    static CrdtPayload make(CrdtKind kind);

    CrdtKind kind() const;
    bool join(const CrdtPayload& other);

    PnCounter& counter();
    LwwRegister& reg();
    OrMap& map();
    const PnCounter& counter() const;
    const LwwRegister& reg() const;
    const OrMap& map() const;

    // Canonical byte encoding; equal states encode to equal bytes. decode
    // throws ProtocolError on malformed input.
    std::vector<uint8_t> encode() const;
    static CrdtPayload decode(const std::vector<uint8_t>& bytes);
    size_t serializedSize() const;

    nlohmann::json toJson() const;

    bool operator==(const CrdtPayload& other) const = default;

  private:
    std::variant<PnCounter, LwwRegister, OrMap> state_;
};

}  // namespace geoloc
