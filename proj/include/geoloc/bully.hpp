#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "geoloc/config.hpp"
#include "geoloc/geo.hpp"

namespace geoloc {

// Per-object bully election state. Smallest alive id wins. Every tracked
// object starts out self-believed; claims naming a smaller node are adopted,
// worse claims draw a directed correction carrying the currently believed
// bully. Invariant: believed(obj) <= self at all times.
//
// Claims carry an epoch minted by the claimed bully itself and relayed
// unchanged. A claim only adopts or refreshes when its epoch is strictly
// fresher than the newest one already consumed for that (object, bully)
// pair. Relays therefore propagate a live bully's heartbeat across hops
// every broadcast, while a dead or partitioned-away bully stops producing
// epochs: its believers' deadlines expire, and its stale relays bounce off
// everyone who ever heard it, so belief in it cannot be resurrected.
class BullyTable {
  public:
    struct Claim {
        ObjectId obj;
        NodeId bully;
        uint64_t epoch = 0;
    };

    struct ClaimResult {
        bool adopted = false;
        // Fresh heartbeat for the already-believed bully; deadline re-armed.
        bool refreshed = false;
        // Sender believes someone worse: answer with a reply-flagged claim
        // naming correctTo and carrying correctEpoch as evidence.
        std::optional<NodeId> correctTo;
        uint64_t correctEpoch = 0;
        // Heartbeat deadline (re)armed by this claim, if any.
        std::optional<int64_t> armedDeadline;
    };

    BullyTable(NodeId self, const ProtocolConfig& cfg)
        : self_(self), timeout_(cfg.bully_timeout) {}

    void addObject(ObjectId obj) { bullies_.emplace(obj, self_); }
    void removeObject(ObjectId obj) {
        bullies_.erase(obj);
        deadlines_.erase(obj);
    }
    bool tracks(ObjectId obj) const { return bullies_.count(obj) != 0; }
    std::optional<NodeId> believed(ObjectId obj) const;
    bool isSelfBully(ObjectId obj) const;
    bool serverLinkRequired() const;

    // Mints the next heartbeat epoch for this node's own claims.
    uint64_t mintEpoch() { return ++epochCounter_; }
    // Objects this node claims for itself, stamped with one freshly minted
    // epoch (Listing-style broadcast; relays fan the epoch outward).
    std::vector<Claim> selfClaims();

    ClaimResult onBullyClaim(ObjectId obj, NodeId claimed, uint64_t epoch,
                             int64_t now, bool isReply);
    // Fired heartbeat timer; stale deadlines are ignored. Returns true when
    // the node just promoted itself for obj.
    bool onBullyTimeout(ObjectId obj, int64_t firedDeadline);
    // Believed bully vanished: immediate self-promotion for its objects.
    std::vector<ObjectId> onPeerDisconnect(NodeId peer);
    // Forced self-promotion (delta gone unacked too long: take over delivery).
    void promoteSelf(ObjectId obj) {
        auto it = bullies_.find(obj);
        if (it == bullies_.end()) return;
        it->second = self_;
        deadlines_.erase(obj);
    }

    std::optional<int64_t> deadline(ObjectId obj) const;
    const std::map<ObjectId, NodeId>& all() const { return bullies_; }

  private:
    NodeId self_;
    int64_t timeout_;
    uint64_t epochCounter_ = 0;
    std::map<ObjectId, NodeId> bullies_;
    std::map<ObjectId, int64_t> deadlines_;
    // Freshest epoch consumed per (object, claimant).
    std::map<std::pair<ObjectId, NodeId>, uint64_t> seen_;
};

}  // namespace geoloc
