#include "geoloc/bully.hpp"

namespace geoloc {

std::optional<NodeId> BullyTable::believed(ObjectId obj) const {
    auto it = bullies_.find(obj);
    if (it == bullies_.end()) return std::nullopt;
    return it->second;
}

bool BullyTable::isSelfBully(ObjectId obj) const {
    auto it = bullies_.find(obj);
    return it != bullies_.end() && it->second == self_;
}

bool BullyTable::serverLinkRequired() const {
    for (const auto& [obj, who] : bullies_)
        if (who == self_) return true;
    return false;
}

std::vector<BullyTable::Claim> BullyTable::selfClaims() {
    std::vector<Claim> out;
    for (const auto& [obj, who] : bullies_)
        if (who == self_) out.push_back({obj, self_, 0});
    if (!out.empty()) {
        uint64_t e = mintEpoch();
        for (auto& c : out) c.epoch = e;
    }
    return out;
}

BullyTable::ClaimResult BullyTable::onBullyClaim(ObjectId obj, NodeId claimed,
                                                 uint64_t epoch, int64_t now,
                                                 bool isReply) {
    ClaimResult r;
    auto it = bullies_.find(obj);
    if (it == bullies_.end()) return r;
    NodeId cur = it->second;
    auto key = std::make_pair(obj, claimed);
    auto sit = seen_.find(key);
    bool fresh = sit == seen_.end() || epoch > sit->second;

    if (claimed == cur) {
        if (cur != self_ && fresh) {
            seen_[key] = epoch;
            deadlines_[obj] = now + timeout_;
            r.refreshed = true;
            r.armedDeadline = deadlines_[obj];
        }
        return r;
    }
    if (claimed < cur) {
        if (fresh) {
            seen_[key] = epoch;
            it->second = claimed;
            deadlines_[obj] = now + timeout_;
            r.adopted = true;
            r.armedDeadline = deadlines_[obj];
            return r;
        }
        // Stale news about someone smaller: the sender may be clinging to a
        // gone bully. Correct them; never counter a correction.
    }
    if (!isReply) {
        r.correctTo = cur;
        r.correctEpoch = cur == self_ ? mintEpoch() : seen_[{obj, cur}];
    }
    return r;
}

bool BullyTable::onBullyTimeout(ObjectId obj, int64_t firedDeadline) {
    auto it = deadlines_.find(obj);
    if (it == deadlines_.end() || it->second != firedDeadline) return false;
    deadlines_.erase(it);
    auto b = bullies_.find(obj);
    if (b == bullies_.end() || b->second == self_) return false;
    b->second = self_;
    return true;
}

std::vector<ObjectId> BullyTable::onPeerDisconnect(NodeId peer) {
    std::vector<ObjectId> promoted;
    for (auto& [obj, who] : bullies_) {
        if (who != peer) continue;
        who = self_;
        deadlines_.erase(obj);
        promoted.push_back(obj);
    }
    return promoted;
}

std::optional<int64_t> BullyTable::deadline(ObjectId obj) const {
    auto it = deadlines_.find(obj);
    if (it == deadlines_.end()) return std::nullopt;
    return it->second;
}

}  // namespace geoloc
