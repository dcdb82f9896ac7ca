#include "geoloc/replication.hpp"

#include <algorithm>

namespace geoloc {

NodeId InfraConfig::serverFor(const GeoPosition& pos) const {
    for (const EdgeSpec& e : edges)
        if (e.region.contains(pos)) return e.id;
    return cloudId;
}

NodeId InfraConfig::homeServer(const GeoPosition& pos) const { return serverFor(pos); }

std::optional<Region> InfraConfig::regionOf(NodeId server) const {
    for (const EdgeSpec& e : edges)
        if (e.id == server) return e.region;
    return std::nullopt;
}

const DirectoryEntry* InfraConfig::find(ObjectId id) const {
    for (const DirectoryEntry& d : catalog)
        if (d.id == id) return &d;
    return nullptr;
}

InfraConfig InfraConfig::build(const std::vector<ObjectPlacement>& placements,
                               const std::vector<Route>& routes, const ProtocolConfig& cfg,
                               uint32_t gridRows, uint32_t gridCols) {
    InfraConfig infra;
    for (const ObjectPlacement& p : placements)
        infra.catalog.push_back({p.id, p.pos, p.kind});
    infra.directorySlack = cfg.interest_radius + cfg.max_distance + maxHopMeters(routes);

    if (gridRows == 0 || gridCols == 0) return infra;

    double latMin = 90.0, latMax = -90.0, lonMin = 180.0, lonMax = -180.0;
    auto grow = [&](const GeoPosition& g) {
        latMin = std::min(latMin, g.lat);
        latMax = std::max(latMax, g.lat);
        lonMin = std::min(lonMin, g.lon);
        lonMax = std::max(lonMax, g.lon);
    };
    for (const ObjectPlacement& p : placements) grow(p.pos);
    for (const Route& r : routes)
        for (const Waypoint& w : r.waypoints) grow(w.pos);
    // A hair of margin so boundary points sit strictly inside the grid.
    double dLat = (latMax - latMin) * 1e-9 + 1e-12;
    double dLon = (lonMax - lonMin) * 1e-9 + 1e-12;
    latMin -= dLat, latMax += dLat, lonMin -= dLon, lonMax += dLon;

    double latStep = (latMax - latMin) / gridRows;
    double lonStep = (lonMax - lonMin) / gridCols;
    uint64_t nextId = infra.cloudId.value + 1;
    for (uint32_t r = 0; r < gridRows; ++r) {
        for (uint32_t c = 0; c < gridCols; ++c) {
            Region cell{latMin + r * latStep, latMin + (r + 1) * latStep,
                        lonMin + c * lonStep, lonMin + (c + 1) * lonStep};
            bool occupied = false;
            for (const ObjectPlacement& p : placements)
                if (cell.contains(p.pos)) {
                    occupied = true;
                    break;
                }
            if (occupied) infra.edges.push_back({NodeId{nextId++}, cell});
        }
    }
    return infra;
}

GeoObject* ClientStore::get(ObjectId id) {
    auto it = objects_.find(id);
    return it == objects_.end() ? nullptr : &it->second;
}

const GeoObject* ClientStore::get(ObjectId id) const {
    auto it = objects_.find(id);
    return it == objects_.end() ? nullptr : &it->second;
}

GeoObject& ClientStore::adopt(const DirectoryEntry& entry, const CrdtPayload& state) {
    auto it = objects_.find(entry.id);
    if (it == objects_.end()) {
        GeoObject obj;
        obj.id = entry.id;
        obj.pos = entry.pos;
        obj.kind = entry.kind;
        obj.state = CrdtPayload::make(entry.kind);
        it = objects_.emplace(entry.id, std::move(obj)).first;
    }
    it->second.state.join(state);
    if (entry.kind == CrdtKind::Counter) {
        auto r = retainedCounter_.find(entry.id);
        if (r != retainedCounter_.end()) {
            CrdtPayload slice = CrdtPayload::make(CrdtKind::Counter);
            slice.counter() = r->second;
            it->second.state.join(slice);
        }
    } else if (entry.kind == CrdtKind::Map) {
        auto r = retainedSeq_.find(entry.id);
        if (r != retainedSeq_.end())
            it->second.state.map().ensureReplicaFloor(self_, r->second);
    }
    return it->second;
}

CrdtPayload ClientStore::increment(ObjectId id, int64_t amount) {
    GeoObject* obj = get(id);
    if (!obj) throw ProtocolError("increment on object not in store");
    CrdtPayload delta = CrdtPayload::make(CrdtKind::Counter);
    if (amount >= 0)
        delta.counter() = obj->state.counter().increment(self_, static_cast<uint64_t>(amount));
    else
        delta.counter() = obj->state.counter().decrement(self_, static_cast<uint64_t>(-amount));
    return delta;
}

CrdtPayload ClientStore::put(ObjectId id, const std::string& key, int64_t stamp,
                             const std::string& value) {
    GeoObject* obj = get(id);
    if (!obj) throw ProtocolError("put on object not in store");
    CrdtPayload delta = CrdtPayload::make(CrdtKind::Map);
    delta.map() = obj->state.map().put(self_, key, stamp, value);
    return delta;
}

bool ClientStore::applyRemote(ObjectId id, const CrdtPayload& delta) {
    GeoObject* obj = get(id);
    if (!obj) throw ProtocolError("applyRemote on object not in store");
    return obj->state.join(delta);
}

void ClientStore::evict(ObjectId id) {
    auto it = objects_.find(id);
    if (it == objects_.end()) return;
    if (it->second.kind == CrdtKind::Counter) {
        PnCounter own = it->second.state.counter().ownSlice(self_);
        if (own.value() != 0 || !own.positive().empty() || !own.negative().empty())
            retainedCounter_[id] = own;
    } else if (it->second.kind == CrdtKind::Map) {
        uint64_t seq = it->second.state.map().replicaSeq(self_);
        if (seq > 0) retainedSeq_[id] = seq;
    }
    objects_.erase(it);
}

std::set<ObjectId> ClientStore::interestSet(const GeoPosition& myPos,
                                            const std::vector<DirectoryEntry>& directory,
                                            double radius) const {
    std::set<ObjectId> out;
    for (const DirectoryEntry& d : directory)
        if (within(myPos, d.pos, radius)) out.insert(d.id);
    return out;
}

}  // namespace geoloc
