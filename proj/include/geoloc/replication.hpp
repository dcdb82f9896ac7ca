#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "geoloc/config.hpp"
#include "geoloc/crdt.hpp"
#include "geoloc/geo.hpp"
#include "geoloc/traces.hpp"
#include "geoloc/wire.hpp"

namespace geoloc {

struct GeoObject {
    ObjectId id;
    GeoPosition pos;
    CrdtKind kind = CrdtKind::Counter;
    CrdtPayload state;
};

struct Region {
    double latMin = 0.0, latMax = 0.0, lonMin = 0.0, lonMax = 0.0;
    bool contains(const GeoPosition& p) const {
        return p.lat >= latMin && p.lat <= latMax && p.lon >= lonMin && p.lon <= lonMax;
    }
};

struct EdgeSpec {
    NodeId id;
    Region region;
};

// Static deployment shared by every node: the cloud, the edge grid, the
// object catalog, and the directory slack radius used for slices.
struct InfraConfig {
    NodeId cloudId{10000};
    std::vector<EdgeSpec> edges;
    std::vector<DirectoryEntry> catalog;
    double directorySlack = 0.0;

    // Server a client at pos reports to: covering edge, else cloud.
    NodeId serverFor(const GeoPosition& pos) const;
    // Server that stores an object placed at pos (same rule).
    NodeId homeServer(const GeoPosition& pos) const;
    std::optional<Region> regionOf(NodeId server) const;
    const DirectoryEntry* find(ObjectId id) const;

    // Grid of rows x cols cells over the bounding box of all placements and
    // routes; only cells containing at least one object get an edge. Zero
    // rows or cols yields a cloud-only deployment.
    static InfraConfig build(const std::vector<ObjectPlacement>& placements,
                             const std::vector<Route>& routes, const ProtocolConfig& cfg,
                             uint32_t gridRows, uint32_t gridCols);
};

// Client-side object cache. Keeps per-object retained slices across
// evictions so a later re-fetch from a stale copy can never roll back this
// replica's own contributions or reuse a dot.
class ClientStore {
  public:
    explicit ClientStore(NodeId self) : self_(self) {}

    bool has(ObjectId id) const { return objects_.count(id) != 0; }
    GeoObject* get(ObjectId id);
    const GeoObject* get(ObjectId id) const;
    const std::map<ObjectId, GeoObject>& objects() const { return objects_; }

    // Creates the local replica from a fetched state (or from a first delta
    // when the fetch loses the race), then folds the retained own slice in.
    GeoObject& adopt(const DirectoryEntry& entry, const CrdtPayload& state);

    CrdtPayload increment(ObjectId id, int64_t amount);
    CrdtPayload put(ObjectId id, const std::string& key, int64_t stamp,
                    const std::string& value);
    // Join of a remote delta; returns true when state changed.
    bool applyRemote(ObjectId id, const CrdtPayload& delta);

    void evict(ObjectId id);

    std::set<ObjectId> interestSet(const GeoPosition& myPos,
                                   const std::vector<DirectoryEntry>& directory,
                                   double radius) const;

  private:
    NodeId self_;
    std::map<ObjectId, GeoObject> objects_;
    std::map<ObjectId, PnCounter> retainedCounter_;
    std::map<ObjectId, uint64_t> retainedSeq_;
};

}  // namespace geoloc
