#include "geoloc/crdt.hpp"

#include <algorithm>

namespace geoloc {

PnCounter PnCounter::increment(NodeId replica, uint64_t n) {
    PnCounter delta;
    if (n == 0) return delta;
    pos_[replica] += n;
    delta.pos_[replica] = pos_[replica];
    return delta;
}

PnCounter PnCounter::decrement(NodeId replica, uint64_t n) {
    PnCounter delta;
    if (n == 0) return delta;
    neg_[replica] += n;
    delta.neg_[replica] = neg_[replica];
    return delta;
}

int64_t PnCounter::value() const {
    int64_t v = 0;
    for (const auto& [r, n] : pos_) v += static_cast<int64_t>(n);
    for (const auto& [r, n] : neg_) v -= static_cast<int64_t>(n);
    return v;
}

PnCounter PnCounter::ownSlice(NodeId replica) const {
    PnCounter out;
    if (auto it = pos_.find(replica); it != pos_.end() && it->second > 0)
        out.pos_.emplace(replica, it->second);
    if (auto it = neg_.find(replica); it != neg_.end() && it->second > 0)
        out.neg_.emplace(replica, it->second);
    return out;
}

bool PnCounter::join(const PnCounter& other) {
    bool changed = false;
    auto mergeInto = [&changed](std::map<NodeId, uint64_t>& dst,
                                const std::map<NodeId, uint64_t>& src) {
        for (const auto& [r, n] : src) {
            if (n == 0) continue;
            auto it = dst.find(r);
            if (it == dst.end()) {
                dst.emplace(r, n);
                changed = true;
            } else if (n > it->second) {
                it->second = n;
                changed = true;
            }
        }
    };
    mergeInto(pos_, other.pos_);
    mergeInto(neg_, other.neg_);
    return changed;
}

void LwwRegister::set(int64_t stamp, NodeId writer, std::string value) {
    stamp_ = stamp;
    writer_ = writer;
    value_ = std::move(value);
}

namespace {

bool regWins(const LwwRegister& a, const LwwRegister& b) {
    if (a.stamp() != b.stamp()) return a.stamp() > b.stamp();
    if (a.writer() != b.writer()) return a.writer() > b.writer();
    return a.value() > b.value();
}

}  // namespace

bool LwwRegister::join(const LwwRegister& other) {
    if (!regWins(other, *this)) return false;
    stamp_ = other.stamp_;
    writer_ = other.writer_;
    value_ = other.value_;
    return true;
}

bool DotContext::contains(const Dot& d) const {
    auto it = vv_.find(d.replica);
    if (it != vv_.end() && d.seq <= it->second) return true;
    return cloud_.count(d) != 0;
}

Dot DotContext::nextDot(NodeId replica) {
    uint64_t next = ++vv_[replica];
    return Dot{replica, next};
}

void DotContext::add(const Dot& d) {
    if (contains(d)) return;
    cloud_.insert(d);
    compact();
}

void DotContext::join(const DotContext& other) {
    for (const auto& [r, s] : other.vv_) {
        if (s == 0) continue;
        auto it = vv_.find(r);
        if (it == vv_.end())
            vv_.emplace(r, s);
        else if (s > it->second)
            it->second = s;
    }
    for (const Dot& d : other.cloud_) cloud_.insert(d);
    compact();
}

void DotContext::compact() {
    for (auto it = cloud_.begin(); it != cloud_.end();) {
        uint64_t have = 0;
        auto v = vv_.find(it->replica);
        if (v != vv_.end()) have = v->second;
        if (it->seq <= have) {
            it = cloud_.erase(it);
        } else if (it->seq == have + 1) {
            vv_[it->replica] = it->seq;
            it = cloud_.erase(it);
        } else {
            ++it;
        }
    }
}

OrMap OrMap::put(NodeId replica, const std::string& key, int64_t stamp, std::string value) {
    OrMap delta;
    const Dot nd{replica, replicaSeq(replica) + 1};
    ctx_.add(nd);
    auto& slot = entries_[key];
    for (const auto& [d, reg] : slot) delta.ctx_.add(d);
    slot.clear();
    LwwRegister reg(stamp, replica, std::move(value));
    slot.emplace(nd, reg);
    delta.ctx_.add(nd);
    delta.entries_[key].emplace(nd, std::move(reg));
    return delta;
}

OrMap OrMap::erase(NodeId replica, const std::string& key) {
    (void)replica;
    OrMap delta;
    auto it = entries_.find(key);
    if (it == entries_.end()) return delta;
    for (const auto& [d, reg] : it->second) delta.ctx_.add(d);
    entries_.erase(it);
    return delta;
}

bool OrMap::join(const OrMap& other) {
    const OrMap before = *this;
    std::set<std::string> keys;
    for (const auto& [k, slot] : entries_) keys.insert(k);
    for (const auto& [k, slot] : other.entries_) keys.insert(k);
    for (const std::string& k : keys) {
        const std::map<Dot, LwwRegister>* mine = nullptr;
        const std::map<Dot, LwwRegister>* theirs = nullptr;
        if (auto it = entries_.find(k); it != entries_.end()) mine = &it->second;
        if (auto it = other.entries_.find(k); it != other.entries_.end())
            theirs = &it->second;
        std::map<Dot, LwwRegister> next;
        if (mine) {
            for (const auto& [d, reg] : *mine) {
                const bool bothHave = theirs && theirs->count(d) != 0;
                if (bothHave || !other.ctx_.contains(d)) {
                    LwwRegister merged = reg;
                    if (bothHave) merged.join(theirs->at(d));
                    next.emplace(d, std::move(merged));
                }
            }
        }
        if (theirs) {
            for (const auto& [d, reg] : *theirs) {
                if (next.count(d) != 0) continue;
                if (mine && mine->count(d) != 0) continue;
                if (!ctx_.contains(d)) next.emplace(d, reg);
            }
        }
        if (next.empty())
            entries_.erase(k);
        else
            entries_[k] = std::move(next);
    }
    ctx_.join(other.ctx_);
    return !(*this == before);
}

uint64_t OrMap::replicaSeq(NodeId replica) const {
    uint64_t top = floorOf(replica);
    if (auto it = ctx_.versionVector().find(replica); it != ctx_.versionVector().end())
        top = std::max(top, it->second);
    for (const Dot& d : ctx_.cloud())
        if (d.replica == replica && d.seq > top) top = d.seq;
    return top;
}

uint64_t OrMap::floorOf(NodeId replica) const {
    auto it = seqFloor_.find(replica);
    return it == seqFloor_.end() ? 0 : it->second;
}

void OrMap::ensureReplicaFloor(NodeId replica, uint64_t seqFloor) {
    if (seqFloor > floorOf(replica)) seqFloor_[replica] = seqFloor;
}

bool OrMap::operator==(const OrMap& other) const {
    return ctx_ == other.ctx_ && entries_ == other.entries_;
}

std::optional<std::string> OrMap::lookup(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end() || it->second.empty()) return std::nullopt;
    const LwwRegister* best = nullptr;
    for (const auto& [d, reg] : it->second)
        if (best == nullptr || regWins(reg, *best)) best = &reg;
    return best->value();
}

std::map<std::string, std::string> OrMap::snapshot() const {
    std::map<std::string, std::string> out;
    for (const auto& [k, slot] : entries_)
        if (auto v = lookup(k)) out.emplace(k, *v);
    return out;
}

const char* kindName(CrdtKind k) {
    switch (k) {
        case CrdtKind::Counter: return "counter";
        case CrdtKind::Register: return "register";
        case CrdtKind::Map: return "map";
    }
    return "unknown";
}

CrdtPayload CrdtPayload::make(CrdtKind kind) {
    switch (kind) {
        case CrdtKind::Counter: return CrdtPayload(PnCounter{});
        case CrdtKind::Register: return CrdtPayload(LwwRegister{});
        case CrdtKind::Map: return CrdtPayload(OrMap{});
    }
    throw ProtocolError("unknown CRDT kind");
}

CrdtKind CrdtPayload::kind() const {
    switch (state_.index()) {
        case 0: return CrdtKind::Counter;
        case 1: return CrdtKind::Register;
        default: return CrdtKind::Map;
    }
}

bool CrdtPayload::join(const CrdtPayload& other) {
    if (state_.index() != other.state_.index())
        throw ProtocolError(std::string("cannot join ") + kindName(other.kind()) +
                            " delta into " + kindName(kind()) + " state");
    switch (state_.index()) {
        case 0: return std::get<PnCounter>(state_).join(std::get<PnCounter>(other.state_));
        case 1:
            return std::get<LwwRegister>(state_).join(std::get<LwwRegister>(other.state_));
        default: return std::get<OrMap>(state_).join(std::get<OrMap>(other.state_));
    }
}

PnCounter& CrdtPayload::counter() {
    if (auto* p = std::get_if<PnCounter>(&state_)) return *p;
    throw ProtocolError(std::string("payload is a ") + kindName(kind()) + ", not a counter");
}

LwwRegister& CrdtPayload::reg() {
    if (auto* p = std::get_if<LwwRegister>(&state_)) return *p;
    throw ProtocolError(std::string("payload is a ") + kindName(kind()) + ", not a register");
}

OrMap& CrdtPayload::map() {
    if (auto* p = std::get_if<OrMap>(&state_)) return *p;
    throw ProtocolError(std::string("payload is a ") + kindName(kind()) + ", not a map");
}

const PnCounter& CrdtPayload::counter() const {
    return const_cast<CrdtPayload*>(this)->counter();
}
const LwwRegister& CrdtPayload::reg() const {
    return const_cast<CrdtPayload*>(this)->reg();
}
const OrMap& CrdtPayload::map() const { return const_cast<CrdtPayload*>(this)->map(); }

namespace {

constexpr uint8_t kMagic = 0x47;
constexpr uint8_t kVersion = 1;

struct ByteWriter {
    std::vector<uint8_t> out;
    void u8(uint8_t v) { out.push_back(v); }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }
    void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }
    void str(const std::string& s) {
        u32(static_cast<uint32_t>(s.size()));
        out.insert(out.end(), s.begin(), s.end());
    }
};

struct ByteReader {
    const std::vector<uint8_t>& in;
    size_t pos = 0;
    void need(size_t n) const {
        if (pos + n > in.size()) throw ProtocolError("truncated CRDT payload");
    }
    uint8_t u8() {
        need(1);
        return in[pos++];
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(in[pos++]) << (8 * i);
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(in[pos++]) << (8 * i);
        return v;
    }
    int64_t i64() { return static_cast<int64_t>(u64()); }
    std::string str() {
        const uint32_t n = u32();
        need(n);
        std::string s(in.begin() + static_cast<ptrdiff_t>(pos),
                      in.begin() + static_cast<ptrdiff_t>(pos + n));
        pos += n;
        return s;
    }
};

void encodeTallies(ByteWriter& w, const std::map<NodeId, uint64_t>& m) {
    w.u32(static_cast<uint32_t>(m.size()));
    for (const auto& [r, n] : m) {
        w.u64(r.value);
        w.u64(n);
    }
}

std::map<NodeId, uint64_t> decodeTallies(ByteReader& r) {
    std::map<NodeId, uint64_t> m;
    const uint32_t count = r.u32();
    for (uint32_t i = 0; i < count; ++i) {
        const uint64_t id = r.u64();
        const uint64_t n = r.u64();
        if (!m.emplace(NodeId{id}, n).second)
            throw ProtocolError("duplicate replica entry in counter payload");
    }
    return m;
}

void encodeRegisterBody(ByteWriter& w, const LwwRegister& reg) {
    w.i64(reg.stamp());
    w.u64(reg.writer().value);
    w.str(reg.value());
}

LwwRegister decodeRegisterBody(ByteReader& r) {
    const int64_t stamp = r.i64();
    const NodeId writer{r.u64()};
    std::string value = r.str();
    return LwwRegister(stamp, writer, std::move(value));
}

}  // namespace

struct CrdtCodec {
    static void encodeCounter(ByteWriter& w, const PnCounter& c) {
        encodeTallies(w, c.pos_);
        encodeTallies(w, c.neg_);
    }
    static PnCounter decodeCounter(ByteReader& r) {
        PnCounter c;
        c.pos_ = decodeTallies(r);
        c.neg_ = decodeTallies(r);
        return c;
    }
    static void encodeCtx(ByteWriter& w, const DotContext& c) {
        w.u32(static_cast<uint32_t>(c.vv_.size()));
        for (const auto& [rep, seq] : c.vv_) {
            w.u64(rep.value);
            w.u64(seq);
        }
        w.u32(static_cast<uint32_t>(c.cloud_.size()));
        for (const Dot& d : c.cloud_) {
            w.u64(d.replica.value);
            w.u64(d.seq);
        }
    }
    static DotContext decodeCtx(ByteReader& r) {
        DotContext c;
        const uint32_t nvv = r.u32();
        for (uint32_t i = 0; i < nvv; ++i) {
            const uint64_t rep = r.u64();
            const uint64_t seq = r.u64();
            if (!c.vv_.emplace(NodeId{rep}, seq).second)
                throw ProtocolError("duplicate version vector entry");
        }
        const uint32_t ncloud = r.u32();
        for (uint32_t i = 0; i < ncloud; ++i) {
            const NodeId rep{r.u64()};
            const uint64_t seq = r.u64();
            if (!c.cloud_.insert(Dot{rep, seq}).second)
                throw ProtocolError("duplicate cloud dot");
        }
        return c;
    }
    static void encodeMap(ByteWriter& w, const OrMap& m) {
        encodeCtx(w, m.ctx_);
        w.u32(static_cast<uint32_t>(m.entries_.size()));
        for (const auto& [key, slot] : m.entries_) {
            w.str(key);
            w.u32(static_cast<uint32_t>(slot.size()));
            for (const auto& [d, reg] : slot) {
                w.u64(d.replica.value);
                w.u64(d.seq);
                encodeRegisterBody(w, reg);
            }
        }
    }
    static OrMap decodeMap(ByteReader& r) {
        OrMap m;
        m.ctx_ = decodeCtx(r);
        const uint32_t nkeys = r.u32();
        for (uint32_t i = 0; i < nkeys; ++i) {
            std::string key = r.str();
            auto [slotIt, fresh] = m.entries_.emplace(std::move(key),
                                                      std::map<Dot, LwwRegister>{});
            if (!fresh) throw ProtocolError("duplicate key in map payload");
            const uint32_t ndots = r.u32();
            for (uint32_t j = 0; j < ndots; ++j) {
                const NodeId rep{r.u64()};
                const uint64_t seq = r.u64();
                LwwRegister reg = decodeRegisterBody(r);
                if (!slotIt->second.emplace(Dot{rep, seq}, std::move(reg)).second)
                    throw ProtocolError("duplicate dot in map payload");
            }
        }
        return m;
    }
};

std::vector<uint8_t> CrdtPayload::encode() const {
    ByteWriter w;
    w.u8(kMagic);
    w.u8(kVersion);
    w.u8(static_cast<uint8_t>(kind()));
    switch (state_.index()) {
        case 0: CrdtCodec::encodeCounter(w, std::get<PnCounter>(state_)); break;
        case 1: encodeRegisterBody(w, std::get<LwwRegister>(state_)); break;
        default: CrdtCodec::encodeMap(w, std::get<OrMap>(state_)); break;
    }
    return std::move(w.out);
}

CrdtPayload CrdtPayload::decode(const std::vector<uint8_t>& bytes) {
    ByteReader r{bytes};
    if (r.u8() != kMagic) throw ProtocolError("bad CRDT payload magic");
    if (r.u8() != kVersion) throw ProtocolError("unsupported CRDT payload version");
    const uint8_t kind = r.u8();
    CrdtPayload out;
    switch (kind) {
        case static_cast<uint8_t>(CrdtKind::Counter):
            out = CrdtPayload(CrdtCodec::decodeCounter(r));
            break;
        case static_cast<uint8_t>(CrdtKind::Register):
            out = CrdtPayload(decodeRegisterBody(r));
            break;
        case static_cast<uint8_t>(CrdtKind::Map):
            out = CrdtPayload(CrdtCodec::decodeMap(r));
            break;
        default: throw ProtocolError("unknown CRDT kind byte");
    }
    if (r.pos != bytes.size()) throw ProtocolError("trailing bytes after CRDT payload");
    return out;
}

size_t CrdtPayload::serializedSize() const { return encode().size(); }

nlohmann::json CrdtPayload::toJson() const {
    nlohmann::json j;
    j["kind"] = kindName(kind());
    switch (state_.index()) {
        case 0: {
            const auto& c = std::get<PnCounter>(state_);
            j["value"] = c.value();
            nlohmann::json pos = nlohmann::json::object();
            nlohmann::json neg = nlohmann::json::object();
            for (const auto& [r, n] : c.positive()) pos[std::to_string(r.value)] = n;
            for (const auto& [r, n] : c.negative()) neg[std::to_string(r.value)] = n;
            j["pos"] = pos;
            j["neg"] = neg;
            break;
        }
        case 1: {
            const auto& reg = std::get<LwwRegister>(state_);
            j["stamp"] = reg.stamp();
            j["writer"] = reg.writer().value;
            j["value"] = reg.value();
            break;
        }
        default: {
            const auto& m = std::get<OrMap>(state_);
            nlohmann::json entries = nlohmann::json::object();
            for (const auto& [k, v] : m.snapshot()) entries[k] = v;
            j["entries"] = entries;
            nlohmann::json vv = nlohmann::json::object();
            for (const auto& [r, s] : m.context().versionVector())
                vv[std::to_string(r.value)] = s;
            j["vv"] = vv;
            break;
        }
    }
    return j;
}

}  // namespace geoloc
