#include <doctest.h>

#include <algorithm>
#include <vector>

#include "crdt_gen.hpp"
#include "geoloc/crdt.hpp"
#include "geoloc/rng.hpp"

using namespace geoloc;
using crdtgen::randomPayload;

TEST_CASE("counter basics") {
    PnCounter c;
    CHECK(c.value() == 0);
    c.increment(NodeId{1}, 1);
    CHECK(c.value() == 1);
    c.decrement(NodeId{2}, 3);
    CHECK(c.value() == -2);
    c.increment(NodeId{1}, 4);
    CHECK(c.value() == 2);
}

TEST_CASE("counter increment delta carries only the touched entry") {
    PnCounter c;
    c.increment(NodeId{1}, 2);
    c.increment(NodeId{2}, 5);
    const PnCounter d = c.increment(NodeId{1}, 1);
    CHECK(d.positive().size() == 1);
    CHECK(d.positive().at(NodeId{1}) == 3);
    CHECK(d.negative().empty());
}

TEST_CASE("five replicas each increment once, all merge orders agree") {
    std::vector<PnCounter> contributions;
    for (uint64_t r = 1; r <= 5; ++r) {
        PnCounter c;
        c.increment(NodeId{r}, 1);
        contributions.push_back(c);
    }
    std::vector<size_t> order = {0, 1, 2, 3, 4};
    do {
        PnCounter acc;
        for (size_t i : order) acc.join(contributions[i]);
        CHECK(acc.value() == 5);
    } while (std::next_permutation(order.begin(), order.end()));
}

TEST_CASE("counter delta applied to pre-state reproduces post-state") {
    SplitMix64 rng(11);
    for (int i = 0; i < 500; ++i) {
        PnCounter c = crdtgen::randomCounter(rng);
        PnCounter pre = c;
        const NodeId r{1 + rng.nextBounded(5)};
        const uint64_t n = 1 + rng.nextBounded(3);
        PnCounter delta =
            rng.nextBounded(2) == 0 ? c.increment(r, n) : c.decrement(r, n);
        pre.join(delta);
        CHECK(pre == c);
    }
}

TEST_CASE("lww register keeps the (stamp, writer)-maximal write") {
    LwwRegister a(5, NodeId{1}, "v1");
    LwwRegister b(9, NodeId{2}, "v2");
    LwwRegister m = a;
    m.join(b);
    CHECK(m.value() == "v2");
    m = b;
    m.join(a);
    CHECK(m.value() == "v2");

    LwwRegister t1(7, NodeId{1}, "low");
    LwwRegister t2(7, NodeId{3}, "high");
    LwwRegister t = t1;
    t.join(t2);
    CHECK(t.value() == "high");
    t = t2;
    CHECK(!t.join(t1));
    CHECK(t.value() == "high");
}

TEST_CASE("ormap put, lookup, erase, add-wins") {
    OrMap a, b;
    a.put(NodeId{1}, "k", 5, "v1");
    CHECK(a.lookup("k") == "v1");

    SUBCASE("lww between two writers") {
        b.put(NodeId{2}, "k", 9, "v2");
        a.join(b);
        CHECK(a.lookup("k") == "v2");
    }
    SUBCASE("observed remove: only seen writes die") {
        b.join(a);
        b.erase(NodeId{2}, "k");
        CHECK(!b.lookup("k").has_value());
        OrMap c = a;
        c.join(b);
        CHECK(!c.lookup("k").has_value());
    }
    SUBCASE("add wins over concurrent remove") {
        b.join(a);
        OrMap removeDelta = b.erase(NodeId{2}, "k");
        a.put(NodeId{1}, "k", 7, "fresh");
        a.join(removeDelta);
        CHECK(a.lookup("k") == "fresh");
    }
    SUBCASE("removed key reappears only via a later add") {
        b.join(a);
        b.erase(NodeId{2}, "k");
        b.join(a);
        CHECK(!b.lookup("k").has_value());
        b.put(NodeId{2}, "k", 11, "again");
        CHECK(b.lookup("k") == "again");
    }
    SUBCASE("concurrent puts to distinct keys both survive") {
        b.put(NodeId{2}, "other", 6, "vo");
        a.join(b);
        CHECK(a.lookup("k") == "v1");
        CHECK(a.lookup("other") == "vo");
        CHECK(a.size() == 2);
    }
}

TEST_CASE("ormap delta shipped out of order still converges") {
    OrMap writer;
    OrMap d1 = writer.put(NodeId{1}, "k", 1, "first");
    OrMap d2 = writer.put(NodeId{1}, "k", 2, "second");

    OrMap late;
    late.join(d2);
    CHECK(late.lookup("k") == "second");
    late.join(d1);
    CHECK(late.lookup("k") == "second");
    CHECK(late == writer);
}

TEST_CASE("merge properties on randomized instances") {
    SplitMix64 rng(20260801);
    const CrdtKind kinds[] = {CrdtKind::Counter, CrdtKind::Register, CrdtKind::Map};
    for (CrdtKind kind : kinds) {
        for (int i = 0; i < 400; ++i) {
            CrdtPayload a = randomPayload(rng, kind);
            CrdtPayload b = randomPayload(rng, kind);
            CrdtPayload c = randomPayload(rng, kind);

            CrdtPayload idem = a;
            idem.join(a);
            CHECK(idem == a);

            CrdtPayload ab = a;
            ab.join(b);
            CrdtPayload ba = b;
            ba.join(a);
            CHECK(ab == ba);

            CrdtPayload abc1 = ab;
            abc1.join(c);
            CrdtPayload bc = b;
            bc.join(c);
            CrdtPayload abc2 = a;
            abc2.join(bc);
            CHECK(abc1 == abc2);
        }
    }
}

TEST_CASE("join across kinds is a protocol error") {
    CrdtPayload c = CrdtPayload::make(CrdtKind::Counter);
    CrdtPayload m = CrdtPayload::make(CrdtKind::Map);
    CHECK_THROWS_AS(c.join(m), ProtocolError);
    CHECK_THROWS_AS(m.join(c), ProtocolError);
    CHECK_THROWS_AS(c.map(), ProtocolError);
}

TEST_CASE("delta sufficiency: replaying one replica's deltas rebuilds its contribution") {
    SplitMix64 rng(321);
    for (int trial = 0; trial < 300; ++trial) {
        OrMap replica;
        std::vector<OrMap> deltas;
        const size_t ops = 1 + rng.nextBounded(10);
        for (size_t i = 0; i < ops; ++i) {
            const std::string key = "k" + std::to_string(rng.nextBounded(3));
            if (rng.nextBounded(4) == 0)
                deltas.push_back(replica.erase(NodeId{1}, key));
            else
                deltas.push_back(replica.put(NodeId{1}, key, static_cast<int64_t>(i),
                                             crdtgen::randomString(rng)));
        }
        OrMap rebuilt;
        for (const OrMap& d : deltas) rebuilt.join(d);
        CHECK(rebuilt == replica);
    }
}

TEST_CASE("convergence under random delivery interleavings") {
    SplitMix64 rng(555);
    for (int trial = 0; trial < 200; ++trial) {
        const size_t n = 3 + rng.nextBounded(3);
        std::vector<OrMap> replicas(n);
        std::vector<OrMap> deltas;
        for (size_t i = 0; i < 12; ++i) {
            const size_t who = rng.nextBounded(n);
            const std::string key = "k" + std::to_string(rng.nextBounded(4));
            if (rng.nextBounded(5) == 0)
                deltas.push_back(replicas[who].erase(NodeId{1 + who}, key));
            else
                deltas.push_back(replicas[who].put(NodeId{1 + who}, key,
                                                   static_cast<int64_t>(i),
                                                   crdtgen::randomString(rng)));
        }
        // every replica receives every delta at least once, in its own order,
        // with random duplicates
        for (size_t who = 0; who < n; ++who) {
            std::vector<size_t> order(deltas.size());
            for (size_t i = 0; i < order.size(); ++i) order[i] = i;
            for (size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[rng.nextBounded(i)]);
            for (size_t i : order) {
                replicas[who].join(deltas[i]);
                if (rng.nextBounded(4) == 0) replicas[who].join(deltas[i]);
            }
        }
        for (size_t who = 1; who < n; ++who) CHECK(replicas[who] == replicas[0]);
    }
}

TEST_CASE("canonical encoding round trips and equal states encode equally") {
    SplitMix64 rng(777);
    const CrdtKind kinds[] = {CrdtKind::Counter, CrdtKind::Register, CrdtKind::Map};
    for (CrdtKind kind : kinds) {
        for (int i = 0; i < 200; ++i) {
            const CrdtPayload p = randomPayload(rng, kind);
            const auto bytes = p.encode();
            const CrdtPayload q = CrdtPayload::decode(bytes);
            CHECK(q == p);
            CHECK(q.encode() == bytes);
            CHECK(p.serializedSize() == bytes.size());
        }
    }
}

TEST_CASE("counter encoding layout: header plus sixteen bytes per entry") {
    PnCounter c;
    CHECK(CrdtPayload(c).serializedSize() == 11);  // 3 magic + 2 empty tallies
    c.increment(NodeId{1}, 1);
    CHECK(CrdtPayload(c).serializedSize() == 11 + 16);
    c.increment(NodeId{2}, 1);
    c.decrement(NodeId{3}, 1);
    CHECK(CrdtPayload(c).serializedSize() == 11 + 3 * 16);
}

TEST_CASE("review-sized map delta has bounded overhead") {
    OrMap m;
    const std::string review(500, 'r');
    OrMap delta = m.put(NodeId{1}, "review/1/0", 1000, review);
    const size_t sz = CrdtPayload(delta).serializedSize();
    CHECK(sz >= 500);
    CHECK(sz < 500 + 128);
}

TEST_CASE("full state is at least as large as any single-entry delta of it") {
    OrMap m;
    std::vector<OrMap> deltas;
    for (int i = 0; i < 6; ++i)
        deltas.push_back(m.put(NodeId{1 + static_cast<uint64_t>(i % 2)},
                               "k" + std::to_string(i),
                               static_cast<int64_t>(i), "some value here"));
    const size_t full = CrdtPayload(m).serializedSize();
    for (const OrMap& d : deltas)
        CHECK(full >= CrdtPayload(d).serializedSize());
}

TEST_CASE("malformed payloads are rejected") {
    CHECK_THROWS_AS(CrdtPayload::decode({}), ProtocolError);
    CHECK_THROWS_AS(CrdtPayload::decode({0x00, 0x01, 0x01}), ProtocolError);
    PnCounter c;
    c.increment(NodeId{1}, 1);
    auto bytes = CrdtPayload(c).encode();
    bytes.pop_back();
    CHECK_THROWS_AS(CrdtPayload::decode(bytes), ProtocolError);
    bytes = CrdtPayload(c).encode();
    bytes.push_back(0);
    CHECK_THROWS_AS(CrdtPayload::decode(bytes), ProtocolError);
}

TEST_CASE("json debug dump is stable") {
    PnCounter c;
    c.increment(NodeId{1}, 2);
    c.decrement(NodeId{2}, 1);
    const auto j = CrdtPayload(c).toJson();
    CHECK(j["kind"] == "counter");
    CHECK(j["value"] == 1);
    CHECK(j["pos"]["1"] == 2);
    CHECK(j["neg"]["2"] == 1);
}
