#include <dmsf/core.hpp>
#include <dmsf/dyntree.hpp>
#include <dmsf/min_queue.hpp>
#include <dmsf/oracle.hpp>

#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

using namespace dmsf;

TEST_CASE("normalize_weights ranks by sorted position")
{
    const std::vector<RawEdge> e{{0, 1, 5.0}, {1, 2, 2.0}, {0, 2, 9.0}};
    const auto k = normalize_weights(e);
    REQUIRE(k.size() == 3);
    CHECK(k[0].rank == 1);
    CHECK(k[1].rank == 0);
    CHECK(k[2].rank == 2);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(k[i].cls == EdgeClass::REAL);
        CHECK(k[i].tiebreak == i);
    }
}

TEST_CASE("normalize_weights breaks ties by id")
{
    const std::vector<RawEdge> e{{0, 1, 3.0}, {1, 2, 3.0}};
    const auto k = normalize_weights(e);
    CHECK(k[0].rank == 0);
    CHECK(k[1].rank == 1);
}

TEST_CASE("normalize_weights matches a comparison sort")
{
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        std::vector<RawEdge> e;
        for (int i = 0; i < 10; ++i) e.push_back({0, 1, static_cast<double>(rng.below(6)) + 0.5 * rng.unit()});
        std::vector<std::size_t> order(e.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return e[a].weight < e[b].weight; });
        const auto k = normalize_weights(e);
        for (std::size_t pos = 0; pos < order.size(); ++pos) CHECK(k[order[pos]].rank == pos);
    }
}

TEST_CASE("key order: class dominates, then rank, then tiebreak")
{
    CHECK(key_less({EdgeClass::SUPER, 0, 7}, {EdgeClass::REAL, 0, 0}));
    CHECK(key_less({EdgeClass::REAL, 3, 1}, {EdgeClass::REAL, 3, 2}));
    CHECK(key_less({EdgeClass::REAL, 100, 0}, WeightKey::absent()));
    CHECK_FALSE(WeightKey::absent().present());
}

TEST_CASE("key order is a strict total order on a 20-edge instance")
{
    std::vector<WeightKey> keys;
    for (std::uint64_t i = 0; i < 20; ++i) keys.push_back({i % 3 ? EdgeClass::REAL : EdgeClass::SUPER, i % 4, i});
    for (const auto& a : keys) {
        CHECK_FALSE(key_less(a, a));
        for (const auto& b : keys) {
            if (&a == &b) continue;
            CHECK(key_less(a, b) != key_less(b, a));
            for (const auto& c : keys)
                if (key_less(a, b) && key_less(b, c)) CHECK(key_less(a, c));
        }
    }
}

TEST_CASE("adjacency lists")
{
    EdgeTable t(4);
    CHECK(t.adjacency(3).empty());
    const EdgeId a = t.add(0, 1, {EdgeClass::REAL, 0, 0});
    const EdgeId b = t.add(1, 2, {EdgeClass::REAL, 1, 1});
    t.add(0, 2, {EdgeClass::REAL, 2, 2});
    auto adj = std::vector<EdgeId>(t.adjacency(1).begin(), t.adjacency(1).end());
    std::sort(adj.begin(), adj.end());
    CHECK(adj == std::vector<EdgeId>{a, b});
    CHECK_THROWS_AS(t.adjacency(4), std::out_of_range);
}

TEST_CASE("adjacency matches the edge table under random updates")
{
    Rng rng(2);
    EdgeTable t(16);
    std::vector<EdgeId> live;
    for (int step = 0; step < 500; ++step) {
        if (live.empty() || rng.chance(0.6)) {
            const auto u = static_cast<VertexId>(rng.below(16));
            const auto v = static_cast<VertexId>((u + 1 + rng.below(15)) % 16);
            live.push_back(t.add(u, v, {EdgeClass::REAL, static_cast<std::uint64_t>(step), 0}));
        } else {
            const auto i = rng.below(live.size());
            t.remove(live[i]);
            live.erase(live.begin() + static_cast<std::ptrdiff_t>(i));
        }
        for (VertexId x = 0; x < 16; ++x) {
            std::multiset<EdgeId> want;
            for (EdgeId e : live)
                if (t[e].endpoints.first == x || t[e].endpoints.second == x) want.insert(e);
            const std::multiset<EdgeId> got(t.adjacency(x).begin(), t.adjacency(x).end());
            REQUIRE(got == want);
        }
    }
    CHECK(t.live_count() == live.size());
}

TEST_CASE("floor_log2")
{
    CHECK(floor_log2(1) == 0);
    CHECK(floor_log2(2) == 1);
    CHECK(floor_log2(3) == 1);
    CHECK(floor_log2(1024) == 10);
}

// --- dynamic forest --------------------------------------------------------------------

TEST_CASE("path_max on a two-edge path")
{
    DynForest f(3);
    f.link(0, 1, {EdgeClass::REAL, 5, 0});
    const auto h = f.link(1, 2, {EdgeClass::REAL, 9, 1});
    CHECK(f.path_max(0, 2) == h);
    CHECK(f.endpoints(h) == std::pair<VertexId, VertexId>{1, 2});
}

TEST_CASE("link, cut, errors")
{
    DynForest f(3);
    const auto h = f.link(0, 1, {EdgeClass::REAL, 1, 0});
    CHECK(f.connected(0, 1));
    CHECK_THROWS_AS(f.link(1, 0, {EdgeClass::REAL, 2, 1}), std::invalid_argument);
    f.cut(h);
    CHECK_FALSE(f.connected(0, 1));
    CHECK_FALSE(f.live(h));
    CHECK_THROWS(f.cut(h));
    CHECK_THROWS(f.path_max(0, 1));
    CHECK_THROWS(f.path_max(2, 2));
}

namespace {

// naive forest: adjacency lists, DFS for each query
struct NaiveForest {
    std::size_t n;
    std::map<std::pair<VertexId, VertexId>, WeightKey> edges;

    std::optional<WeightKey> path_max(VertexId s, VertexId t) const
    {
        std::vector<std::optional<WeightKey>> best(n);
        std::vector<char> seen(n, 0);
        std::vector<VertexId> stack{s};
        seen[s] = 1;
        while (!stack.empty()) {
            const VertexId x = stack.back();
            stack.pop_back();
            for (const auto& [p, k] : edges) {
                VertexId y;
                if (p.first == x) y = p.second;
                else if (p.second == x) y = p.first;
                else continue;
                if (seen[y]) continue;
                seen[y] = 1;
                best[y] = best[x] && *best[x] > k ? *best[x] : k;
                stack.push_back(y);
            }
        }
        if (!seen[t]) return std::nullopt;
        return best[t];
    }
};

} // namespace

TEST_CASE("dynamic forest agrees with a naive forest under random updates")
{
    Rng rng(3);
    const std::size_t n = 32;
    DynForest f(n);
    NaiveForest naive{n, {}};
    std::map<std::pair<VertexId, VertexId>, DynForest::Handle> handles;
    std::uint64_t next = 0;
    for (int step = 0; step < 400; ++step) {
        if (handles.empty() || rng.chance(0.6)) {
            const auto u = static_cast<VertexId>(rng.below(n));
            const auto v = static_cast<VertexId>(rng.below(n));
            if (u == v || naive.path_max(u, v)) continue;
            const WeightKey k{EdgeClass::REAL, rng.below(1000), next++};
            handles[{std::min(u, v), std::max(u, v)}] = f.link(u, v, k);
            naive.edges[{std::min(u, v), std::max(u, v)}] = k;
        } else {
            auto it = handles.begin();
            std::advance(it, static_cast<std::ptrdiff_t>(rng.below(handles.size())));
            f.cut(it->second);
            naive.edges.erase(it->first);
            handles.erase(it);
        }
        for (VertexId u = 0; u < n; ++u)
            for (VertexId v = u + 1; v < n; ++v) {
                const auto want = naive.path_max(u, v);
                REQUIRE(f.connected(u, v) == want.has_value());
                if (want) REQUIRE(f.key(f.path_max(u, v)) == *want);
            }
    }
}

// --- queues ----------------------------------------------------------------------------

TEST_CASE("queues agree with a sorted reference")
{
    for (auto kind : {QueueKind::BINARY_HEAP, QueueKind::BUCKET}) {
        Rng rng(4);
        auto q = make_queue(kind);
        std::map<MinQueue::Element, WeightKey> ref;
        for (int step = 0; step < 3000; ++step) {
            const auto e = static_cast<MinQueue::Element>(rng.below(64));
            const WeightKey k{rng.chance(0.2) ? EdgeClass::SUPER : EdgeClass::REAL, rng.below(20), rng.below(5)};
            const bool present = ref.count(e) != 0;
            switch (rng.below(3)) {
            case 0:
                if (present) CHECK_THROWS(q->insert(e, k));
                else {
                    q->insert(e, k);
                    ref[e] = k;
                }
                break;
            case 1:
                if (present) {
                    q->erase(e);
                    ref.erase(e);
                }
                break;
            default:
                if (present) {
                    q->update(e, k);
                    ref[e] = k;
                }
            }
            REQUIRE(q->size() == ref.size());
            CHECK(q->find(e) == (ref.count(e) ? std::optional<WeightKey>(ref[e]) : std::nullopt));
            if (ref.empty()) {
                CHECK_FALSE(q->peek_min());
                CHECK(q->min_entries().empty());
                continue;
            }
            WeightKey best = WeightKey::absent();
            for (const auto& [x, kk] : ref) best = std::min(best, kk);
            REQUIRE(q->peek_min());
            CHECK(q->peek_min()->key == best);
            const auto mins = q->min_entries();
            const auto tied = std::count_if(ref.begin(), ref.end(), [&](const auto& p) { return p.second == best; });
            CHECK(mins.size() == static_cast<std::size_t>(std::min<long>(tied, 2)));
            for (const auto& m : mins) CHECK(ref.at(m.elem) == best);
        }
    }
}
