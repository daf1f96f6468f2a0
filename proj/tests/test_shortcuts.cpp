#include <dmsf/dec_msf.hpp>
#include <dmsf/oracle.hpp>
#include <dmsf/shortcuts.hpp>

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

using namespace dmsf;

namespace {

std::vector<InputEdge> random_graph(std::size_t n, std::size_t m, Rng& rng)
{
    std::vector<std::pair<VertexId, VertexId>> pairs;
    for (VertexId u = 0; u < n; ++u)
        for (VertexId v = u + 1; v < n; ++v) pairs.emplace_back(u, v);
    rng.shuffle(pairs);
    pairs.resize(std::min(m, pairs.size()));
    std::vector<InputEdge> out;
    for (std::size_t i = 0; i < pairs.size(); ++i) out.push_back({pairs[i].first, pairs[i].second, {EdgeClass::REAL, rng.next() >> 20, i}});
    return out;
}

DecStructure shortcut_structure(std::size_t n, const std::vector<InputEdge>& input, Tuning t = {})
{
    DecOptions o;
    o.mode = SearchMode::SHORTCUT;
    o.tuning = t;
    return DecStructure(n, input, o);
}

bool bbst_kind(NodeKind k) { return k == NodeKind::BUFFER || k == NodeKind::BOTTOM || k == NodeKind::TOP; }

// written from the four queue-node types, independent of the library's classifier
bool reference_queue_node(const ClusterForest& f, NodeId x)
{
    const auto& nx = f.node(x);
    const int k = f.thresholds().queue_spacing;
    if (nx.kind == NodeKind::VERTEX) return true;
    if (nx.kind == NodeKind::CLUSTER && nx.level % k == 0) return true;
    if (nx.kind == NodeKind::LIGHT_RANK && nx.rank % k == 0) return true;
    if (bbst_kind(nx.kind) && nx.head) return true;
    if (nx.parent == kNil) return false;
    const auto& np = f.node(nx.parent);
    const bool heavy_edge = np.kind == NodeKind::RANK_TREE || np.kind == NodeKind::RANK_PATH ||
                            (np.kind == NodeKind::CLUSTER && np.child[0] == x);
    if (heavy_edge)
        for (int m = 0; m < np.rank; m += k)
            if (m >= nx.rank) return true;
    if (bbst_kind(np.kind) && !(nx.kind == np.kind && !nx.head)) return true;
    return false;
}

void brute_ndq(const ClusterForest& f, const ShortcutSystem& sc, NodeId u, std::set<NodeId>& out)
{
    for (NodeId c : f.node(u).child) {
        if (c == kNil) continue;
        if (sc.is_queue(c)) out.insert(c);
        else brute_ndq(f, sc, c, out);
    }
}

std::vector<EdgeId> deletion_order(std::size_t m, Rng& rng)
{
    std::vector<EdgeId> order(m);
    std::iota(order.begin(), order.end(), 0u);
    rng.shuffle(order);
    return order;
}

} // namespace

TEST_CASE("with spacing 1 every cluster is a queue node")
{
    Rng rng(1);
    const auto input = random_graph(64, 200, rng);
    auto ds = shortcut_structure(64, input);
    const auto& f = ds.forest();
    REQUIRE(f.thresholds().queue_spacing == 1);
    for (NodeId x = 0; x < f.node_capacity(); ++x)
        if (f.alive(x) && f.node(x).kind == NodeKind::CLUSTER) CHECK(f.shortcuts()->classify(x));
}

TEST_CASE("n = 2^16 with eps_q 0.15 gives spacing 1")
{
    const Thresholds thr(1u << 16, Tuning{});
    CHECK(thr.queue_spacing == 1);
}

TEST_CASE("classification matches an independent classifier")
{
    Rng rng(2);
    for (double eps_q : {0.15, 0.7, 1.2}) {
        Tuning t;
        t.eps_q = eps_q;
        t.alpha = 1.0;
        const auto input = random_graph(64, 220, rng);
        auto ds = shortcut_structure(64, input, t);
        const auto order = deletion_order(input.size(), rng);
        for (std::size_t i = 0; i < order.size(); ++i) {
            ds.remove(order[i]);
            if (i % 10) continue;
            const auto& f = ds.forest();
            for (NodeId x = 0; x < f.node_capacity(); ++x) {
                if (!f.alive(x)) continue;
                REQUIRE(f.shortcuts()->classify(x) == reference_queue_node(f, x));
                CHECK(f.shortcuts()->is_queue(x) == f.shortcuts()->classify(x));
            }
        }
    }
}

TEST_CASE("buffer heads are queue nodes")
{
    Rng rng(3);
    auto ds = shortcut_structure(32, random_graph(32, 60, rng));
    const auto& f = ds.forest();
    int heads = 0;
    for (NodeId x = 0; x < f.node_capacity(); ++x)
        if (f.alive(x) && f.node(x).kind == NodeKind::BUFFER && f.node(x).head) {
            CHECK(f.shortcuts()->classify(x));
            ++heads;
        }
    CHECK(heads > 0);
}

TEST_CASE("nearest descending queue nodes match a DFS that stops at queue nodes")
{
    Rng rng(4);
    Tuning t;
    t.eps_q = 1.2;
    const auto input = random_graph(64, 200, rng);
    auto ds = shortcut_structure(64, input, t);
    const auto order = deletion_order(input.size(), rng);
    for (std::size_t i = 0; i < order.size(); i += 7) {
        const auto& f = ds.forest();
        const auto& sc = *f.shortcuts();
        for (NodeId x = 0; x < f.node_capacity(); ++x) {
            if (!f.alive(x)) continue;
            std::set<NodeId> want;
            brute_ndq(f, sc, x, want);
            const auto got = sc.nearest_descending_queue_nodes(x);
            REQUIRE(std::set<NodeId>(got.begin(), got.end()) == want);
            if (f.node(x).kind == NodeKind::VERTEX) CHECK(got.empty());
        }
        for (std::size_t k = i; k < std::min(i + 7, order.size()); ++k) ds.remove(order[k]);
    }
}

TEST_CASE("shortcut search agrees with the simple search on random queries")
{
    Rng rng(5);
    int queries = 0;
    while (queries < 10000) {
        const std::size_t n = 16 + rng.below(48);
        const auto input = random_graph(n, 3 * n, rng);
        auto ds = shortcut_structure(n, input);
        const auto order = deletion_order(input.size(), rng);
        for (std::size_t i = 0; i < order.size() && queries < 10000; ++i) {
            const auto& f = ds.forest();
            for (int q = 0; q < 10; ++q) {
                const auto x = static_cast<NodeId>(rng.below(f.node_capacity()));
                if (!f.alive(x)) continue;
                // queues at x only cover levels up to its own
                if (f.node(x).level < 0) continue;
                const int level = static_cast<int>(rng.below(f.node(x).level + 1));
                ++queries;
                const auto simple = f.simple_down_search(x, level);
                if (!f.min_key(x, level).present()) {
                    CHECK_FALSE(simple);
                    continue;
                }
                const auto leaves = f.shortcuts()->shortcut_search(x, level);
                REQUIRE(simple);
                REQUIRE_FALSE(leaves.empty());
                const EdgeId a = f.list_head(*simple, level);
                const EdgeId b = f.list_head(leaves.front(), level);
                CHECK(ds.edge(a).key == ds.edge(b).key);
            }
            ds.remove(order[i]);
        }
    }
}

TEST_CASE("fresh structure: nothing spent, queues valid, endowment within its bound")
{
    Rng rng(6);
    auto ds = shortcut_structure(48, random_graph(48, 150, rng));
    const auto& sc = *ds.forest().shortcuts();
    CHECK(sc.ledger().spent == 0.0);
    CHECK(sc.audit().empty());
    CHECK(sc.ledger().endowment == doctest::Approx(sc.required_credits()));
    CHECK(sc.ledger().endowment <= ds.forest().thresholds().initial_endowment_bound());
}

TEST_CASE("random deletion run in audit mode keeps queues exact and the ledger non-negative")
{
    Rng rng(7);
    for (int trial = 0; trial < 4; ++trial) {
        const std::size_t n = 16 << trial % 3;
        const auto input = random_graph(n, 4 * n, rng);
        DecOptions o;
        o.mode = SearchMode::SHORTCUT;
        o.audit = true;
        o.queue = trial % 2 ? QueueKind::BUCKET : QueueKind::BINARY_HEAP;
        DecStructure ds(n, input, o);
        const auto& sc = *ds.forest().shortcuts();
        for (EdgeId e : deletion_order(input.size(), rng)) {
            const auto before = ds.counters();
            ds.remove(e);
            REQUIRE(sc.ledger().balance() >= 0.0);
            CHECK(ds.counters().queue_ops >= before.queue_ops);
        }
        CHECK(ds.counters().cap_violations == 0);
    }
}

TEST_CASE("buffer credits grow strictly with the leaf count")
{
    for (double alpha : {1.0, 2.0, 3.0})
        for (std::size_t n : {64u, 1024u, 1u << 16}) {
            Tuning t;
            t.alpha = alpha;
            const Thresholds thr(n, t);
            for (std::size_t s = 1; s < thr.s_max; ++s) CHECK(thr.buffer_tree_credits(s) < thr.buffer_tree_credits(s + 1));
        }
}
