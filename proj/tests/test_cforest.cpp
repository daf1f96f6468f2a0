#include <dmsf/cluster_forest.hpp>
#include <dmsf/shortcuts.hpp>

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

using namespace dmsf;

namespace {

std::vector<VertexId> iota_vertices(std::size_t n)
{
    std::vector<VertexId> v(n);
    std::iota(v.begin(), v.end(), 0u);
    return v;
}

void require_clean(const ClusterForest& f)
{
    const auto errs = f.audit();
    for (const auto& e : errs) INFO(e);
    REQUIRE_MESSAGE(errs.empty(), (errs.empty() ? std::string{} : errs.front()));
}

// path 0-1-...-(n-1) as level-0 tree edges plus random level-0 non-tree chords
ClusterForest path_forest(std::size_t n, std::size_t chords, std::mt19937_64& rng, bool shortcuts)
{
    ClusterForest f(n, Tuning{}, shortcuts);
    f.build_initial({iota_vertices(n)});
    std::vector<EdgeId> tree, nontree;
    std::uint64_t r = 0;
    for (VertexId v = 0; v + 1 < n; ++v) tree.push_back(f.edges().add(v, v + 1, WeightKey{EdgeClass::REAL, r++, r}, EdgeStatus::TREE));
    std::uniform_int_distribution<VertexId> pick(0, static_cast<VertexId>(n - 1));
    while (nontree.size() < chords) {
        const VertexId a = pick(rng), b = pick(rng);
        if (a == b) continue;
        nontree.push_back(f.edges().add(a, b, WeightKey{EdgeClass::REAL, r++, r}, EdgeStatus::NONTREE));
    }
    f.load_edges(nontree, tree);
    return f;
}

NodeId leftmost_buffer(const ClusterForest& f, NodeId u)
{
    NodeId cur = f.node(u).child[1];
    while (f.node(cur).kind != NodeKind::BUFFER) cur = f.node(cur).child[0];
    return cur;
}

} // namespace

TEST_CASE("single vertex has no local tree")
{
    ClusterForest f(1, Tuning{}, false);
    f.build_initial({{0}});
    CHECK(f.roots() == std::vector<NodeId>{0});
    CHECK(f.node(0).parent == kNil);
    CHECK(f.node_capacity() == 1);
    require_clean(f);
}

TEST_CASE("eight vertices share one buffer")
{
    ClusterForest f(8, Tuning{}, false);
    const auto& thr = f.thresholds();
    REQUIRE(thr.s_max >= 8);
    const bool leaf_heavy = thr.heavy(1, 8);
    f.build_initial({iota_vertices(8)});
    const auto roots = f.roots();
    REQUIRE(roots.size() == 1);
    const NodeId r = roots.front();
    CHECK(f.node(r).size == 8);
    CHECK(f.node(r).rank == 3);
    CHECK(f.node(r).level == 0);
    CHECK(f.cluster_children(r).size() == 8);
    for (VertexId v = 0; v < 8; ++v) {
        CHECK(f.node(v).size == 1);
        CHECK(f.node(v).rank == 0);
        CHECK(f.node(v).slot == (leaf_heavy ? Slot::HEAVY : Slot::BUFFER));
    }
    CHECK_FALSE(leaf_heavy);
    const NodeId top = f.node(r).child[1];
    REQUIRE(f.node(top).kind == NodeKind::TOP);
    CHECK(f.node(top).count == 1); // only the buffer
    CHECK(f.node(r).tree_bits == 0);
    CHECK(f.node(r).nontree_bits == 0);
    require_clean(f);
}

TEST_CASE("large component packs leaves into bounded bottom trees")
{
    Tuning t;
    t.alpha = 1.0; // s_max = max(4, log n) keeps the trees small
    ClusterForest f(64, t, true);
    f.build_initial({iota_vertices(64)});
    require_clean(f);
    std::size_t bottoms = 0;
    for (NodeId x = 0; x < f.node_capacity(); ++x)
        if (f.alive(x) && f.node(x).kind == NodeKind::BOTTOM && f.node(x).head) {
            ++bottoms;
            CHECK(f.node(x).count <= f.thresholds().s_max);
        }
    CHECK(bottoms >= 64 / f.thresholds().s_max - 1);
}

TEST_CASE("merge of two singletons")
{
    std::mt19937_64 rng(1);
    auto f = path_forest(4, 0, rng, false);
    const NodeId w = f.merge_clusters({0, 1});
    CHECK(f.node(w).kind == NodeKind::CLUSTER);
    CHECK(f.node(w).size == 2);
    CHECK(f.node(w).rank == 1);
    CHECK(f.node(w).level == 1);
    CHECK(f.cluster_parent(0) == w);
    CHECK(f.cluster_children(f.roots().front()).size() == 3);
    CHECK(f.merge_clusters({w}) == w);
    require_clean(f);
}

TEST_CASE("merging buffers of three and five leaves yields one buffer of eight")
{
    Tuning t;
    t.alpha = 1.5; // s_max = 4^1.5 = 8 at n = 16
    std::mt19937_64 rng(2);
    ClusterForest f(16, t, true);
    f.build_initial({iota_vertices(16)});
    f.load_edges({}, {});
    REQUIRE(f.thresholds().s_max == 8);
    const NodeId a = f.merge_clusters({0, 1, 2});
    const NodeId b = f.merge_clusters({3, 4, 5, 6, 7});
    CHECK(f.node(leftmost_buffer(f, a)).count == 3);
    CHECK(f.node(leftmost_buffer(f, b)).count == 5);
    const NodeId w = f.merge_clusters({a, b});
    CHECK(f.node(w).size == 8);
    const NodeId buf = leftmost_buffer(f, w);
    CHECK(f.node(buf).count == 8);
    CHECK(f.node(f.node(w).child[1]).count == 1); // no bottom trees
    require_clean(f);
}

TEST_CASE("merge rejects non-siblings")
{
    std::mt19937_64 rng(3);
    auto f = path_forest(16, 0, rng, false);
    const NodeId w = f.merge_clusters({0, 1});
    CHECK_THROWS_AS(f.merge_clusters({w, 0}), std::invalid_argument);
    CHECK_THROWS_AS(f.merge_clusters({}), std::invalid_argument);
}

TEST_CASE("split moves w into a fresh sibling")
{
    std::mt19937_64 rng(4);
    auto f = path_forest(16, 4, rng, true);
    const NodeId p = f.merge_clusters({0, 1, 2, 3});
    const NodeId w = f.merge_clusters({0, 1});
    REQUIRE(f.cluster_parent(w) == p);
    const NodeId fresh = f.split_cluster(p, w);
    CHECK(f.cluster_children(fresh) == std::vector<NodeId>{w});
    CHECK(f.node(p).size == 2);
    CHECK(f.node(fresh).level == f.node(p).level);
    CHECK(f.cluster_parent(fresh) == f.cluster_parent(p));
    require_clean(f);
    CHECK_THROWS_AS(f.split_cluster(p, w), std::invalid_argument);
}

TEST_CASE("split promotes a child that crosses the heavy threshold")
{
    Tuning t;
    t.eps_h = 1.0; // divisor log n = 6 at n = 64
    ClusterForest f(64, t, true);
    f.build_initial({iota_vertices(64)});
    f.load_edges({}, {});
    // p (level 1) = {x: 2 vertices, w: 12 vertices}
    std::vector<NodeId> members;
    for (VertexId v = 0; v < 14; ++v) members.push_back(v);
    const NodeId p = f.merge_clusters(members);
    const NodeId x = f.merge_clusters({0, 1});
    std::vector<NodeId> rest;
    for (VertexId v = 2; v < 14; ++v) rest.push_back(v);
    const NodeId w = f.merge_clusters(rest);
    REQUIRE(f.node(p).size == 14);
    CHECK(f.node(x).slot != Slot::HEAVY); // 2 * 6 < 14
    f.split_cluster(p, w);
    CHECK(f.node(p).size == 2);
    CHECK(f.node(x).slot == Slot::HEAVY); // 2 * 6 >= 2
    CHECK(f.audit_heavy_light(p).empty());
    require_clean(f);
}

TEST_CASE("random merges, splits and edge updates match the recompute oracle")
{
    for (bool shortcuts : {false, true}) {
        std::mt19937_64 rng(shortcuts ? 11 : 10);
        const std::size_t n = 16;
        auto f = path_forest(n, 20, rng, shortcuts);
        require_clean(f);
        int merges = 0, splits = 0;
        for (int step = 0; step < 300; ++step) {
            std::vector<NodeId> clusters;
            for (NodeId x = 0; x < f.node_capacity(); ++x)
                if (f.alive(x) && f.node(x).kind == NodeKind::CLUSTER && f.cluster_children(x).size() >= 2) clusters.push_back(x);
            const int op = static_cast<int>(rng() % 4);
            if (op <= 1 && !clusters.empty()) {
                const NodeId p = clusters[rng() % clusters.size()];
                auto kids = f.cluster_children(p);
                std::shuffle(kids.begin(), kids.end(), rng);
                std::vector<NodeId> pick;
                std::uint64_t total = 0;
                const std::uint64_t limit = n >> (f.node(p).level + 1);
                for (NodeId k : kids) {
                    if (total + f.node(k).size > limit) continue;
                    pick.push_back(k);
                    total += f.node(k).size;
                }
                if (pick.size() < 2) continue;
                const NodeId w = f.merge_clusters(pick);
                ++merges;
                CHECK(f.audit_heavy_light(w).empty());
                CHECK(f.audit_heavy_light(p).empty());
            } else if (op == 2 && !clusters.empty()) {
                const NodeId p = clusters[rng() % clusters.size()];
                if (f.node(p).level == 0) continue;
                const auto kids = f.cluster_children(p);
                const NodeId w = kids[rng() % kids.size()];
                const NodeId grand = f.cluster_parent(p);
                const NodeId fresh = f.split_cluster(p, w);
                ++splits;
                CHECK(f.audit_heavy_light(p).empty());
                CHECK(f.audit_heavy_light(fresh).empty());
                CHECK(f.audit_heavy_light(grand).empty());
            } else {
                std::vector<EdgeId> live;
                for (const auto& r : f.edges().records())
                    if (r.status == EdgeStatus::NONTREE) live.push_back(r.id);
                if (live.empty()) continue;
                const EdgeId e = live[rng() % live.size()];
                if (rng() % 2) {
                    f.remove_nontree(e);
                    f.edges().remove(e);
                } else {
                    f.convert_to_tree(e);
                }
            }
            require_clean(f);
        }
        CHECK(merges > 10);
        CHECK(splits > 5);
    }
}

TEST_CASE("down search agrees with an exhaustive scan")
{
    std::mt19937_64 rng(6);
    auto f = path_forest(32, 40, rng, false);
    const NodeId root = f.roots().front();
    f.merge_clusters({0, 1, 2, 3, 4, 5});
    f.merge_clusters({10, 11, 12});
    for (NodeId u = 0; u < f.node_capacity(); ++u) {
        if (!f.alive(u)) continue;
        // brute force over vertices below u
        WeightKey best = WeightKey::absent();
        for (VertexId v = 0; v < 32; ++v) {
            NodeId cur = v;
            while (cur != kNil && cur != u) cur = f.node(cur).parent;
            if (cur != u) continue;
            for (EdgeId e : f.list_items(v, 0)) best = std::min(best, f.edges()[e].key);
        }
        const auto x = f.simple_down_search(u, 0);
        if (!best.present()) {
            CHECK_FALSE(x.has_value());
            continue;
        }
        REQUIRE(x.has_value());
        CHECK(f.edges()[f.list_head(*x, 0)].key == best);
    }
    (void)root;
}

TEST_CASE("removing the only edge at a vertex clears the bit up the path")
{
    std::mt19937_64 rng(7);
    ClusterForest f(8, Tuning{}, false);
    f.build_initial({iota_vertices(8)});
    const EdgeId e = f.edges().add(2, 5, WeightKey{EdgeClass::REAL, 7, 7}, EdgeStatus::NONTREE);
    const EdgeId g = f.edges().add(1, 6, WeightKey{EdgeClass::REAL, 3, 3}, EdgeStatus::NONTREE);
    f.load_edges({g, e}, {});
    const NodeId root = f.roots().front();
    CHECK(f.min_key(root, 0) == f.edges()[g].key);
    CHECK(f.simple_down_search(root, 0).value() == 1);
    f.remove_nontree(g);
    f.edges().remove(g);
    CHECK(f.min_key(root, 0) == f.edges()[e].key);
    CHECK((f.node(1).nontree_bits & 1) == 0);
    f.remove_nontree(e);
    f.edges().remove(e);
    CHECK((f.node(root).nontree_bits & 1) == 0);
    CHECK_FALSE(f.min_key(root, 0).present());
    require_clean(f);
}

TEST_CASE("tree edge enumeration visits each edge once")
{
    std::mt19937_64 rng(8);
    auto f = path_forest(16, 0, rng, false);
    const NodeId root = f.roots().front();
    std::set<EdgeId> expect;
    for (const auto& r : f.edges().records())
        if (r.status == EdgeStatus::TREE && r.level == 0) expect.insert(r.id);
    std::set<EdgeId> seen;
    int rounds = 0;
    while (auto e = f.tree_edge_search(root, 0)) {
        CHECK(seen.insert(*e).second);
        f.promote_tree(*e);
        ++rounds;
    }
    CHECK(seen == expect);
    CHECK(rounds == 15);
}

TEST_CASE("dump is deterministic")
{
    std::mt19937_64 r1(9), r2(9);
    auto a = path_forest(16, 10, r1, false);
    auto b = path_forest(16, 10, r2, false);
    a.merge_clusters({0, 1, 2});
    b.merge_clusters({0, 1, 2});
    CHECK(a.dump() == b.dump());
    const std::string d = a.dump();
    CHECK(d.rfind("CLUSTER", 0) == 0);
    CHECK(d.find("VERTEX id=0 n=1") != std::string::npos);
}
