#include <dmsf/cluster_forest.hpp>
#include <dmsf/shortcuts.hpp>

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <unordered_set>

namespace dmsf {

std::optional<VertexId> ClusterForest::simple_down_search(NodeId u, int level, Counters* counters) const
{
    if (!((m_nodes.at(u).nontree_bits >> level) & 1)) return std::nullopt;
    NodeId cur = u;
    std::uint64_t visits = 1;
    while (m_nodes[cur].kind != NodeKind::VERTEX) {
        const WeightKey target = min_key(cur, level);
        NodeId next = kNil;
        for (NodeId c : m_nodes[cur].child) {
            if (c != kNil && min_key(c, level) == target) {
                next = c;
                break;
            }
        }
        if (next == kNil) throw AuditError("minimum key not found below node " + std::to_string(cur));
        cur = next;
        ++visits;
    }
    if (counters) {
        counters->down_visits += visits;
        ++counters->down_searches;
    }
    return cur;
}

std::optional<EdgeId> ClusterForest::tree_edge_search(NodeId u, int level) const
{
    if (!((m_nodes.at(u).tree_bits >> level) & 1)) return std::nullopt;
    NodeId cur = u;
    while (m_nodes[cur].kind != NodeKind::VERTEX) {
        NodeId next = kNil;
        for (NodeId c : m_nodes[cur].child) {
            if (c != kNil && ((m_nodes[c].tree_bits >> level) & 1)) {
                next = c;
                break;
            }
        }
        if (next == kNil) throw AuditError("tree bit set without a witness below");
        cur = next;
    }
    for (EdgeId e : m_tree_inc[cur])
        if (m_edges[e].level == level) return e;
    throw AuditError("tree bit set on a vertex without a tree edge");
}

void ClusterForest::for_each_tree_edge(NodeId u, int level, const std::function<void(EdgeId)>& fn) const
{
    std::vector<NodeId> stack{u};
    while (!stack.empty()) {
        const NodeId x = stack.back();
        stack.pop_back();
        if (!((m_nodes[x].tree_bits >> level) & 1)) continue;
        if (m_nodes[x].kind == NodeKind::VERTEX) {
            for (EdgeId e : m_tree_inc[x])
                if (m_edges[e].level == level) fn(e);
            continue;
        }
        for (NodeId c : m_nodes[x].child)
            if (c != kNil) stack.push_back(c);
    }
}

int ClusterForest::height() const
{
    int h = 0;
    for (VertexId v = 0; v < m_n; ++v) h = std::max(h, depth(v));
    return h;
}

namespace {

NodeId cluster_at(const ClusterForest& f, VertexId x, int level)
{
    NodeId cur = f.node(x).parent;
    while (cur != kNil) {
        const auto& nc = f.node(cur);
        if (nc.kind == NodeKind::CLUSTER && nc.level == level) return cur;
        cur = nc.parent;
    }
    return kNil;
}

} // namespace

std::vector<std::string> ClusterForest::audit_heavy_light(NodeId u) const
{
    std::vector<std::string> out;
    const auto& nu = m_nodes.at(u);
    if (nu.kind != NodeKind::CLUSTER) return out;
    for (NodeId c : cluster_children(u)) {
        const bool heavy = m_thr.heavy(m_nodes[c].size, nu.size);
        if (heavy != (m_nodes[c].slot == Slot::HEAVY)) {
            out.push_back("child " + std::to_string(c) + " of cluster " + std::to_string(u) +
                          (heavy ? " is heavy but sits in the light tree" : " is light but sits in the heavy tree"));
        }
    }
    return out;
}

std::vector<std::string> ClusterForest::audit() const
{
    std::vector<std::string> out;
    auto fail = [&](const std::string& msg) { out.push_back(msg); };
    auto name = [](NodeId x) { return std::to_string(x); };

    // links
    for (NodeId x = 0; x < m_nodes.size(); ++x) {
        if (!alive(x)) continue;
        const auto& nx = m_nodes[x];
        for (NodeId c : nx.child) {
            if (c == kNil) continue;
            if (!alive(c)) fail("node " + name(x) + " has a freed child");
            else if (m_nodes[c].parent != x) fail("child " + name(c) + " does not point back to " + name(x));
        }
        if (nx.parent != kNil) {
            if (!alive(nx.parent)) fail("node " + name(x) + " has a freed parent");
            else if (m_nodes[nx.parent].child[0] != x && m_nodes[nx.parent].child[1] != x)
                fail("parent of " + name(x) + " does not list it");
        } else if (nx.kind != NodeKind::CLUSTER && nx.kind != NodeKind::VERTEX) {
            fail("detached local node " + name(x) + " (" + to_string(nx.kind) + ")");
        }
    }
    if (!out.empty()) return out;

    // aggregates against a from-scratch recomputation
    {
        std::vector<std::pair<int, NodeId>> order;
        for (NodeId x = 0; x < m_nodes.size(); ++x)
            if (alive(x)) order.emplace_back(depth(x), x);
        std::sort(order.begin(), order.end(), std::greater<>());
        std::vector<std::uint32_t> size(m_nodes.size(), 0);
        std::vector<std::uint64_t> tb(m_nodes.size(), 0), nb(m_nodes.size(), 0);
        std::vector<WeightKey> mins(m_nodes.size() * m_levels, WeightKey::absent());
        for (auto [d, x] : order) {
            const auto& nx = m_nodes[x];
            if (nx.kind == NodeKind::VERTEX) {
                size[x] = 1;
                for (int l = 0; l < m_levels; ++l) {
                    if (m_tree_count[idx(x, l)] != 0) tb[x] |= std::uint64_t{1} << l;
                    const EdgeId h = m_head[idx(x, l)];
                    if (h != kNoEdge) {
                        nb[x] |= std::uint64_t{1} << l;
                        mins[idx(x, l)] = m_edges[h].key;
                    }
                }
            } else {
                for (NodeId c : nx.child) {
                    if (c == kNil) continue;
                    size[x] += size[c];
                    tb[x] |= tb[c];
                    nb[x] |= nb[c];
                    for (int l = 0; l < m_levels; ++l)
                        mins[idx(x, l)] = std::min(mins[idx(x, l)], mins[idx(c, l)]);
                }
            }
            if (size[x] != nx.size) fail("size mismatch at " + name(x));
            if (tb[x] != nx.tree_bits) fail("tree bitmap mismatch at " + name(x));
            if (nb[x] != nx.nontree_bits) fail("non-tree bitmap mismatch at " + name(x));
            for (int l = 0; l < m_levels; ++l)
                if (mins[idx(x, l)] != min_key(x, l)) {
                    fail("min key mismatch at " + name(x) + " level " + std::to_string(l));
                    break;
                }
        }
    }

    // node shapes
    for (NodeId x = 0; x < m_nodes.size(); ++x) {
        if (!alive(x)) continue;
        const auto& nx = m_nodes[x];
        switch (nx.kind) {
        case NodeKind::CLUSTER: {
            if (nx.rank != floor_log2(std::max<std::uint32_t>(nx.size, 1))) fail("cluster rank mismatch at " + name(x));
            if (nx.level < 0 || nx.level > m_thr.level_max) fail("cluster level out of range at " + name(x));
            else if ((static_cast<std::uint64_t>(nx.size) << nx.level) > m_n)
                fail("cluster " + name(x) + " too large for level " + std::to_string(nx.level));
            if (nx.child[1] == kNil || m_nodes[nx.child[1]].kind != NodeKind::TOP) fail("cluster " + name(x) + " lacks a light tree");
            if (nx.parent != kNil) {
                const NodeId p = cluster_parent(x);
                if (p == kNil || m_nodes[p].level + 1 != nx.level) fail("cluster " + name(x) + " level is not parent level + 1");
            }
            for (const auto& m : audit_heavy_light(x)) fail(m);
            if (cluster_children(x).size() < 1) fail("cluster " + name(x) + " has no children");
            break;
        }
        case NodeKind::RANK_TREE:
        case NodeKind::LIGHT_RANK:
            for (NodeId c : nx.child)
                if (c == kNil || m_nodes[c].rank != nx.rank - 1) fail("rank tree node " + name(x) + " is not a pairing of equal ranks");
            break;
        case NodeKind::RANK_PATH: {
            const NodeId a = nx.child[0], b = nx.child[1];
            if (a == kNil || b == kNil) {
                fail("rank path node " + name(x) + " is missing a child");
                break;
            }
            const int rb = m_nodes[b].kind == NodeKind::RANK_PATH ? m_nodes[m_nodes[b].child[0]].rank : m_nodes[b].rank;
            if (m_nodes[a].rank <= rb) fail("rank path at " + name(x) + " is not strictly decreasing");
            break;
        }
        case NodeKind::BUFFER:
        case NodeKind::BOTTOM:
        case NodeKind::TOP: {
            if (!nx.head) break;
            const auto leaves = bbst_leaves(x);
            if (leaves.size() != nx.count) fail("leaf count mismatch at head " + name(x));
            for (std::size_t i = 1; i < leaves.size(); ++i)
                if (!(order_key(x, leaves[i - 1]) < order_key(x, leaves[i]))) {
                    fail("search tree " + name(x) + " out of order");
                    break;
                }
            if (nx.kind != NodeKind::TOP && nx.count > m_thr.s_max) fail("search tree " + name(x) + " exceeds s_max");
            if (nx.kind == NodeKind::BOTTOM) {
                if (nx.count == 0) fail("empty bottom tree " + name(x));
                else if (nx.rank != m_nodes[leaves.back()].rank) fail("bottom tree rank stale at " + name(x));
            }
            if (nx.kind == NodeKind::TOP) {
                int buffers = 0;
                for (NodeId l : leaves) buffers += m_nodes[l].kind == NodeKind::BUFFER;
                if (buffers != 1 || leaves.empty() || m_nodes[leaves.front()].kind != NodeKind::BUFFER)
                    fail("light tree " + name(x) + " must hold exactly one buffer, leftmost");
            }
            // AVL balance and stored heights
            std::vector<NodeId> stack{x};
            while (!stack.empty()) {
                const NodeId y = stack.back();
                stack.pop_back();
                const auto& ny = m_nodes[y];
                if (ny.child[0] != kNil && ny.child[1] != kNil) {
                    auto h = [&](NodeId c) { return bbst_internal(x, c) ? m_nodes[c].height : 0; };
                    const int h0 = h(ny.child[0]), h1 = h(ny.child[1]);
                    if (std::abs(h0 - h1) > 1) fail("search tree " + name(x) + " unbalanced at " + name(y));
                    if (ny.height != 1 + std::max(h0, h1)) fail("stale height at " + name(y));
                }
                for (NodeId c : ny.child)
                    if (bbst_internal(x, c)) stack.push_back(c);
            }
            break;
        }
        default:
            break;
        }
    }

    // edge lists
    std::size_t incidences = 0;
    for (VertexId x = 0; x < m_n; ++x) {
        for (int l = 0; l < m_levels; ++l) {
            EdgeId prev = kNoEdge;
            for (EdgeId e = m_head[idx(x, l)]; e != kNoEdge; e = m_next[side(e, x)]) {
                ++incidences;
                const auto& r = m_edges[e];
                if (r.status != EdgeStatus::NONTREE) fail("edge " + std::to_string(e) + " in a list but not non-tree");
                if (r.level != l) fail("edge " + std::to_string(e) + " listed at the wrong level");
                if (r.endpoints.first != x && r.endpoints.second != x) fail("edge " + std::to_string(e) + " listed at a non-endpoint");
                if (m_prev[side(e, x)] != prev) fail("broken back link in list of vertex " + std::to_string(x));
                if (prev != kNoEdge && !(m_edges[prev].key < r.key))
                    fail("list of vertex " + std::to_string(x) + " level " + std::to_string(l) + " not ascending");
                const NodeId ca = cluster_at(*this, r.endpoints.first, l), cb = cluster_at(*this, r.endpoints.second, l);
                if (ca == kNil || ca != cb) fail("non-tree edge " + std::to_string(e) + " leaves its level cluster");
                prev = e;
                if (incidences > 4 * m_edges.edge_count() + 4) {
                    fail("cyclic edge list");
                    return out;
                }
            }
            if (m_tail[idx(x, l)] != prev) fail("stale list tail at vertex " + std::to_string(x));
        }
        std::vector<std::uint32_t> per_level(m_levels, 0);
        for (EdgeId e : m_tree_inc[x]) {
            const auto& r = m_edges[e];
            if (r.status != EdgeStatus::TREE) fail("edge " + std::to_string(e) + " in tree incidence but not a tree edge");
            ++per_level[r.level];
            const NodeId ca = cluster_at(*this, r.endpoints.first, r.level), cb = cluster_at(*this, r.endpoints.second, r.level);
            if (ca == kNil || ca != cb) fail("tree edge " + std::to_string(e) + " leaves its level cluster");
        }
        for (int l = 0; l < m_levels; ++l)
            if (per_level[l] != m_tree_count[idx(x, l)]) fail("tree count mismatch at vertex " + std::to_string(x));
    }
    std::size_t nontree = 0;
    for (const auto& r : m_edges.records()) nontree += r.status == EdgeStatus::NONTREE;
    if (incidences != 2 * nontree) fail("non-tree edges missing from lists");

    if (height() > m_thr.height_cap()) fail("height " + std::to_string(height()) + " exceeds cap");
    if (m_shortcuts)
        for (auto& m : m_shortcuts->audit()) fail(m);
    return out;
}

std::vector<std::string> ClusterForest::audit_tree_connectivity() const
{
    std::vector<std::string> out;
    auto name = [](NodeId x) { return std::to_string(x); };
    // level-i tree edges connect the children of each level-i cluster
    for (NodeId c = 0; c < m_nodes.size(); ++c) {
        if (!alive(c) || m_nodes[c].kind != NodeKind::CLUSTER) continue;
        const int l = m_nodes[c].level;
        const auto kids = cluster_children(c);
        if (kids.size() < 2) continue;
        std::unordered_set<NodeId> seen{kids.front()};
        std::vector<NodeId> stack{kids.front()};
        while (!stack.empty()) {
            const NodeId y = stack.back();
            stack.pop_back();
            for_each_tree_edge(y, l, [&](EdgeId e) {
                for (VertexId v : {m_edges[e].endpoints.first, m_edges[e].endpoints.second}) {
                    const NodeId k = cluster_child_at(v, l);
                    if (seen.insert(k).second) stack.push_back(k);
                }
            });
        }
        if (seen.size() != kids.size()) out.push_back("children of cluster " + name(c) + " not connected by its tree edges");
    }

    return out;
}

std::string ClusterForest::dump() const
{
    std::ostringstream os;
    auto rs = roots();
    std::vector<std::pair<NodeId, int>> stack;
    for (auto it = rs.rbegin(); it != rs.rend(); ++it) stack.emplace_back(*it, 0);
    char buf[64];
    while (!stack.empty()) {
        auto [x, d] = stack.back();
        stack.pop_back();
        const auto& nx = m_nodes[x];
        os << std::string(2 * d, ' ') << to_string(nx.kind) << " id=" << x;
        if (nx.kind == NodeKind::CLUSTER) os << " level=" << nx.level;
        else if (nx.kind != NodeKind::VERTEX) os << " rank=" << nx.rank;
        std::snprintf(buf, sizeof buf, " n=%u tree=%llx nontree=%llx", nx.size,
                      static_cast<unsigned long long>(nx.tree_bits), static_cast<unsigned long long>(nx.nontree_bits));
        os << buf << '\n';
        for (int s = 1; s >= 0; --s)
            if (nx.child[s] != kNil) stack.emplace_back(nx.child[s], d + 1);
    }
    return os.str();
}

} // namespace dmsf
