#include <dmsf/dec_msf.hpp>
#include <dmsf/shortcuts.hpp>

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace dmsf {

const char* to_string(SearchMode m) { return m == SearchMode::SIMPLE ? "simple" : "shortcut"; }

namespace {

struct Dsu {
    std::vector<VertexId> parent;
    explicit Dsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
    VertexId find(VertexId x)
    {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(VertexId a, VertexId b)
    {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[a] = b;
        return true;
    }
};

} // namespace

DecStructure::DecStructure(std::size_t n, std::span<const InputEdge> edges, const DecOptions& opts)
    : m_opts(opts), m_forest(n, opts.tuning, opts.mode == SearchMode::SHORTCUT, opts.queue)
{
    if (n == 0) throw std::invalid_argument("structure needs at least one vertex");
    std::set<std::pair<VertexId, VertexId>> pairs;
    for (const auto& e : edges) {
        if (e.u >= n || e.v >= n) throw std::invalid_argument("edge endpoint out of range");
        if (e.u == e.v) throw std::invalid_argument("self-loop");
        if (!e.key.present()) throw std::invalid_argument("edge without a key");
        if (!opts.allow_parallel && !pairs.emplace(std::min(e.u, e.v), std::max(e.u, e.v)).second)
            throw std::invalid_argument("parallel edge");
    }
    std::vector<std::size_t> order(edges.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return edges[a].key < edges[b].key; });
    for (std::size_t i = 1; i < order.size(); ++i)
        if (edges[order[i - 1]].key == edges[order[i]].key) throw std::invalid_argument("duplicate edge key");

    // Kruskal over keys
    Dsu dsu(n);
    std::vector<char> tree(edges.size(), 0);
    for (std::size_t i : order) tree[i] = dsu.unite(edges[i].u, edges[i].v);

    auto& table = m_forest.edges();
    for (std::size_t i = 0; i < edges.size(); ++i)
        table.add(edges[i].u, edges[i].v, edges[i].key, tree[i] ? EdgeStatus::TREE : EdgeStatus::NONTREE);

    std::unordered_map<VertexId, std::vector<VertexId>> groups;
    for (VertexId v = 0; v < n; ++v) groups[dsu.find(v)].push_back(v);
    std::vector<std::vector<VertexId>> comps;
    for (auto& [root, members] : groups) comps.push_back(std::move(members));
    std::sort(comps.begin(), comps.end());
    m_forest.build_initial(comps);

    std::vector<EdgeId> nontree, tree_ids;
    for (std::size_t i : order) {
        if (tree[i]) tree_ids.push_back(static_cast<EdgeId>(i));
        else nontree.push_back(static_cast<EdgeId>(i));
    }
    m_nontree = nontree.size();
    m_forest.load_edges(nontree, tree_ids);
    if (m_opts.audit) {
        auto errs = audit();
        if (!errs.empty()) throw AuditError("after init: " + errs.front());
    }
}

double DecStructure::credits_spent() const
{
    const auto* sc = m_forest.shortcuts();
    return sc ? sc->ledger().spent : 0.0;
}

void DecStructure::promote(EdgeId e)
{
    const auto& r = edge(e);
    if (r.status == EdgeStatus::DELETED) throw std::invalid_argument("promoting a deleted edge");
    if (r.status == EdgeStatus::TREE) m_forest.promote_tree(e);
    else m_forest.promote_nontree(e);
}

std::optional<DecStructure::Incident> DecStructure::cheapest_incident(NodeId w, int level)
{
    auto& counters = m_forest.counters();
    VertexId x;
    bool two = false;
    if (m_opts.mode == SearchMode::SIMPLE) {
        const auto found = m_forest.simple_down_search(w, level, &counters);
        if (!found) return std::nullopt;
        x = *found;
    } else {
        const auto leaves = m_forest.shortcuts()->shortcut_search(w, level, &counters);
        if (leaves.empty()) return std::nullopt;
        x = leaves.front();
        two = leaves.size() == 2;
    }
    const EdgeId e = m_forest.list_head(x, level);
    if (e == kNoEdge) throw AuditError("downward search ended at a vertex without a level edge");
    if (two) {
        if (m_forest.list_head(edge(e).other(x), level) != e) throw AuditError("shortcut search returned two unrelated leaves");
        return Incident{e, true};
    }
    std::uint64_t visits = 0;
    const bool inside = m_forest.cluster_child_at(edge(e).other(x), level, &visits) == w;
    counters.up_visits += visits;
    return Incident{e, inside};
}

std::optional<EdgeId> DecStructure::search_level(VertexId u, VertexId v, int j)
{
    const NodeId p = m_forest.cluster_parent(m_forest.cluster_child_at(u, j));
    if (p == kNil || m_forest.cluster_parent(m_forest.cluster_child_at(v, j)) != p)
        throw AuditError("endpoints of a level-" + std::to_string(j) + " tree edge lie in different clusters");
    const std::uint64_t np = m_forest.node(p).size;

    struct Side {
        std::vector<NodeId> nodes;
        std::vector<EdgeId> edges;
        std::uint64_t count{0};
    };
    // grow one side over level-j tree edges; gives up once it holds more than half of p
    auto explore = [&](VertexId start, bool may_abort) -> std::optional<Side> {
        Side side;
        std::unordered_set<NodeId> seen;
        std::unordered_set<EdgeId> edge_seen;
        std::vector<NodeId> stack;
        bool aborted = false;
        auto visit = [&](NodeId k) {
            if (!seen.insert(k).second) return;
            side.nodes.push_back(k);
            side.count += m_forest.node(k).size;
            stack.push_back(k);
            if (may_abort && 2 * side.count > np) aborted = true;
        };
        visit(m_forest.cluster_child_at(start, j));
        while (!stack.empty() && !aborted) {
            const NodeId c = stack.back();
            stack.pop_back();
            m_forest.for_each_tree_edge(c, j, [&](EdgeId e) {
                if (aborted || !edge_seen.insert(e).second) return;
                side.edges.push_back(e);
                const auto [a, b] = edge(e).endpoints;
                visit(m_forest.cluster_child_at(a, j));
                visit(m_forest.cluster_child_at(b, j));
            });
        }
        if (aborted) return std::nullopt;
        return side;
    };
    auto side = explore(u, true);
    if (!side) side = explore(v, false);
    if (2 * side->count > np) throw AuditError("smaller-side rule violated at level " + std::to_string(j));

    const NodeId w = m_forest.merge_clusters(side->nodes);
    std::sort(side->edges.begin(), side->edges.end());
    for (EdgeId e : side->edges) m_forest.promote_tree(e);

    while (auto inc = cheapest_incident(w, j)) {
        if (inc->inside) {
            m_forest.promote_nontree(inc->edge);
            continue;
        }
        m_forest.convert_to_tree(inc->edge);
        --m_nontree;
        return inc->edge;
    }
    m_forest.split_cluster(p, w);
    return std::nullopt;
}

std::optional<EdgeId> DecStructure::remove(EdgeId e)
{
    if (!live(e)) throw std::invalid_argument("edge " + std::to_string(e) + " is not live");
    const EdgeRecord rec = edge(e);
    std::optional<EdgeId> result;
    if (rec.status == EdgeStatus::NONTREE) {
        m_forest.remove_nontree(e);
        m_forest.edges().remove(e);
        --m_nontree;
    } else {
        m_forest.remove_tree(e);
        m_forest.edges().remove(e);
        for (int j = rec.level; j >= 0; --j) {
            result = search_level(rec.endpoints.first, rec.endpoints.second, j);
            if (result) break;
        }
    }
    if (m_opts.audit) {
        auto errs = audit();
        if (!errs.empty()) throw AuditError("after deleting edge " + std::to_string(e) + ": " + errs.front());
    }
    return result;
}

std::vector<EdgeId> DecStructure::msf() const
{
    std::vector<EdgeId> out;
    for (const auto& r : m_forest.edges().records())
        if (r.status == EdgeStatus::TREE) out.push_back(r.id);
    return out;
}

std::vector<std::string> DecStructure::quick_audit() const
{
    std::vector<std::string> out;
    const int lmax = level_max();
    for (const auto& r : m_forest.edges().records()) {
        if (r.status == EdgeStatus::DELETED) continue;
        if (r.level < 0 || r.level > lmax) out.push_back("edge " + std::to_string(r.id) + " level out of range");
    }
    const int levels = m_forest.level_count();
    for (VertexId x = 0; x < vertex_count(); ++x)
        for (int l = 0; l < levels; ++l) {
            EdgeId prev = kNoEdge;
            for (EdgeId e = m_forest.list_head(x, l); e != kNoEdge; e = m_forest.list_next(e, x)) {
                if (prev != kNoEdge && !(edge(prev).key < edge(e).key)) out.push_back("unsorted list at vertex " + std::to_string(x));
                if (edge(e).level != l) out.push_back("edge listed at the wrong level");
                prev = e;
            }
        }
    const std::size_t n = vertex_count();
    for (NodeId x = 0; x < m_forest.node_capacity(); ++x) {
        if (!m_forest.alive(x)) continue;
        const auto& nx = m_forest.node(x);
        if (nx.kind != NodeKind::CLUSTER) continue;
        if ((static_cast<std::uint64_t>(nx.size) << nx.level) > n)
            out.push_back("cluster " + std::to_string(x) + " exceeds the size cap of level " + std::to_string(nx.level));
        const NodeId p = m_forest.cluster_parent(x);
        if (p != kNil && m_forest.node(p).level != nx.level - 1)
            out.push_back("cluster " + std::to_string(x) + " does not sit one level below its parent");
        if (nx.level > level_max()) out.push_back("cluster " + std::to_string(x) + " above the top level");
    }
    return out;
}

std::vector<std::string> DecStructure::audit() const
{
    auto out = m_forest.audit();
    for (auto& m : m_forest.audit_tree_connectivity()) out.push_back(std::move(m));
    Dsu dsu(vertex_count());
    std::size_t nontree = 0;
    for (const auto& r : m_forest.edges().records()) {
        if (r.status != EdgeStatus::TREE) continue;
        if (!dsu.unite(r.endpoints.first, r.endpoints.second)) out.push_back("tree edges contain a cycle");
    }
    for (const auto& r : m_forest.edges().records()) {
        if (r.status != EdgeStatus::NONTREE) continue;
        ++nontree;
        if (dsu.find(r.endpoints.first) != dsu.find(r.endpoints.second))
            out.push_back("non-tree edge " + std::to_string(r.id) + " joins two trees");
    }
    if (nontree != m_nontree) out.push_back("non-tree counter out of sync");
    return out;
}

} // namespace dmsf
