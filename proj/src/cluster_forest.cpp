#include <dmsf/cluster_forest.hpp>
#include <dmsf/shortcuts.hpp>

#include <algorithm>
#include <cassert>
#include <unordered_map>

namespace dmsf {

const char* to_string(NodeKind k)
{
    switch (k) {
    case NodeKind::VERTEX: return "VERTEX";
    case NodeKind::CLUSTER: return "CLUSTER";
    case NodeKind::RANK_TREE: return "RANK_TREE";
    case NodeKind::RANK_PATH: return "RANK_PATH";
    case NodeKind::LIGHT_RANK: return "LIGHT_RANK";
    case NodeKind::BUFFER: return "BUFFER";
    case NodeKind::BOTTOM: return "BOTTOM";
    case NodeKind::TOP: return "TOP";
    case NodeKind::FREE: return "FREE";
    }
    return "?";
}

ClusterForest::ClusterForest(std::size_t n, const Tuning& tuning, bool shortcuts, QueueKind queue_kind)
    : m_n(n), m_thr(n, tuning), m_edges(n)
{
    m_levels = m_thr.level_max + 1;
    if (m_levels > 63) throw std::invalid_argument("too many levels for one bitmap word");
    m_nodes.resize(n);
    m_min.assign(n * m_levels, WeightKey::absent());
    for (VertexId v = 0; v < n; ++v) {
        auto& x = m_nodes[v];
        x.kind = NodeKind::VERTEX;
        x.size = 1;
        x.rank = 0;
    }
    m_head.assign(n * m_levels, kNoEdge);
    m_tail.assign(n * m_levels, kNoEdge);
    m_tree_count.assign(n * m_levels, 0);
    m_tree_inc.resize(n);
    if (shortcuts) m_shortcuts = std::make_unique<ShortcutSystem>(*this, queue_kind);
}

ClusterForest::~ClusterForest() = default;

ClusterForest::ClusterForest(ClusterForest&& o) noexcept
    : m_n(o.m_n), m_levels(o.m_levels), m_thr(o.m_thr), m_edges(std::move(o.m_edges)), m_nodes(std::move(o.m_nodes)),
      m_min(std::move(o.m_min)), m_free(std::move(o.m_free)), m_pending_free(std::move(o.m_pending_free)),
      m_dirty(std::move(o.m_dirty)), m_head(std::move(o.m_head)), m_tail(std::move(o.m_tail)),
      m_next(std::move(o.m_next)), m_prev(std::move(o.m_prev)), m_tree_count(std::move(o.m_tree_count)),
      m_tree_inc(std::move(o.m_tree_inc)), m_tree_pos(std::move(o.m_tree_pos)), m_counters(o.m_counters),
      m_shortcuts(std::move(o.m_shortcuts))
{
    if (m_shortcuts) m_shortcuts->m_forest = this;
}

ClusterForest& ClusterForest::operator=(ClusterForest&& o) noexcept
{
    if (this == &o) return *this;
    this->~ClusterForest();
    new (this) ClusterForest(std::move(o));
    return *this;
}

// --- node plumbing ------------------------------------------------------------------------

NodeId ClusterForest::alloc(NodeKind kind, int level)
{
    NodeId x;
    if (!m_free.empty()) {
        x = m_free.back();
        m_free.pop_back();
    } else {
        x = static_cast<NodeId>(m_nodes.size());
        m_nodes.emplace_back();
        m_min.resize(m_nodes.size() * m_levels, WeightKey::absent());
    }
    m_nodes[x] = LocalNode{};
    m_nodes[x].kind = kind;
    m_nodes[x].level = level;
    std::fill_n(m_min.begin() + static_cast<std::ptrdiff_t>(x) * m_levels, m_levels, WeightKey::absent());
    mark(x);
    return x;
}

void ClusterForest::release(NodeId x)
{
    auto& nx = m_nodes[x];
    nx.kind = NodeKind::FREE;
    nx.parent = kNil;
    nx.child[0] = nx.child[1] = kNil;
    m_pending_free.push_back(x);
}

void ClusterForest::mark(NodeId x)
{
    auto& nx = m_nodes[x];
    if (nx.dirty) return;
    nx.dirty = true;
    m_dirty.push_back(x);
}

void ClusterForest::set_child(NodeId p, int slot, NodeId c)
{
    m_nodes[p].child[slot] = c;
    if (c != kNil) m_nodes[c].parent = p;
    mark(p);
}

int ClusterForest::child_slot(NodeId p, NodeId c) const
{
    if (m_nodes[p].child[0] == c) return 0;
    if (m_nodes[p].child[1] == c) return 1;
    throw AuditError("child link mismatch");
}

NodeId ClusterForest::new_cluster(int level)
{
    const NodeId u = alloc(NodeKind::CLUSTER, level);
    const NodeId top = alloc(NodeKind::TOP, level);
    m_nodes[top].head = true;
    const NodeId buf = alloc(NodeKind::BUFFER, level);
    m_nodes[buf].head = true;
    m_nodes[buf].rank = -1;
    set_child(u, 1, top);
    bbst_insert(top, buf);
    return u;
}

NodeId ClusterForest::cluster_parent(NodeId x) const
{
    NodeId cur = m_nodes.at(x).parent;
    while (cur != kNil && m_nodes[cur].kind != NodeKind::CLUSTER) cur = m_nodes[cur].parent;
    return cur;
}

NodeId ClusterForest::cluster_child_at(VertexId x, int j, std::uint64_t* visits) const
{
    NodeId last = x;
    NodeId cur = m_nodes.at(x).parent;
    std::uint64_t steps = 1;
    while (cur != kNil) {
        ++steps;
        if (m_nodes[cur].kind == NodeKind::CLUSTER) {
            if (m_nodes[cur].level == j) {
                if (visits) *visits += steps;
                return last;
            }
            last = cur;
        }
        cur = m_nodes[cur].parent;
    }
    throw AuditError("no level-" + std::to_string(j) + " cluster above vertex " + std::to_string(x));
}

NodeId ClusterForest::root_of(NodeId x) const
{
    while (m_nodes[x].parent != kNil) x = m_nodes[x].parent;
    return x;
}

int ClusterForest::depth(NodeId x) const
{
    int d = 0;
    while (m_nodes[x].parent != kNil) {
        x = m_nodes[x].parent;
        ++d;
    }
    return d;
}

std::vector<NodeId> ClusterForest::roots() const
{
    std::vector<NodeId> out;
    for (NodeId x = 0; x < m_nodes.size(); ++x) {
        const auto& nx = m_nodes[x];
        if (nx.kind != NodeKind::FREE && nx.parent == kNil &&
            (nx.kind == NodeKind::CLUSTER || nx.kind == NodeKind::VERTEX))
            out.push_back(x);
    }
    return out;
}

std::vector<NodeId> ClusterForest::cluster_children(NodeId u) const
{
    std::vector<NodeId> out;
    if (m_nodes.at(u).kind != NodeKind::CLUSTER) return out;
    std::vector<NodeId> stack;
    for (NodeId c : m_nodes[u].child)
        if (c != kNil) stack.push_back(c);
    while (!stack.empty()) {
        const NodeId x = stack.back();
        stack.pop_back();
        const auto k = m_nodes[x].kind;
        if (k == NodeKind::CLUSTER || k == NodeKind::VERTEX) {
            out.push_back(x);
            continue;
        }
        for (NodeId c : m_nodes[x].child)
            if (c != kNil) stack.push_back(c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// --- balanced leaf trees ------------------------------------------------------------------
//
// Leaf-oriented AVL trees whose root is a fixed head node. Rotations are done in place so
// the head keeps its identity: the head is the tree's root for its whole lifetime.

bool ClusterForest::bbst_internal(NodeId head, NodeId x) const
{
    if (x == kNil || x == head) return false;
    const auto& nx = m_nodes[x];
    return nx.kind == m_nodes[head].kind && !nx.head;
}

std::pair<int, std::uint64_t> ClusterForest::order_key(NodeId head, NodeId leaf) const
{
    const auto& nl = m_nodes[leaf];
    if (m_nodes[head].kind == NodeKind::TOP) {
        if (nl.kind == NodeKind::BUFFER) return {-1, 0};
        return {nl.rank, leaf};
    }
    return {static_cast<int>(nl.size), leaf};
}

namespace {
int sub_height(const std::vector<LocalNode>& nodes, NodeId x, bool internal)
{
    return (x == kNil || !internal) ? 0 : nodes[x].height;
}
} // namespace

void ClusterForest::bbst_fix_height(NodeId x)
{
    auto& nx = m_nodes[x];
    int h = 0;
    for (NodeId c : nx.child) {
        if (c == kNil) continue;
        const bool internal = m_nodes[c].kind == nx.kind && !m_nodes[c].head;
        h = std::max(h, sub_height(m_nodes, c, internal));
    }
    nx.height = h + 1;
}

NodeId ClusterForest::bbst_rightmost(NodeId head) const
{
    NodeId cur = head;
    while (cur == head || bbst_internal(head, cur)) {
        const auto& nc = m_nodes[cur];
        const NodeId next = nc.child[1] != kNil ? nc.child[1] : nc.child[0];
        if (next == kNil) return kNil;
        cur = next;
    }
    return cur;
}

std::vector<NodeId> ClusterForest::bbst_leaves(NodeId head) const
{
    std::vector<NodeId> out;
    std::vector<NodeId> stack;
    // in-order over a binary tree with leaves only at the bottom
    const auto& nh = m_nodes[head];
    if (nh.child[1] != kNil) stack.push_back(nh.child[1]);
    if (nh.child[0] != kNil) stack.push_back(nh.child[0]);
    while (!stack.empty()) {
        const NodeId x = stack.back();
        stack.pop_back();
        if (bbst_internal(head, x)) {
            stack.push_back(m_nodes[x].child[1]);
            stack.push_back(m_nodes[x].child[0]);
        } else {
            out.push_back(x);
        }
    }
    return out;
}

void ClusterForest::bbst_rotate(NodeId x)
{
    const NodeKind kind = m_nodes[x].kind;
    auto internal = [&](NodeId c) { return c != kNil && m_nodes[c].kind == kind && !m_nodes[c].head; };
    auto h = [&](NodeId c) { return internal(c) ? m_nodes[c].height : 0; };
    const NodeId L = m_nodes[x].child[0];
    const NodeId R = m_nodes[x].child[1];
    if (L == kNil || R == kNil) return;
    const int hl = h(L), hr = h(R);
    if (hl > hr + 1) {
        const NodeId LL = m_nodes[L].child[0], LR = m_nodes[L].child[1];
        if (h(LL) >= h(LR)) {
            set_child(L, 0, LR);
            set_child(L, 1, R);
            set_child(x, 0, LL);
            set_child(x, 1, L);
            bbst_fix_height(L);
        } else {
            const NodeId LRL = m_nodes[LR].child[0], LRR = m_nodes[LR].child[1];
            set_child(L, 1, LRL);
            set_child(LR, 0, LRR);
            set_child(LR, 1, R);
            set_child(x, 0, L);
            set_child(x, 1, LR);
            bbst_fix_height(L);
            bbst_fix_height(LR);
        }
    } else if (hr > hl + 1) {
        const NodeId RL = m_nodes[R].child[0], RR = m_nodes[R].child[1];
        if (h(RR) >= h(RL)) {
            set_child(R, 1, RL);
            set_child(R, 0, L);
            set_child(x, 0, R);
            set_child(x, 1, RR);
            bbst_fix_height(R);
        } else {
            const NodeId RLL = m_nodes[RL].child[0], RLR = m_nodes[RL].child[1];
            set_child(RL, 1, RLL);
            set_child(RL, 0, L);
            set_child(R, 0, RLR);
            set_child(x, 0, RL);
            set_child(x, 1, R);
            bbst_fix_height(RL);
            bbst_fix_height(R);
        }
    }
    bbst_fix_height(x);
}

void ClusterForest::bbst_rebalance(NodeId head, NodeId from)
{
    NodeId cur = from;
    while (true) {
        bbst_rotate(cur);
        bbst_fix_height(cur);
        if (cur == head) break;
        cur = m_nodes[cur].parent;
    }
}

void ClusterForest::bbst_insert(NodeId head, NodeId leaf)
{
    auto& nh = m_nodes[head];
    const auto key = order_key(head, leaf);
    if (nh.count == 0) {
        set_child(head, 0, leaf);
    } else if (nh.count == 1) {
        const NodeId y = nh.child[0];
        if (key < order_key(head, y)) {
            set_child(head, 0, leaf);
            set_child(head, 1, y);
        } else {
            set_child(head, 1, leaf);
        }
        bbst_fix_height(head);
    } else {
        NodeId cur = head;
        while (true) {
            const NodeId left_max = [&] {
                NodeId c = m_nodes[cur].child[0];
                while (bbst_internal(head, c)) c = m_nodes[c].child[1];
                return c;
            }();
            const int s = key < order_key(head, left_max) ? 0 : 1;
            const NodeId c = m_nodes[cur].child[s];
            if (bbst_internal(head, c)) {
                cur = c;
                continue;
            }
            const NodeId mid = alloc(m_nodes[head].kind, m_nodes[head].level);
            if (key < order_key(head, c)) {
                set_child(mid, 0, leaf);
                set_child(mid, 1, c);
            } else {
                set_child(mid, 0, c);
                set_child(mid, 1, leaf);
            }
            m_nodes[mid].height = 1;
            set_child(cur, s, mid);
            break;
        }
        bbst_rebalance(head, cur);
    }
    ++m_nodes[head].count;
}

void ClusterForest::bbst_erase(NodeId head, NodeId leaf)
{
    const NodeId p = m_nodes[leaf].parent;
    if (p == kNil) throw AuditError("erasing a detached leaf");
    const int s = child_slot(p, leaf);
    auto& nh = m_nodes[head];
    if (p == head) {
        if (nh.count == 1) {
            nh.child[0] = kNil;
            mark(head);
        } else if (nh.count == 2) {
            const NodeId other = nh.child[1 - s];
            set_child(head, 0, other);
            m_nodes[head].child[1] = kNil;
        } else {
            const NodeId sib = nh.child[1 - s];
            const NodeId a = m_nodes[sib].child[0], b = m_nodes[sib].child[1];
            set_child(head, 0, a);
            set_child(head, 1, b);
            release(sib);
            bbst_rebalance(head, head);
        }
    } else {
        const NodeId g = m_nodes[p].parent;
        const int gs = child_slot(g, p);
        const NodeId sib = m_nodes[p].child[1 - s];
        set_child(g, gs, sib);
        release(p);
        bbst_rebalance(head, g);
    }
    m_nodes[leaf].parent = kNil;
    --m_nodes[head].count;
    if (m_nodes[head].count <= 1) m_nodes[head].height = m_nodes[head].count;
}

void ClusterForest::bbst_free_internals(NodeId head)
{
    std::vector<NodeId> stack;
    for (NodeId c : m_nodes[head].child)
        if (c != kNil) stack.push_back(c);
    while (!stack.empty()) {
        const NodeId x = stack.back();
        stack.pop_back();
        if (bbst_internal(head, x)) {
            for (NodeId c : m_nodes[x].child) stack.push_back(c);
            release(x);
        } else {
            m_nodes[x].parent = kNil;
        }
    }
    m_nodes[head].child[0] = m_nodes[head].child[1] = kNil;
    m_nodes[head].count = 0;
    m_nodes[head].height = 0;
    mark(head);
}

NodeId ClusterForest::bbst_make(NodeId head, const std::vector<NodeId>& leaves, std::size_t lo, std::size_t hi)
{
    if (hi - lo == 1) return leaves[lo];
    const NodeId mid = alloc(m_nodes[head].kind, m_nodes[head].level);
    const std::size_t m = lo + (hi - lo + 1) / 2;
    set_child(mid, 0, bbst_make(head, leaves, lo, m));
    set_child(mid, 1, bbst_make(head, leaves, m, hi));
    bbst_fix_height(mid);
    return mid;
}

void ClusterForest::bbst_build(NodeId head, const std::vector<NodeId>& sorted_leaves)
{
    const std::size_t k = sorted_leaves.size();
    if (k == 1) {
        set_child(head, 0, sorted_leaves[0]);
    } else if (k >= 2) {
        const std::size_t m = (k + 1) / 2;
        set_child(head, 0, bbst_make(head, sorted_leaves, 0, m));
        set_child(head, 1, bbst_make(head, sorted_leaves, m, k));
    }
    m_nodes[head].count = static_cast<std::uint32_t>(k);
    if (k >= 2) bbst_fix_height(head);
    else m_nodes[head].height = static_cast<int>(k);
}

// --- rank trees ---------------------------------------------------------------------------

std::vector<NodeId> ClusterForest::pair_roots(std::vector<NodeId> roots, NodeKind kind, int level)
{
    // pair equal-rank roots, smallest rank first, until all ranks are distinct
    while (true) {
        std::sort(roots.begin(), roots.end(), [&](NodeId a, NodeId b) {
            if (m_nodes[a].rank != m_nodes[b].rank) return m_nodes[a].rank < m_nodes[b].rank;
            return a < b;
        });
        std::size_t i = 0;
        while (i + 1 < roots.size() && m_nodes[roots[i]].rank != m_nodes[roots[i + 1]].rank) ++i;
        if (i + 1 >= roots.size()) break;
        const NodeId a = roots[i], b = roots[i + 1];
        const NodeId r = alloc(kind, level);
        m_nodes[r].rank = m_nodes[a].rank + 1;
        set_child(r, 0, a);
        set_child(r, 1, b);
        roots.erase(roots.begin() + static_cast<std::ptrdiff_t>(i), roots.begin() + static_cast<std::ptrdiff_t>(i) + 2);
        roots.push_back(r);
    }
    return roots;
}

std::vector<NodeId> ClusterForest::dismantle_heavy(NodeId u)
{
    std::vector<NodeId> roots;
    NodeId r = m_nodes[u].child[0];
    if (r == kNil) return roots;
    m_nodes[u].child[0] = kNil;
    mark(u);
    while (m_nodes[r].kind == NodeKind::RANK_PATH) {
        const NodeId a = m_nodes[r].child[0], b = m_nodes[r].child[1];
        release(r);
        m_nodes[a].parent = kNil;
        roots.push_back(a);
        r = b;
    }
    m_nodes[r].parent = kNil;
    roots.push_back(r);
    return roots;
}

void ClusterForest::build_heavy(NodeId u, std::vector<NodeId> roots)
{
    std::sort(roots.begin(), roots.end(), [&](NodeId a, NodeId b) {
        if (m_nodes[a].rank != m_nodes[b].rank) return m_nodes[a].rank > m_nodes[b].rank;
        return a < b;
    });
    if (roots.empty()) {
        m_nodes[u].child[0] = kNil;
        mark(u);
        return;
    }
    NodeId cur = roots.back();
    for (std::size_t t = roots.size() - 1; t-- > 0;) {
        const NodeId path = alloc(NodeKind::RANK_PATH, m_nodes[u].level);
        set_child(path, 0, roots[t]);
        set_child(path, 1, cur);
        m_nodes[path].rank = std::max(m_nodes[roots[t]].rank, m_nodes[cur].rank);
        cur = path;
    }
    set_child(u, 0, cur);
}

std::vector<NodeId> ClusterForest::strip_rank_ancestors(NodeId x, NodeKind kind, NodeId* old_root)
{
    std::vector<NodeId> pieces;
    std::vector<NodeId> chain;
    NodeId cur = x;
    while (m_nodes[cur].parent != kNil && m_nodes[m_nodes[cur].parent].kind == kind) {
        const NodeId p = m_nodes[cur].parent;
        const NodeId sib = m_nodes[p].child[0] == cur ? m_nodes[p].child[1] : m_nodes[p].child[0];
        pieces.push_back(sib);
        chain.push_back(p);
        cur = p;
    }
    if (old_root) *old_root = cur;
    for (NodeId p : chain) release(p);
    for (NodeId s : pieces) m_nodes[s].parent = kNil;
    m_nodes[x].parent = kNil;
    return pieces;
}

// --- local trees --------------------------------------------------------------------------

NodeId ClusterForest::buffer_head(NodeId u) const
{
    const NodeId top = top_head(u);
    NodeId cur = top;
    while (cur == top || bbst_internal(top, cur)) cur = m_nodes[cur].child[0];
    if (cur == kNil || m_nodes[cur].kind != NodeKind::BUFFER) throw AuditError("light tree has no buffer");
    return cur;
}

NodeId ClusterForest::bottom_head_of(NodeId leaf) const
{
    NodeId cur = m_nodes[leaf].parent;
    while (cur != kNil && !(m_nodes[cur].kind == NodeKind::BOTTOM && m_nodes[cur].head)) cur = m_nodes[cur].parent;
    if (cur == kNil) throw AuditError("bottom tree head not found");
    return cur;
}

std::vector<NodeId> ClusterForest::light_roots(NodeId u) const
{
    std::vector<NodeId> out;
    for (NodeId x : bbst_leaves(top_head(u)))
        if (m_nodes[x].kind != NodeKind::BUFFER) out.push_back(x);
    return out;
}

void ClusterForest::insert_light_pieces(NodeId u, std::vector<NodeId> pieces)
{
    pieces = pair_roots(std::move(pieces), NodeKind::LIGHT_RANK, m_nodes[u].level);
    for (NodeId r : pieces) bbst_insert(top_head(u), r);
}

void ClusterForest::refresh_bottom(NodeId u, NodeId bottom)
{
    auto& nb = m_nodes[bottom];
    const int new_rank = nb.count == 0 ? -1 : m_nodes[bbst_rightmost(bottom)].rank;
    if (nb.count != 0 && new_rank == nb.rank) return;
    // the bottom tree's rank changed: rebuild the rank trees above it
    NodeId root = bottom;
    NodeId cur = bottom;
    while (m_nodes[cur].parent != kNil && m_nodes[m_nodes[cur].parent].kind == NodeKind::LIGHT_RANK)
        cur = m_nodes[cur].parent;
    root = cur;
    bbst_erase(top_head(u), root);
    auto pieces = strip_rank_ancestors(bottom, NodeKind::LIGHT_RANK, nullptr);
    if (m_nodes[bottom].count == 0) {
        release(bottom);
    } else {
        m_nodes[bottom].rank = new_rank;
        pieces.push_back(bottom);
    }
    insert_light_pieces(u, std::move(pieces));
}

void ClusterForest::retire_buffer(NodeId u)
{
    const NodeId top = top_head(u);
    const NodeId buf = buffer_head(u);
    bbst_erase(top, buf);
    // relabel the whole search tree as a bottom tree
    std::vector<NodeId> stack{buf};
    while (!stack.empty()) {
        const NodeId x = stack.back();
        stack.pop_back();
        if (x == buf || bbst_internal(buf, x)) {
            for (NodeId c : m_nodes[x].child)
                if (c != kNil) stack.push_back(c);
        } else {
            m_nodes[x].slot = Slot::BOTTOM;
        }
    }
    // bbst_internal depends on the head's kind, so relabel internals before the head
    stack.assign({buf});
    std::vector<NodeId> internals;
    while (!stack.empty()) {
        const NodeId x = stack.back();
        stack.pop_back();
        for (NodeId c : m_nodes[x].child)
            if (bbst_internal(buf, c)) {
                internals.push_back(c);
                stack.push_back(c);
            }
    }
    for (NodeId x : internals) {
        m_nodes[x].kind = NodeKind::BOTTOM;
        mark(x);
    }
    m_nodes[buf].kind = NodeKind::BOTTOM;
    m_nodes[buf].rank = m_nodes[bbst_rightmost(buf)].rank;
    mark(buf);
    const NodeId fresh = alloc(NodeKind::BUFFER, m_nodes[u].level);
    m_nodes[fresh].head = true;
    m_nodes[fresh].rank = -1;
    bbst_insert(top, fresh);
    insert_light_pieces(u, {buf});
}

void ClusterForest::buffer_insert(NodeId u, NodeId x)
{
    if (m_nodes[buffer_head(u)].count >= m_thr.s_max) retire_buffer(u);
    bbst_insert(buffer_head(u), x);
    m_nodes[x].slot = Slot::BUFFER;
}

void ClusterForest::add_heavy(NodeId u, const std::vector<NodeId>& xs)
{
    if (xs.empty()) return;
    auto roots = dismantle_heavy(u);
    for (NodeId x : xs) {
        m_nodes[x].slot = Slot::HEAVY;
        roots.push_back(x);
        if (m_shortcuts) m_shortcuts->deposit(m_thr.heavy_leaf_credits());
    }
    build_heavy(u, pair_roots(std::move(roots), NodeKind::RANK_TREE, m_nodes[u].level));
}

void ClusterForest::add_child(NodeId u, NodeId x)
{
    if (m_thr.heavy(m_nodes[x].size, m_nodes[u].size)) {
        add_heavy(u, {x});
    } else {
        buffer_insert(u, x);
        if (m_shortcuts) m_shortcuts->deposit(m_thr.heavy_leaf_credits());
    }
}

void ClusterForest::remove_child(NodeId u, NodeId x)
{
    switch (m_nodes[x].slot) {
    case Slot::HEAVY: {
        auto roots = dismantle_heavy(u);
        NodeId old_root = kNil;
        auto pieces = strip_rank_ancestors(x, NodeKind::RANK_TREE, &old_root);
        roots.erase(std::find(roots.begin(), roots.end(), old_root));
        roots.insert(roots.end(), pieces.begin(), pieces.end());
        build_heavy(u, pair_roots(std::move(roots), NodeKind::RANK_TREE, m_nodes[u].level));
        break;
    }
    case Slot::BUFFER:
        bbst_erase(buffer_head(u), x);
        break;
    case Slot::BOTTOM: {
        const NodeId b = bottom_head_of(x);
        bbst_erase(b, x);
        refresh_bottom(u, b);
        break;
    }
    case Slot::NONE:
        throw AuditError("removing a node that is not a child");
    }
    m_nodes[x].slot = Slot::NONE;
    m_nodes[x].parent = kNil;
}

void ClusterForest::build_initial(const std::vector<std::vector<VertexId>>& components)
{
    for (const auto& comp : components) {
        if (comp.size() < 2) continue;
        const NodeId r = new_cluster(0);
        m_nodes[r].size = static_cast<std::uint32_t>(comp.size());
        m_nodes[r].rank = floor_log2(comp.size());
        std::vector<NodeId> heavy;
        for (VertexId v : comp) {
            if (m_thr.heavy(1, comp.size())) heavy.push_back(v);
            else buffer_insert(r, v);
        }
        add_heavy(r, heavy);
    }
    flush();
    if (m_shortcuts) {
        m_shortcuts->m_ledger = CreditLedger{};
        m_shortcuts->set_endowment(m_shortcuts->required_credits());
    }
}

NodeId ClusterForest::merge_clusters(const std::vector<NodeId>& nodes)
{
    if (nodes.empty()) throw std::invalid_argument("merge of an empty node set");
    if (nodes.size() == 1) return nodes.front();
    const NodeId p = cluster_parent(nodes.front());
    if (p == kNil) throw std::invalid_argument("merged nodes have no parent cluster");
    std::uint32_t total = 0;
    for (NodeId x : nodes) {
        if (cluster_parent(x) != p) throw std::invalid_argument("merged nodes are not siblings");
        total += m_nodes[x].size;
    }
    ++m_counters.merges;
    const int level = m_nodes[p].level + 1;
    for (NodeId x : nodes) remove_child(p, x);

    const NodeId w = alloc(NodeKind::CLUSTER, level);
    m_nodes[w].size = total;
    m_nodes[w].rank = floor_log2(total);
    const NodeId top = alloc(NodeKind::TOP, level);
    m_nodes[top].head = true;
    set_child(w, 1, top);

    std::vector<NodeId> heavy_roots, light_leaves, light_pieces, buffers;
    for (NodeId x : nodes) {
        if (m_nodes[x].kind == NodeKind::VERTEX) {
            (m_thr.heavy(1, total) ? heavy_roots : light_leaves).push_back(x);
            continue;
        }
        auto roots = dismantle_heavy(x);
        std::vector<NodeId> heavy_leaves;
        for (NodeId r : roots) {
            std::vector<NodeId> stack{r};
            while (!stack.empty()) {
                const NodeId y = stack.back();
                stack.pop_back();
                if (m_nodes[y].kind == NodeKind::RANK_TREE) {
                    stack.push_back(m_nodes[y].child[0]);
                    stack.push_back(m_nodes[y].child[1]);
                } else {
                    heavy_leaves.push_back(y);
                }
            }
        }
        std::sort(heavy_leaves.begin(), heavy_leaves.end());
        for (NodeId leaf : heavy_leaves) {
            if (m_thr.heavy(m_nodes[leaf].size, total)) continue;
            NodeId old_root = kNil;
            auto pieces = strip_rank_ancestors(leaf, NodeKind::RANK_TREE, &old_root);
            roots.erase(std::find(roots.begin(), roots.end(), old_root));
            roots.insert(roots.end(), pieces.begin(), pieces.end());
            light_leaves.push_back(leaf);
        }
        heavy_roots.insert(heavy_roots.end(), roots.begin(), roots.end());

        const NodeId old_top = top_head(x);
        for (NodeId leaf : bbst_leaves(old_top)) {
            (m_nodes[leaf].kind == NodeKind::BUFFER ? buffers : light_pieces).push_back(leaf);
        }
        bbst_free_internals(old_top);
        release(old_top);
        m_nodes[x].child[0] = m_nodes[x].child[1] = kNil;
        release(x);
    }

    // buffers: the largest absorbs the others leaf by leaf; full buffers turn into bottom trees
    std::sort(buffers.begin(), buffers.end(), [&](NodeId a, NodeId b) {
        if (m_nodes[a].count != m_nodes[b].count) return m_nodes[a].count > m_nodes[b].count;
        return a < b;
    });
    NodeId buf;
    if (buffers.empty()) {
        buf = alloc(NodeKind::BUFFER, level);
        m_nodes[buf].head = true;
        m_nodes[buf].rank = -1;
    } else {
        buf = buffers.front();
        m_nodes[buf].parent = kNil;
    }
    auto to_bottom = [&](NodeId b) {
        std::vector<NodeId> internals, stack{b};
        while (!stack.empty()) {
            const NodeId x = stack.back();
            stack.pop_back();
            for (NodeId c : m_nodes[x].child) {
                if (c == kNil) continue;
                if (bbst_internal(b, c)) {
                    internals.push_back(c);
                    stack.push_back(c);
                } else {
                    m_nodes[c].slot = Slot::BOTTOM;
                }
            }
        }
        for (NodeId x : internals) {
            m_nodes[x].kind = NodeKind::BOTTOM;
            mark(x);
        }
        m_nodes[b].kind = NodeKind::BOTTOM;
        m_nodes[b].rank = m_nodes[bbst_rightmost(b)].rank;
        mark(b);
        light_pieces.push_back(b);
    };
    auto absorb = [&](NodeId leaf) {
        if (m_nodes[buf].count >= m_thr.s_max) {
            to_bottom(buf);
            buf = alloc(NodeKind::BUFFER, level);
            m_nodes[buf].head = true;
            m_nodes[buf].rank = -1;
        }
        bbst_insert(buf, leaf);
        m_nodes[leaf].slot = Slot::BUFFER;
    };
    for (std::size_t b = 1; b < buffers.size(); ++b) {
        const auto leaves = bbst_leaves(buffers[b]);
        bbst_free_internals(buffers[b]);
        release(buffers[b]);
        for (NodeId leaf : leaves) absorb(leaf);
    }
    std::sort(light_leaves.begin(), light_leaves.end());
    for (NodeId leaf : light_leaves) absorb(leaf);

    for (NodeId r : heavy_roots) {
        std::vector<NodeId> stack{r};
        while (!stack.empty()) {
            const NodeId y = stack.back();
            stack.pop_back();
            if (m_nodes[y].kind == NodeKind::RANK_TREE) {
                stack.push_back(m_nodes[y].child[0]);
                stack.push_back(m_nodes[y].child[1]);
            } else {
                m_nodes[y].slot = Slot::HEAVY;
                if (m_shortcuts) m_shortcuts->deposit(m_thr.heavy_leaf_credits());
            }
        }
    }
    build_heavy(w, pair_roots(std::move(heavy_roots), NodeKind::RANK_TREE, level));

    auto tops = pair_roots(std::move(light_pieces), NodeKind::LIGHT_RANK, level);
    tops.push_back(buf);
    std::sort(tops.begin(), tops.end(), [&](NodeId a, NodeId b) { return order_key(top, a) < order_key(top, b); });
    bbst_build(top, tops);

    add_child(p, w);
    flush();
    return w;
}

NodeId ClusterForest::split_cluster(NodeId p, NodeId w)
{
    if (!alive(p) || m_nodes[p].kind != NodeKind::CLUSTER || cluster_parent(w) != p)
        throw std::invalid_argument("split: w is not a child of p");
    ++m_counters.splits;
    const NodeId grand = cluster_parent(p);
    remove_child(p, w);
    m_nodes[p].size -= m_nodes[w].size;
    m_nodes[p].rank = floor_log2(m_nodes[p].size);

    const NodeId fresh = new_cluster(m_nodes[p].level);
    m_nodes[fresh].size = m_nodes[w].size;
    m_nodes[fresh].rank = m_nodes[w].rank;
    add_child(fresh, w);

    // light children of p that turned heavy
    std::vector<NodeId> promote;
    const std::uint32_t np = m_nodes[p].size;
    {
        const NodeId buf = buffer_head(p);
        auto leaves = bbst_leaves(buf);
        for (auto it = leaves.rbegin(); it != leaves.rend() && m_thr.heavy(m_nodes[*it].size, np); ++it) {
            bbst_erase(buf, *it);
            promote.push_back(*it);
        }
    }
    std::vector<NodeId> bottoms;
    for (NodeId r : light_roots(p)) {
        std::vector<NodeId> stack{r};
        while (!stack.empty()) {
            const NodeId y = stack.back();
            stack.pop_back();
            if (m_nodes[y].kind == NodeKind::LIGHT_RANK) {
                stack.push_back(m_nodes[y].child[0]);
                stack.push_back(m_nodes[y].child[1]);
            } else {
                bottoms.push_back(y);
            }
        }
    }
    std::sort(bottoms.begin(), bottoms.end());
    for (NodeId b : bottoms) {
        auto leaves = bbst_leaves(b);
        bool changed = false;
        for (auto it = leaves.rbegin(); it != leaves.rend() && m_thr.heavy(m_nodes[*it].size, np); ++it) {
            bbst_erase(b, *it);
            promote.push_back(*it);
            changed = true;
        }
        if (changed) refresh_bottom(p, b);
    }
    add_heavy(p, promote);

    if (grand != kNil) {
        switch (m_nodes[p].slot) {
        case Slot::HEAVY:
            remove_child(grand, p);
            if (m_thr.heavy(m_nodes[p].size, m_nodes[grand].size)) {
                auto roots = dismantle_heavy(grand);
                m_nodes[p].slot = Slot::HEAVY;
                roots.push_back(p);
                build_heavy(grand, pair_roots(std::move(roots), NodeKind::RANK_TREE, m_nodes[grand].level));
            } else {
                buffer_insert(grand, p);
            }
            break;
        case Slot::BUFFER: {
            const NodeId buf = buffer_head(grand);
            bbst_erase(buf, p);
            bbst_insert(buf, p);
            break;
        }
        case Slot::BOTTOM: {
            const NodeId b = bottom_head_of(p);
            bbst_erase(b, p);
            bbst_insert(b, p);
            refresh_bottom(grand, b);
            break;
        }
        case Slot::NONE:
            throw AuditError("cluster without a slot in its parent");
        }
        add_child(grand, fresh);
    }
    flush();
    return fresh;
}

// --- edge lists ---------------------------------------------------------------------------

std::vector<EdgeId> ClusterForest::list_items(VertexId x, int level) const
{
    std::vector<EdgeId> out;
    for (EdgeId e = m_head[idx(x, level)]; e != kNoEdge; e = m_next[side(e, x)]) out.push_back(e);
    return out;
}

void ClusterForest::load_edges(const std::vector<EdgeId>& nontree_sorted, const std::vector<EdgeId>& tree)
{
    const std::size_t m = m_edges.edge_count();
    m_next.assign(2 * m, kNoEdge);
    m_prev.assign(2 * m, kNoEdge);
    m_tree_pos.assign(2 * m, 0);
    auto append = [&](VertexId x, EdgeId e) {
        const std::size_t i = idx(x, m_edges[e].level);
        const std::size_t s = side(e, x);
        m_prev[s] = m_tail[i];
        m_next[s] = kNoEdge;
        if (m_tail[i] != kNoEdge) m_next[side(m_tail[i], x)] = e;
        else m_head[i] = e;
        m_tail[i] = e;
    };
    for (EdgeId e : nontree_sorted) {
        append(m_edges[e].endpoints.first, e);
        append(m_edges[e].endpoints.second, e);
    }
    for (EdgeId e : tree) {
        for (VertexId x : {m_edges[e].endpoints.first, m_edges[e].endpoints.second}) {
            m_tree_pos[side(e, x)] = static_cast<std::uint32_t>(m_tree_inc[x].size());
            m_tree_inc[x].push_back(e);
            ++m_tree_count[idx(x, m_edges[e].level)];
        }
    }
    // full bottom-up recompute
    std::vector<std::pair<int, NodeId>> order;
    for (NodeId x = 0; x < m_nodes.size(); ++x)
        if (alive(x)) order.emplace_back(depth(x), x);
    std::sort(order.begin(), order.end(), std::greater<>());
    for (auto [d, x] : order) recompute(x);
    for (NodeId x : m_dirty) m_nodes[x].dirty = false;
    m_dirty.clear();
    if (m_shortcuts) {
        // initial queue construction is part of setup, not charged to the ledger
        const double before = m_shortcuts->m_ledger.spent;
        m_shortcuts->rebuild_all();
        m_shortcuts->m_ledger.spent = before;
    }
}

void ClusterForest::remove_nontree(EdgeId e)
{
    const auto [a, b] = m_edges[e].endpoints;
    const int lvl = m_edges[e].level;
    for (VertexId x : {a, b}) {
        const std::size_t i = idx(x, lvl);
        const std::size_t s = side(e, x);
        const EdgeId pv = m_prev[s], nx = m_next[s];
        if (pv != kNoEdge) m_next[side(pv, x)] = nx;
        else m_head[i] = nx;
        if (nx != kNoEdge) m_prev[side(nx, x)] = pv;
        else m_tail[i] = pv;
        m_prev[s] = m_next[s] = kNoEdge;
    }
    update_paths(a, std::uint64_t{1} << lvl);
    update_paths(b, std::uint64_t{1} << lvl);
    if (m_shortcuts) {
        m_shortcuts->refresh_vertex(a, lvl);
        m_shortcuts->refresh_vertex(b, lvl);
    }
}

void ClusterForest::remove_tree(EdgeId e)
{
    const auto [a, b] = m_edges[e].endpoints;
    const int lvl = m_edges[e].level;
    for (VertexId x : {a, b}) {
        auto& inc = m_tree_inc[x];
        const std::uint32_t pos = m_tree_pos[side(e, x)];
        const EdgeId moved = inc.back();
        inc[pos] = moved;
        inc.pop_back();
        if (moved != e) m_tree_pos[side(moved, x)] = pos;
        --m_tree_count[idx(x, lvl)];
    }
    update_paths(a, std::uint64_t{1} << lvl);
    update_paths(b, std::uint64_t{1} << lvl);
}

void ClusterForest::convert_to_tree(EdgeId e)
{
    remove_nontree(e);
    const int lvl = m_edges[e].level;
    for (VertexId x : {m_edges[e].endpoints.first, m_edges[e].endpoints.second}) {
        m_tree_pos[side(e, x)] = static_cast<std::uint32_t>(m_tree_inc[x].size());
        m_tree_inc[x].push_back(e);
        ++m_tree_count[idx(x, lvl)];
    }
    m_edges[e].status = EdgeStatus::TREE;
    update_paths(m_edges[e].endpoints.first, std::uint64_t{1} << lvl);
    update_paths(m_edges[e].endpoints.second, std::uint64_t{1} << lvl);
}

void ClusterForest::promote_nontree(EdgeId e)
{
    const auto [a, b] = m_edges[e].endpoints;
    const int lvl = m_edges[e].level;
    if (lvl >= m_thr.level_max) throw AuditError("promotion beyond the maximum level");
    if (m_head[idx(a, lvl)] != e || m_head[idx(b, lvl)] != e)
        throw AuditError("promoted non-tree edge is not at the head of both lists");
    for (VertexId x : {a, b}) {
        const std::size_t s = side(e, x);
        const EdgeId nx = m_next[s];
        m_head[idx(x, lvl)] = nx;
        if (nx != kNoEdge) m_prev[side(nx, x)] = kNoEdge;
        else m_tail[idx(x, lvl)] = kNoEdge;
        const std::size_t i = idx(x, lvl + 1);
        m_prev[s] = m_tail[i];
        m_next[s] = kNoEdge;
        if (m_tail[i] != kNoEdge) m_next[side(m_tail[i], x)] = e;
        else m_head[i] = e;
        m_tail[i] = e;
    }
    m_edges[e].level = lvl + 1;
    ++m_counters.promotions;
    const std::uint64_t mask = std::uint64_t{3} << lvl;
    update_paths(a, mask);
    update_paths(b, mask);
    if (m_shortcuts) {
        m_shortcuts->refresh_vertex(a, lvl);
        m_shortcuts->refresh_vertex(b, lvl);
        m_shortcuts->refresh_vertex(a, lvl + 1);
        m_shortcuts->refresh_vertex(b, lvl + 1);
    }
}

void ClusterForest::promote_tree(EdgeId e)
{
    const auto [a, b] = m_edges[e].endpoints;
    const int lvl = m_edges[e].level;
    if (lvl >= m_thr.level_max) throw AuditError("promotion beyond the maximum level");
    for (VertexId x : {a, b}) {
        --m_tree_count[idx(x, lvl)];
        ++m_tree_count[idx(x, lvl + 1)];
    }
    m_edges[e].level = lvl + 1;
    ++m_counters.promotions;
    const std::uint64_t mask = std::uint64_t{3} << lvl;
    update_paths(a, mask);
    update_paths(b, mask);
}

// --- aggregates ---------------------------------------------------------------------------

void ClusterForest::recompute_leaf(VertexId x)
{
    auto& nx = m_nodes[x];
    nx.size = 1;
    nx.rank = 0;
    nx.tree_bits = nx.nontree_bits = 0;
    for (int l = 0; l < m_levels; ++l) {
        if (m_tree_count[idx(x, l)] != 0) nx.tree_bits |= std::uint64_t{1} << l;
        const EdgeId h = m_head[idx(x, l)];
        if (h != kNoEdge) {
            nx.nontree_bits |= std::uint64_t{1} << l;
            m_min[idx(x, l)] = m_edges[h].key;
        } else {
            m_min[idx(x, l)] = WeightKey::absent();
        }
    }
}

void ClusterForest::recompute(NodeId x)
{
    auto& nx = m_nodes[x];
    if (nx.kind == NodeKind::VERTEX) {
        recompute_leaf(x);
        return;
    }
    nx.size = 0;
    nx.tree_bits = nx.nontree_bits = 0;
    WeightKey* mins = &m_min[static_cast<std::size_t>(x) * m_levels];
    std::fill_n(mins, m_levels, WeightKey::absent());
    for (NodeId c : nx.child) {
        if (c == kNil) continue;
        const auto& nc = m_nodes[c];
        nx.size += nc.size;
        nx.tree_bits |= nc.tree_bits;
        nx.nontree_bits |= nc.nontree_bits;
        const WeightKey* cm = &m_min[static_cast<std::size_t>(c) * m_levels];
        for (int l = 0; l < m_levels; ++l) mins[l] = std::min(mins[l], cm[l]);
    }
    if (nx.kind == NodeKind::CLUSTER && nx.size > 0) nx.rank = floor_log2(nx.size);
}

void ClusterForest::update_paths(VertexId x, std::uint64_t mask)
{
    recompute_leaf(x);
    NodeId cur = m_nodes[x].parent;
    while (cur != kNil) {
        auto& nc = m_nodes[cur];
        std::uint64_t tb = 0, nb = 0;
        WeightKey* mins = &m_min[static_cast<std::size_t>(cur) * m_levels];
        bool changed = false;
        for (int l = 0; l < m_levels; ++l) {
            if (!((mask >> l) & 1)) continue;
            WeightKey best = WeightKey::absent();
            for (NodeId c : nc.child) {
                if (c == kNil) continue;
                best = std::min(best, m_min[static_cast<std::size_t>(c) * m_levels + l]);
            }
            if (best != mins[l]) {
                mins[l] = best;
                changed = true;
            }
        }
        for (NodeId c : nc.child) {
            if (c == kNil) continue;
            tb |= m_nodes[c].tree_bits;
            nb |= m_nodes[c].nontree_bits;
        }
        if ((tb & mask) != (nc.tree_bits & mask) || (nb & mask) != (nc.nontree_bits & mask)) changed = true;
        nc.tree_bits = (nc.tree_bits & ~mask) | (tb & mask);
        nc.nontree_bits = (nc.nontree_bits & ~mask) | (nb & mask);
        if (!changed) break;
        cur = nc.parent;
    }
}

void ClusterForest::flush()
{
    std::vector<NodeId> dirty;
    dirty.reserve(m_dirty.size());
    for (NodeId x : m_dirty) {
        m_nodes[x].dirty = false;
        if (alive(x)) dirty.push_back(x);
    }
    m_dirty.clear();

    std::unordered_map<NodeId, int> depth_of;
    for (NodeId x : dirty) {
        for (NodeId y = x; y != kNil; y = m_nodes[y].parent) {
            if (depth_of.contains(y)) break;
            depth_of.emplace(y, 0);
        }
    }
    std::vector<std::pair<int, NodeId>> order;
    order.reserve(depth_of.size());
    for (auto& [x, d] : depth_of) order.emplace_back(depth(x), x);
    std::sort(order.begin(), order.end(), std::greater<>());
    for (auto [d, x] : order) recompute(x);

    if (m_shortcuts) {
        for (NodeId x : m_pending_free) m_shortcuts->on_release(x);
        m_shortcuts->on_structure(dirty);
    }
    m_free.insert(m_free.end(), m_pending_free.begin(), m_pending_free.end());
    m_pending_free.clear();
}

} // namespace dmsf
