#include <dmsf/shortcuts.hpp>

#include <algorithm>
#include <bit>
#include <unordered_set>

namespace dmsf {

ShortcutSystem::ShortcutSystem(ClusterForest& forest, QueueKind kind) : m_forest(&forest), m_kind(kind) {}

void ShortcutSystem::ensure_size()
{
    const std::size_t cap = m_forest->node_capacity();
    if (m_is_queue.size() < cap) {
        m_is_queue.resize(cap, 0);
        m_queues.resize(cap);
    }
}

bool ShortcutSystem::heavy_tree_node(NodeId x) const
{
    const auto& f = *m_forest;
    const auto& nx = f.node(x);
    if (nx.parent == kNil) return false;
    const auto& np = f.node(nx.parent);
    const bool in_heavy = np.kind == NodeKind::RANK_TREE || np.kind == NodeKind::RANK_PATH ||
                          (np.kind == NodeKind::CLUSTER && np.child[0] == x);
    if (!in_heavy) return false;
    // some multiple of k in [rank(x), rank(parent) - 1]
    const int k = f.thresholds().queue_spacing;
    const int hi = np.rank - 1;
    if (hi < nx.rank || hi < 0) return false;
    return (hi / k) * k >= nx.rank;
}

bool ShortcutSystem::light_rank_node(NodeId x) const
{
    const auto& nx = m_forest->node(x);
    return nx.kind == NodeKind::LIGHT_RANK && nx.rank % m_forest->thresholds().queue_spacing == 0;
}

bool ShortcutSystem::classify(NodeId x) const
{
    const auto& f = *m_forest;
    if (!f.alive(x)) return false;
    const auto& nx = f.node(x);
    switch (nx.kind) {
    case NodeKind::VERTEX:
        return true;
    case NodeKind::CLUSTER:
        if (nx.level % f.thresholds().queue_spacing == 0) return true;
        break;
    case NodeKind::LIGHT_RANK:
        if (light_rank_node(x)) return true;
        break;
    case NodeKind::BUFFER:
    case NodeKind::BOTTOM:
    case NodeKind::TOP:
        if (nx.head) return true;
        break;
    default:
        break;
    }
    if (heavy_tree_node(x)) return true;
    // leaves of buffer, bottom and top trees
    if (nx.parent != kNil) {
        const auto& np = f.node(nx.parent);
        const bool search_parent = np.kind == NodeKind::BUFFER || np.kind == NodeKind::BOTTOM || np.kind == NodeKind::TOP;
        if (search_parent) {
            const bool internal = nx.kind == np.kind && !nx.head;
            if (!internal) return true;
        }
    }
    return false;
}

NodeId ShortcutSystem::ascending_queue_node(NodeId v) const
{
    NodeId cur = m_forest->node(v).parent;
    while (cur != kNil && !is_queue(cur)) cur = m_forest->node(cur).parent;
    return cur;
}

std::vector<NodeId> ShortcutSystem::nearest_descending_queue_nodes(NodeId u, std::uint64_t* visits) const
{
    std::vector<NodeId> out;
    std::vector<NodeId> stack;
    for (NodeId c : m_forest->node(u).child)
        if (c != kNil) stack.push_back(c);
    std::uint64_t steps = 0;
    while (!stack.empty()) {
        const NodeId x = stack.back();
        stack.pop_back();
        ++steps;
        if (is_queue(x)) {
            out.push_back(x);
            continue;
        }
        for (NodeId c : m_forest->node(x).child)
            if (c != kNil) stack.push_back(c);
    }
    if (!visits) return out;
    *visits += steps;
    if (m_forest->node(u).kind == NodeKind::CLUSTER) {
        auto& c = m_forest->m_counters;
        c.max_descendants = std::max<std::uint64_t>(c.max_descendants, out.size());
        if (static_cast<double>(out.size()) > m_forest->thresholds().visit_cap()) ++c.cap_violations;
    }
    return out;
}

WeightKey ShortcutSystem::queue_min(NodeId v, int level) const { return m_forest->min_key(v, level); }

WeightKey ShortcutSystem::scratch_min(NodeId v, int level) const { return m_forest->min_key(v, level); }

MinQueue& ShortcutSystem::queue(NodeId a, int level)
{
    auto& slot = m_queues[a][level];
    if (!slot) slot = make_queue(m_kind);
    return *slot;
}

bool ShortcutSystem::set_entry(NodeId q, NodeId v, int level, WeightKey key)
{
    auto& lq = m_queues[q];
    auto it = lq.find(level);
    auto& c = m_forest->m_counters;
    if (!key.present()) {
        if (it == lq.end() || !it->second->find(v)) return false;
        it->second->erase(v);
        ++c.queue_ops;
        if (it->second->empty()) lq.erase(it);
        return true;
    }
    MinQueue& mq = queue(q, level);
    const auto old = mq.find(v);
    if (old && *old == key) return false;
    if (old) mq.update(v, key);
    else mq.insert(v, key);
    ++c.queue_ops;
    return true;
}

void ShortcutSystem::refresh_vertex(VertexId x, int level)
{
    ensure_size();
    auto& c = m_forest->m_counters;
    NodeId v = x;
    NodeId q = ascending_queue_node(x);
    while (q != kNil) {
        ++c.up_visits;
        if (m_forest->node(q).level < level) break;
        if (!set_entry(q, v, level, m_forest->min_key(v, level))) break;
        v = q;
        q = ascending_queue_node(q);
    }
}

void ShortcutSystem::on_release(NodeId x)
{
    ensure_size();
    m_queues[x].clear();
    m_is_queue[x] = 0;
}

void ShortcutSystem::rebuild_node(NodeId a)
{
    ensure_size();
    m_queues[a].clear();
    const auto& na = m_forest->node(a);
    if (!is_queue(a) || na.kind == NodeKind::VERTEX) return;
    std::uint64_t work = 0;
    const auto ndq = nearest_descending_queue_nodes(a, &work);
    const int top = std::min(na.level, m_forest->level_count() - 1);
    if (top >= 0) {
        const std::uint64_t mask = (std::uint64_t{2} << top) - 1;
        for (NodeId v : ndq) {
            std::uint64_t bits = m_forest->node(v).nontree_bits & mask;
            while (bits != 0) {
                const int i = std::countr_zero(bits);
                bits &= bits - 1;
                queue(a, i).insert(v, m_forest->min_key(v, i));
                ++work;
            }
        }
    }
    auto& c = m_forest->m_counters;
    c.rebuild_work += work;
    c.queue_ops += work;
    m_ledger.spent += static_cast<double>(work);
}

void ShortcutSystem::rebuild_all()
{
    ensure_size();
    for (NodeId x = 0; x < m_forest->node_capacity(); ++x) {
        m_queues[x].clear();
        m_is_queue[x] = classify(x);
    }
    std::vector<std::pair<int, NodeId>> order;
    for (NodeId x = 0; x < m_forest->node_capacity(); ++x)
        if (m_is_queue[x] && m_forest->node(x).kind != NodeKind::VERTEX) order.emplace_back(m_forest->depth(x), x);
    std::sort(order.begin(), order.end(), std::greater<>());
    for (auto [d, x] : order) rebuild_node(x);
}

void ShortcutSystem::on_structure(const std::vector<NodeId>& dirty)
{
    ensure_size();
    const auto& f = *m_forest;
    std::vector<NodeId> cand;
    for (NodeId x : dirty) {
        if (!f.alive(x)) continue;
        cand.push_back(x);
        for (NodeId c : f.node(x).child)
            if (c != kNil) cand.push_back(c);
    }
    std::unordered_set<NodeId> affected;
    for (NodeId x : cand) {
        const bool q = classify(x);
        if (q != static_cast<bool>(m_is_queue[x])) {
            m_is_queue[x] = q;
            if (!q) m_queues[x].clear();
            else if (f.node(x).kind != NodeKind::VERTEX) affected.insert(x);
        }
    }
    for (NodeId x : dirty) {
        if (!f.alive(x)) continue;
        if (is_queue(x) && f.node(x).kind != NodeKind::VERTEX) affected.insert(x);
        const NodeId a = ascending_queue_node(x);
        if (a != kNil) affected.insert(a);
    }
    std::vector<std::pair<int, NodeId>> order;
    for (NodeId a : affected) order.emplace_back(f.depth(a), a);
    std::sort(order.begin(), order.end(), std::greater<>());
    for (auto [d, a] : order) rebuild_node(a);

    // push changed minima from each affected node up to the next affected node
    auto& c = m_forest->m_counters;
    for (auto [d, a] : order) {
        NodeId v = a;
        NodeId q = ascending_queue_node(a);
        while (q != kNil && !affected.contains(q)) {
            ++c.up_visits;
            const int top = std::min(f.node(q).level, f.level_count() - 1);
            bool changed = false;
            for (int i = 0; i <= top; ++i) changed |= set_entry(q, v, i, f.min_key(v, i));
            if (!changed) break;
            v = q;
            q = ascending_queue_node(q);
        }
    }
}

void ShortcutSystem::descend(NodeId from, int level, std::vector<VertexId>& out, std::uint64_t& hops) const
{
    ++hops;
    const auto& nf = m_forest->node(from);
    if (nf.kind == NodeKind::VERTEX) {
        out.push_back(from);
        return;
    }
    const auto& lq = m_queues[from];
    auto it = lq.find(level);
    if (it == lq.end() || it->second->empty()) throw AuditError("empty queue on a shortcut path at node " + std::to_string(from));
    for (const auto& e : it->second->min_entries()) descend(e.elem, level, out, hops);
}

std::vector<VertexId> ShortcutSystem::shortcut_search(NodeId u, int level, Counters* counters) const
{
    std::vector<VertexId> out;
    const auto& f = *m_forest;
    const WeightKey target = f.min_key(u, level);
    if (!target.present()) return out;
    std::uint64_t hops = 0;
    const auto& nu = f.node(u);
    if (nu.kind == NodeKind::VERTEX) {
        out.push_back(u);
        hops = 1;
    } else if (is_queue(u) && level <= nu.level) {
        descend(u, level, out, hops);
    } else {
        const auto ndq = nearest_descending_queue_nodes(u, &hops);
        for (NodeId v : ndq)
            if (f.min_key(v, level) == target) descend(v, level, out, hops);
    }
    if (out.empty() || out.size() > 2) throw AuditError("shortcut search returned " + std::to_string(out.size()) + " leaves");
    if (counters) {
        counters->hops += hops;
        counters->max_hops = std::max(counters->max_hops, hops);
        ++counters->down_searches;
    }
    return out;
}

double ShortcutSystem::required_credits() const
{
    const auto& f = *m_forest;
    const auto& thr = f.thresholds();
    double total = 0.0;
    for (NodeId x = 0; x < f.node_capacity(); ++x) {
        if (!f.alive(x)) continue;
        const auto& nx = f.node(x);
        if (nx.slot == Slot::HEAVY) total += thr.heavy_leaf_credits();
        else if (nx.slot == Slot::BOTTOM) total += 1.0;
        if (nx.kind == NodeKind::BUFFER && nx.head) total += thr.buffer_tree_credits(nx.count);
    }
    return total;
}

std::vector<MinQueue::Entry> ShortcutSystem::queue_entries(NodeId a, int level) const
{
    if (a >= m_queues.size()) return {};
    auto it = m_queues[a].find(level);
    if (it == m_queues[a].end()) return {};
    auto out = it->second->entries();
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.elem < y.elem; });
    return out;
}

std::vector<std::string> ShortcutSystem::audit() const
{
    std::vector<std::string> out;
    const auto& f = *m_forest;
    for (NodeId x = 0; x < f.node_capacity(); ++x) {
        const bool q = classify(x);
        if (q != is_queue(x)) {
            out.push_back("queue classification stale at node " + std::to_string(x));
            continue;
        }
        if (!f.alive(x)) continue;
        const auto& nx = f.node(x);
        static const LevelQueues none;
        const auto& lq = x < m_queues.size() ? m_queues[x] : none;
        if (!q || nx.kind == NodeKind::VERTEX) {
            if (!lq.empty()) out.push_back("non-queue node " + std::to_string(x) + " holds queues");
            continue;
        }
        const auto ndq = nearest_descending_queue_nodes(x);
        const int top = std::min(nx.level, f.level_count() - 1);
        for (const auto& [lvl, mq] : lq)
            if (lvl > top) out.push_back("queue above scope at node " + std::to_string(x));
        for (int i = 0; i <= top; ++i) {
            std::vector<std::pair<NodeId, WeightKey>> want;
            for (NodeId v : ndq)
                if (f.min_key(v, i).present()) want.emplace_back(v, f.min_key(v, i));
            std::sort(want.begin(), want.end());
            std::vector<std::pair<NodeId, WeightKey>> have;
            for (const auto& e : queue_entries(x, i)) have.emplace_back(e.elem, e.key);
            if (want != have) {
                out.push_back("queue " + std::to_string(i) + " of node " + std::to_string(x) + " differs from its definition");
                break;
            }
        }
    }
    return out;
}

} // namespace dmsf
