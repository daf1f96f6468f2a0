#include <dmsf/full_dyn.hpp>
#include <dmsf/shortcuts.hpp>

#include <algorithm>
#include <cmath>

namespace dmsf {

FullDynMsf::FullDynMsf(std::size_t n, const DecOptions& opts) : m_n(n), m_opts(opts), m_edges(n), m_dyn(n)
{
    if (n == 0) throw std::invalid_argument("graph needs at least one vertex");
    m_opts.allow_parallel = true;
    // ceil(2 lg n) + 1 slots cover up to n^2 non-tree edges
    const int lg = n <= 1 ? 0 : static_cast<int>(std::ceil(std::log2(static_cast<double>(n))));
    m_slots.resize(static_cast<std::size_t>(2 * lg + 1));
}

std::optional<EdgeId> FullDynMsf::find(VertexId u, VertexId v) const
{
    auto it = m_pairs.find({std::min(u, v), std::max(u, v)});
    if (it == m_pairs.end()) return std::nullopt;
    return it->second;
}

std::vector<EdgeId> FullDynMsf::msf() const
{
    std::vector<EdgeId> out;
    for (const auto& r : m_edges.records())
        if (r.status == EdgeStatus::TREE) out.push_back(r.id);
    return out;
}

void FullDynMsf::link_tree(EdgeId e)
{
    auto& r = m_edges[e];
    const auto h = m_dyn.link(r.endpoints.first, r.endpoints.second, r.key);
    m_handle[e] = h;
    r.status = EdgeStatus::TREE;
    m_weight += r.key.rank;
}

void FullDynMsf::cut_tree(EdgeId e)
{
    auto& r = m_edges[e];
    m_dyn.cut(m_handle[e]);
    m_handle[e] = DynForest::kNoHandle;
    r.status = EdgeStatus::NONTREE;
    m_weight -= r.key.rank;
}

bool FullDynMsf::valid(const Container& c) const
{
    const auto& s = m_slots[c.slot];
    return s.ds && s.gen == c.gen && s.ds->live(c.local);
}

std::vector<FullDynMsf::Container> FullDynMsf::containers(EdgeId g)
{
    auto& list = m_contain[g];
    list.erase(std::remove_if(list.begin(), list.end(), [&](const Container& c) { return !valid(c); }), list.end());
    return list;
}

void FullDynMsf::evict(std::uint32_t s, EdgeId local, std::vector<EdgeId>& d)
{
    auto& slot = m_slots[s];
    std::optional<EdgeId> r = slot.ds->remove(local);
    while (r) {
        if (slot.super[*r]) throw AuditError("a super-edge was returned as a replacement");
        d.push_back(slot.members[*r].front());
        r = slot.ds->remove(*r);
    }
}

MsfChange FullDynMsf::insert(VertexId u, VertexId v, WeightKey key, EdgeId* id)
{
    if (u >= m_n || v >= m_n) throw std::invalid_argument("vertex out of range");
    if (u == v) throw std::invalid_argument("self-loop");
    if (key.cls != EdgeClass::REAL) throw std::invalid_argument("inserted edges must carry REAL keys");
    if (find(u, v)) throw std::invalid_argument("edge already present");
    const EdgeId e = m_edges.add(u, v, key, EdgeStatus::NONTREE);
    if (id) *id = e;
    m_pairs[{std::min(u, v), std::max(u, v)}] = e;
    m_handle.push_back(DynForest::kNoHandle);
    m_contain.emplace_back();

    MsfChange change;
    if (!m_dyn.connected(u, v)) {
        link_tree(e);
        change.became_tree = e;
        check_after_update();
        return change;
    }
    const auto h = m_dyn.path_max(u, v);
    const WeightKey top = m_dyn.key(h);
    std::vector<EdgeId> d;
    if (key < top) {
        // the heaviest path edge leaves the forest
        const auto [a, b] = m_dyn.endpoints(h);
        const EdgeId old = *find(a, b);
        cut_tree(old);
        link_tree(e);
        change.became_tree = e;
        change.became_nontree = old;
        d.push_back(old);
        // structures must not keep it as a tree edge, alone or inside a super-edge
        for (const auto& c : containers(old))
            if (m_slots[c.slot].ds->edge(c.local).status == EdgeStatus::TREE) evict(c.slot, c.local, d);
    } else {
        d.push_back(e);
    }
    collapse(std::move(d));
    check_after_update();
    return change;
}

MsfChange FullDynMsf::erase(VertexId u, VertexId v)
{
    const auto found = find(u, v);
    if (!found) throw std::invalid_argument("edge not present");
    const EdgeId e = *found;
    m_pairs.erase({std::min(u, v), std::max(u, v)});
    MsfChange change;
    std::vector<EdgeId> d;
    if (m_edges[e].status == EdgeStatus::NONTREE) {
        for (const auto& c : containers(e)) evict(c.slot, c.local, d);
        m_edges.remove(e);
    } else {
        cut_tree(e);
        struct Candidate {
            std::uint32_t slot;
            EdgeId local;
            EdgeId global;
        };
        std::vector<Candidate> cand;
        for (const auto& c : containers(e)) {
            auto& slot = m_slots[c.slot];
            const auto r = slot.ds->remove(c.local);
            if (!r) continue;
            if (slot.super[*r]) throw AuditError("a super-edge was returned as a replacement");
            cand.push_back({c.slot, *r, slot.members[*r].front()});
        }
        m_edges.remove(e);
        std::optional<EdgeId> best;
        for (const auto& c : cand)
            if (!best || m_edges[c.global].key < m_edges[*best].key) best = c.global;
        if (best) {
            link_tree(*best);
            change.became_tree = best;
        }
        // losing candidates are tree edges of their structure but not of the forest
        for (const auto& c : cand) {
            if (c.global == best) continue;
            d.push_back(c.global);
            evict(c.slot, c.local, d);
        }
    }
    if (!d.empty()) collapse(std::move(d));
    check_after_update();
    return change;
}

void FullDynMsf::retire(std::uint32_t s)
{
    auto& slot = m_slots[s];
    if (!slot.ds) return;
    m_retired_counters += slot.ds->counters();
    if (slot.ds->counters().promotions > slot.ds->edge_count() * static_cast<std::uint64_t>(slot.ds->level_max()))
        ++m_retired_promotion_violations;
    if (const auto* sc = slot.ds->forest().shortcuts()) {
        m_retired_spent += sc->ledger().spent;
        m_retired_available += sc->ledger().endowment + sc->ledger().deposits;
    }
    slot.ds.reset();
    slot.to_global.clear();
    slot.members.clear();
    slot.super.clear();
    slot.gen = 0;
}

void FullDynMsf::collapse(std::vector<EdgeId> d)
{
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
    std::erase_if(d, [&](EdgeId g) { return !m_edges.live(g) || m_edges[g].status != EdgeStatus::NONTREE; });
    if (d.empty()) return;

    std::size_t total = d.size();
    std::size_t prefix_before = 0; // count with slot j - 1
    int chosen = -1;
    for (std::size_t j = 0; j < m_slots.size(); ++j) {
        if (m_slots[j].ds) total += m_slots[j].ds->nontree_count();
        if (total <= (std::size_t{1} << j)) {
            chosen = static_cast<int>(j);
            break;
        }
        prefix_before = total;
    }
    if (chosen < 0) throw AuditError("no slot can absorb the collapse");
    const auto j = static_cast<std::uint32_t>(chosen);

    std::vector<EdgeId> all = d;
    for (std::uint32_t i = 0; i <= j; ++i) {
        const auto& slot = m_slots[i];
        if (!slot.ds) continue;
        for (EdgeId l = 0; l < slot.ds->edge_count(); ++l)
            if (slot.ds->live(l) && slot.ds->edge(l).status == EdgeStatus::NONTREE) all.push_back(slot.members[l].front());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    std::erase_if(all, [&](EdgeId g) { return !m_edges.live(g) || m_edges[g].status != EdgeStatus::NONTREE; });

    for (std::uint32_t i = 0; i <= j; ++i) retire(i);
    build_compressed(j, all);

    CollapseRecord rec;
    rec.slot = chosen;
    const auto& ds = *m_slots[j].ds;
    rec.edges = ds.edge_count();
    rec.nontree = ds.nontree_count();
    rec.minimal = chosen == 0 || prefix_before > (std::size_t{1} << (j - 1));
    // components of the new structure without a non-tree edge
    {
        std::vector<VertexId> parent(ds.vertex_count());
        for (VertexId v = 0; v < parent.size(); ++v) parent[v] = v;
        auto findp = [&](VertexId x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        std::vector<char> has(ds.vertex_count(), 0);
        for (EdgeId l = 0; l < ds.edge_count(); ++l) {
            const auto [a, b] = ds.edge(l).endpoints;
            parent[findp(a)] = findp(b);
        }
        for (EdgeId l = 0; l < ds.edge_count(); ++l)
            if (ds.edge(l).status == EdgeStatus::NONTREE) has[findp(ds.edge(l).endpoints.first)] = 1;
        for (VertexId v = 0; v < parent.size(); ++v)
            if (findp(v) == v && !has[v]) ++rec.components_without_nontree;
    }
    m_collapses.push_back(rec);
}

void FullDynMsf::build_compressed(std::uint32_t s, const std::vector<EdgeId>& nontree)
{
    std::vector<char> terminal(m_n, 0);
    for (EdgeId g : nontree) {
        terminal[m_edges[g].endpoints.first] = 1;
        terminal[m_edges[g].endpoints.second] = 1;
    }
    // Steiner subtrees of F over the terminals
    std::vector<char> seen(m_n, 0), has_term(m_n, 0);
    std::vector<VertexId> parent(m_n, kNoVertex);
    std::vector<EdgeId> parent_edge(m_n, kNoEdge);
    std::vector<std::vector<std::pair<VertexId, EdgeId>>> sadj(m_n);
    for (VertexId t = 0; t < m_n; ++t) {
        if (!terminal[t] || seen[t]) continue;
        std::vector<VertexId> order, stack{t};
        seen[t] = 1;
        while (!stack.empty()) {
            const VertexId x = stack.back();
            stack.pop_back();
            order.push_back(x);
            for (EdgeId g : m_edges.adjacency(x)) {
                if (m_edges[g].status != EdgeStatus::TREE) continue;
                const VertexId y = m_edges[g].other(x);
                if (seen[y]) continue;
                seen[y] = 1;
                parent[y] = x;
                parent_edge[y] = g;
                stack.push_back(y);
            }
        }
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const VertexId x = *it;
            if (terminal[x]) has_term[x] = 1;
            if (!has_term[x] || parent[x] == kNoVertex) continue;
            has_term[parent[x]] = 1;
            sadj[x].emplace_back(parent[x], parent_edge[x]);
            sadj[parent[x]].emplace_back(x, parent_edge[x]);
        }
    }
    std::vector<VertexId> local(m_n, kNoVertex);
    Slot slot;
    for (VertexId x = 0; x < m_n; ++x) {
        if (terminal[x] || sadj[x].size() >= 3) {
            local[x] = static_cast<VertexId>(slot.to_global.size());
            slot.to_global.push_back(x);
        }
    }
    std::vector<InputEdge> input;
    // maximal paths through non-terminal degree-2 vertices become super-edges
    std::vector<char> used_edge;
    auto used = [&](EdgeId g) -> char& {
        if (used_edge.size() <= g) used_edge.resize(g + 1, 0);
        return used_edge[g];
    };
    for (VertexId x : slot.to_global) {
        for (auto [y, g] : sadj[x]) {
            if (used(g)) continue;
            std::vector<EdgeId> path{g};
            used(g) = 1;
            VertexId prev = x, cur = y;
            while (local[cur] == kNoVertex) {
                const auto& nb = sadj[cur];
                const auto next = nb[0].first == prev ? nb[1] : nb[0];
                path.push_back(next.second);
                used(next.second) = 1;
                prev = cur;
                cur = next.first;
            }
            input.push_back(InputEdge{local[x], local[cur], WeightKey{EdgeClass::SUPER, 0, m_super_tiebreak++}});
            slot.members.push_back(std::move(path));
            slot.super.push_back(1);
        }
    }
    for (EdgeId g : nontree) {
        const auto& r = m_edges[g];
        input.push_back(InputEdge{local[r.endpoints.first], local[r.endpoints.second], r.key});
        slot.members.push_back({g});
        slot.super.push_back(0);
    }
    slot.ds = std::make_unique<DecStructure>(slot.to_global.size(), input, m_opts);
    slot.gen = ++m_gen;
    for (EdgeId l = 0; l < slot.members.size(); ++l)
        for (EdgeId g : slot.members[l]) m_contain[g].push_back(Container{s, l, slot.gen});
    m_slots[s] = std::move(slot);
}

std::vector<std::string> FullDynMsf::check_invariants() const
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < m_slots.size(); ++i) {
        const auto& slot = m_slots[i];
        if (!slot.ds) continue;
        if (slot.ds->nontree_count() > (std::size_t{1} << i))
            out.push_back("edge-count invariant broken in slot " + std::to_string(i));
        for (EdgeId l = 0; l < slot.ds->edge_count(); ++l) {
            if (!slot.super[l] || !slot.ds->live(l)) continue;
            if (slot.ds->edge(l).status != EdgeStatus::TREE) out.push_back("super-edge left the tree in slot " + std::to_string(i));
        }
    }
    for (const auto& r : m_edges.records()) {
        if (r.status != EdgeStatus::NONTREE) continue;
        bool held = false;
        for (const auto& c : m_contain[r.id]) {
            if (!valid(c)) continue;
            const auto& slot = m_slots[c.slot];
            if (!slot.super[c.local] && slot.ds->edge(c.local).status == EdgeStatus::NONTREE) {
                held = true;
                break;
            }
        }
        if (!held) out.push_back("non-tree edge " + std::to_string(r.id) + " is a non-tree edge of no structure");
    }
    return out;
}

std::vector<std::string> FullDynMsf::audit() const
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < m_slots.size(); ++i) {
        if (!m_slots[i].ds) continue;
        for (auto& m : m_slots[i].ds->audit()) out.push_back("slot " + std::to_string(i) + ": " + m);
    }
    return out;
}

void FullDynMsf::check_after_update() const
{
    if (!m_opts.audit) return;
    auto errs = check_invariants();
    if (errs.empty()) errs = audit();
    if (!errs.empty()) throw AuditError(errs.front());
}

Counters FullDynMsf::counters() const
{
    Counters c = m_retired_counters;
    for (const auto& s : m_slots)
        if (s.ds) c += s.ds->counters();
    return c;
}

std::size_t FullDynMsf::promotion_violations() const
{
    std::size_t total = m_retired_promotion_violations;
    for (const auto& s : m_slots)
        if (s.ds && s.ds->counters().promotions > s.ds->edge_count() * static_cast<std::uint64_t>(s.ds->level_max())) ++total;
    return total;
}

double FullDynMsf::credits_spent() const
{
    double total = m_retired_spent;
    for (const auto& s : m_slots)
        if (s.ds) total += s.ds->credits_spent();
    return total;
}

double FullDynMsf::credits_available() const
{
    double total = m_retired_available;
    for (const auto& s : m_slots)
        if (s.ds)
            if (const auto* sc = s.ds->forest().shortcuts()) total += sc->ledger().endowment + sc->ledger().deposits;
    return total;
}

} // namespace dmsf
