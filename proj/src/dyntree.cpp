#include <dmsf/dyntree.hpp>

#include <string>

namespace dmsf {

DynForest::DynForest(std::size_t n) : m_n(n), m_nodes(n) {}

void DynForest::check_vertex(VertexId v) const
{
    if (v >= m_n) throw std::out_of_range("vertex " + std::to_string(v) + " out of range");
}

bool DynForest::is_root(std::uint32_t x) const
{
    const auto p = m_nodes[x].parent;
    return p == kNil || (m_nodes[p].ch[0] != x && m_nodes[p].ch[1] != x);
}

void DynForest::push(std::uint32_t x)
{
    auto& nx = m_nodes[x];
    if (!nx.rev) return;
    std::swap(nx.ch[0], nx.ch[1]);
    for (auto c : nx.ch) {
        if (c != kNil) m_nodes[c].rev = !m_nodes[c].rev;
    }
    nx.rev = false;
}

void DynForest::pull(std::uint32_t x)
{
    auto& nx = m_nodes[x];
    nx.best = nx.has_key ? x : kNil;
    for (auto c : nx.ch) {
        if (c == kNil) continue;
        const auto cb = m_nodes[c].best;
        if (cb == kNil) continue;
        if (nx.best == kNil || m_nodes[nx.best].key < m_nodes[cb].key) nx.best = cb;
    }
}

void DynForest::rotate(std::uint32_t x)
{
    const auto p = m_nodes[x].parent;
    const auto g = m_nodes[p].parent;
    const int dir = m_nodes[p].ch[1] == x ? 1 : 0;
    const auto b = m_nodes[x].ch[dir ^ 1];
    if (!is_root(p)) {
        auto& gn = m_nodes[g];
        gn.ch[gn.ch[1] == p ? 1 : 0] = x;
    }
    m_nodes[x].parent = g;
    m_nodes[x].ch[dir ^ 1] = p;
    m_nodes[p].parent = x;
    m_nodes[p].ch[dir] = b;
    if (b != kNil) m_nodes[b].parent = p;
    pull(p);
    pull(x);
}

void DynForest::splay(std::uint32_t x)
{
    // push pending reversals from the splay root down to x
    std::vector<std::uint32_t> stack{x};
    for (auto y = x; !is_root(y); y = m_nodes[y].parent) stack.push_back(m_nodes[y].parent);
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) push(*it);

    while (!is_root(x)) {
        const auto p = m_nodes[x].parent;
        if (!is_root(p)) {
            const auto g = m_nodes[p].parent;
            const bool zigzig = (m_nodes[g].ch[1] == p) == (m_nodes[p].ch[1] == x);
            rotate(zigzig ? p : x);
        }
        rotate(x);
    }
}

void DynForest::access(std::uint32_t x)
{
    std::uint32_t last = kNil;
    for (auto y = x; y != kNil; y = m_nodes[y].parent) {
        splay(y);
        m_nodes[y].ch[1] = last;
        pull(y);
        last = y;
    }
    splay(x);
}

void DynForest::make_root(std::uint32_t x)
{
    access(x);
    m_nodes[x].rev = !m_nodes[x].rev;
    push(x);
}

std::uint32_t DynForest::find_root(std::uint32_t x)
{
    access(x);
    auto y = x;
    push(y);
    while (m_nodes[y].ch[0] != kNil) {
        y = m_nodes[y].ch[0];
        push(y);
    }
    splay(y);
    return y;
}

bool DynForest::connected(VertexId u, VertexId v)
{
    check_vertex(u);
    check_vertex(v);
    if (u == v) return true;
    return find_root(u) == find_root(v);
}

DynForest::Handle DynForest::link(VertexId u, VertexId v, WeightKey key)
{
    if (connected(u, v)) throw std::invalid_argument("link would create a cycle");
    std::uint32_t e;
    if (!m_free.empty()) {
        e = m_free.back();
        m_free.pop_back();
        m_nodes[e] = Node{};
    } else {
        e = static_cast<std::uint32_t>(m_nodes.size());
        m_nodes.emplace_back();
    }
    auto& ne = m_nodes[e];
    ne.has_key = true;
    ne.key = key;
    ne.a = u;
    ne.b = v;
    ne.best = e;
    make_root(u);
    m_nodes[u].parent = e;
    make_root(e);
    m_nodes[e].parent = v;
    return e;
}

bool DynForest::live(Handle h) const
{
    return h >= m_n && h < m_nodes.size() && m_nodes[h].live;
}

void DynForest::cut(Handle h)
{
    if (!live(h)) throw std::invalid_argument("stale dynamic-tree handle");
    const VertexId a = m_nodes[h].a;
    const VertexId b = m_nodes[h].b;
    for (VertexId x : {a, b}) {
        make_root(x);
        access(h);
        // x is the left child of h after access(h) with x as root
        auto& nh = m_nodes[h];
        if (nh.ch[0] != kNil) {
            m_nodes[nh.ch[0]].parent = kNil;
            nh.ch[0] = kNil;
            pull(h);
        }
    }
    m_nodes[h].live = false;
    m_nodes[h].parent = kNil;
    m_free.push_back(h);
}

DynForest::Handle DynForest::path_max(VertexId u, VertexId v)
{
    check_vertex(u);
    check_vertex(v);
    if (u == v) throw std::invalid_argument("path_max on identical endpoints");
    if (!connected(u, v)) throw std::invalid_argument("path_max on disconnected vertices");
    make_root(u);
    access(v);
    return m_nodes[v].best;
}

WeightKey DynForest::key(Handle h) const
{
    if (!live(h)) throw std::invalid_argument("stale dynamic-tree handle");
    return m_nodes[h].key;
}

std::pair<VertexId, VertexId> DynForest::endpoints(Handle h) const
{
    if (!live(h)) throw std::invalid_argument("stale dynamic-tree handle");
    return {m_nodes[h].a, m_nodes[h].b};
}

} // namespace dmsf
