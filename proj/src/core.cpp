#include <dmsf/core.hpp>

#include <algorithm>
#include <numeric>
#include <sstream>

namespace dmsf {

std::string to_string(const WeightKey& k)
{
    if (!k.present()) return "-";
    std::ostringstream os;
    os << (k.cls == EdgeClass::SUPER ? 'S' : 'R') << ':' << k.rank << ':' << k.tiebreak;
    return os.str();
}

std::vector<WeightKey> normalize_weights(std::span<const RawEdge> edges)
{
    std::vector<std::size_t> order(edges.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (edges[a].weight != edges[b].weight) return edges[a].weight < edges[b].weight;
        return a < b;
    });
    std::vector<WeightKey> keys(edges.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        keys[order[pos]] = WeightKey{EdgeClass::REAL, pos, order[pos]};
    }
    return keys;
}

EdgeId EdgeTable::add(VertexId u, VertexId v, WeightKey key, EdgeStatus status)
{
    if (u >= m_adj.size() || v >= m_adj.size()) throw std::out_of_range("edge endpoint out of range");
    if (u == v) throw std::invalid_argument("self-loop");
    const auto id = static_cast<EdgeId>(m_edges.size());
    m_edges.push_back(EdgeRecord{id, {u, v}, key, 0, status});
    m_adj_pos.emplace_back(static_cast<std::uint32_t>(m_adj[u].size()), static_cast<std::uint32_t>(m_adj[v].size()));
    m_adj[u].push_back(id);
    m_adj[v].push_back(id);
    ++m_live;
    return id;
}

void EdgeTable::remove(EdgeId e)
{
    if (!live(e)) throw std::invalid_argument("edge " + std::to_string(e) + " is not live");
    auto& rec = m_edges[e];
    auto unlink = [&](VertexId x, std::uint32_t pos) {
        auto& list = m_adj[x];
        const EdgeId moved = list.back();
        list[pos] = moved;
        list.pop_back();
        if (moved != e) {
            auto& mp = m_adj_pos[moved];
            if (m_edges[moved].endpoints.first == x) mp.first = pos;
            else mp.second = pos;
        }
    };
    unlink(rec.endpoints.first, m_adj_pos[e].first);
    unlink(rec.endpoints.second, m_adj_pos[e].second);
    rec.status = EdgeStatus::DELETED;
    --m_live;
}

std::span<const EdgeId> EdgeTable::adjacency(VertexId v) const
{
    if (v >= m_adj.size()) throw std::out_of_range("vertex " + std::to_string(v) + " out of range");
    return m_adj[v];
}

} // namespace dmsf
