#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dmsf {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

inline constexpr EdgeId kNoEdge = std::numeric_limits<EdgeId>::max();
inline constexpr VertexId kNoVertex = std::numeric_limits<VertexId>::max();

/** Raised when an internal consistency check fails (audit mode or a violated precondition
 *  that indicates a bug rather than bad input). */
class AuditError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

enum class EdgeClass : std::uint8_t { SUPER = 0, REAL = 1, NONE = 2 };

/** Distinct total order on edges: lexicographic (class, rank, tiebreak).
 *
 * Every SUPER key is below every REAL key. NONE is reserved for the "absent" sentinel
 * which compares above everything. */
struct WeightKey {
    EdgeClass cls{EdgeClass::REAL};
    std::uint64_t rank{0};
    std::uint64_t tiebreak{0};

    friend constexpr auto operator<=>(const WeightKey&, const WeightKey&) = default;

    static constexpr WeightKey absent() { return {EdgeClass::NONE, 0, 0}; }
    constexpr bool present() const { return cls != EdgeClass::NONE; }
};

constexpr bool key_less(const WeightKey& a, const WeightKey& b) { return a < b; }

std::string to_string(const WeightKey& k);

enum class EdgeStatus : std::uint8_t { TREE, NONTREE, DELETED };

struct EdgeRecord {
    EdgeId id{kNoEdge};
    std::pair<VertexId, VertexId> endpoints{kNoVertex, kNoVertex};
    WeightKey key{};
    int level{0};
    EdgeStatus status{EdgeStatus::NONTREE};

    VertexId other(VertexId v) const { return endpoints.first == v ? endpoints.second : endpoints.first; }
};

struct RawEdge {
    VertexId u{0};
    VertexId v{0};
    double weight{0.0};
};

/** Ranks by sorted position of raw weight; equal weights ordered by edge id (the input index).
 *  Returned keys are REAL-class with tiebreak = edge id. */
std::vector<WeightKey> normalize_weights(std::span<const RawEdge> edges);

/** Edge table with tombstoned deletion and per-vertex adjacency of live edges. */
class EdgeTable {
public:
    explicit EdgeTable(std::size_t n = 0) : m_adj(n) {}

    std::size_t vertex_count() const { return m_adj.size(); }
    std::size_t edge_count() const { return m_edges.size(); }
    std::size_t live_count() const { return m_live; }

    EdgeId add(VertexId u, VertexId v, WeightKey key, EdgeStatus status = EdgeStatus::NONTREE);
    void remove(EdgeId e);

    const EdgeRecord& operator[](EdgeId e) const { return m_edges.at(e); }
    EdgeRecord& operator[](EdgeId e) { return m_edges.at(e); }

    bool live(EdgeId e) const { return e < m_edges.size() && m_edges[e].status != EdgeStatus::DELETED; }

    /** Incident live edges of v, order unspecified. Throws std::out_of_range for bad v. */
    std::span<const EdgeId> adjacency(VertexId v) const;

    const std::vector<EdgeRecord>& records() const { return m_edges; }

private:
    std::vector<EdgeRecord> m_edges;
    std::vector<std::vector<EdgeId>> m_adj;
    // position of edge in each endpoint's adjacency vector
    std::vector<std::pair<std::uint32_t, std::uint32_t>> m_adj_pos;
    std::size_t m_live{0};
};

/** floor(log2(x)) for x >= 1. */
inline int floor_log2(std::uint64_t x)
{
    int r = -1;
    while (x != 0) {
        x >>= 1;
        ++r;
    }
    return r;
}

} // namespace dmsf
