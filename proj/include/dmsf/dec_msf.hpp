#pragma once

#include <dmsf/cluster_forest.hpp>
#include <dmsf/core.hpp>
#include <dmsf/counters.hpp>
#include <dmsf/min_queue.hpp>
#include <dmsf/params.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dmsf {

enum class SearchMode { SIMPLE, SHORTCUT };

const char* to_string(SearchMode m);

struct DecOptions {
    SearchMode mode{SearchMode::SIMPLE};
    Tuning tuning{};
    QueueKind queue{QueueKind::BINARY_HEAP};
    bool audit{false};          ///< full audit after every deletion (throws AuditError)
    bool allow_parallel{false}; ///< accept parallel edges (super-edges next to real ones)
};

struct InputEdge {
    VertexId u{0};
    VertexId v{0};
    WeightKey key{};
};

/** Decremental minimum spanning forest over a fixed vertex set. Local edge ids follow the
 *  input order. */
class DecStructure {
public:
    DecStructure(std::size_t n, std::span<const InputEdge> edges, const DecOptions& opts = {});

    /** Deletes edge e; returns the replacement tree edge, if e was a tree edge and one exists. */
    std::optional<EdgeId> remove(EdgeId e);

    struct Incident {
        EdgeId edge;
        bool inside; ///< both endpoints below w
    };
    /** Cheapest level-i non-tree edge with an endpoint below cluster node w. */
    std::optional<Incident> cheapest_incident(NodeId w, int level);

    /** Raises e by one level (non-tree edges must head both of their lists). */
    void promote(EdgeId e);

    std::vector<EdgeId> msf() const;
    std::size_t vertex_count() const { return m_forest.vertex_count(); }
    std::size_t edge_count() const { return m_forest.edges().edge_count(); }
    std::size_t nontree_count() const { return m_nontree; }
    const EdgeRecord& edge(EdgeId e) const { return m_forest.edges()[e]; }
    bool live(EdgeId e) const { return m_forest.edges().live(e); }
    int level_max() const { return m_forest.thresholds().level_max; }
    SearchMode mode() const { return m_opts.mode; }

    ClusterForest& forest() { return m_forest; }
    const ClusterForest& forest() const { return m_forest; }
    const Counters& counters() const { return m_forest.counters(); }
    double credits_spent() const;

    /** Forest audit plus spanning-forest and tree-connectivity checks. */
    std::vector<std::string> audit() const;
    /** Cheap scan: edge and cluster levels, list sortedness, cluster size caps. */
    std::vector<std::string> quick_audit() const;

private:
    std::optional<EdgeId> search_level(VertexId u, VertexId v, int j);

    DecOptions m_opts;
    ClusterForest m_forest;
    std::size_t m_nontree{0};
};

} // namespace dmsf
