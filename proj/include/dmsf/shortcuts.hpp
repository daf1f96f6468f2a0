#pragma once

#include <dmsf/cluster_forest.hpp>
#include <dmsf/min_queue.hpp>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dmsf {

/** Running credit account for shortcut formation on topological changes.
 *
 * Credits enter as the initial endowment and as deposits when leaves enter heavy trees or
 * are inserted into buffer trees from outside; rebuild work is withdrawn. */
struct CreditLedger {
    double endowment{0.0};
    double deposits{0.0};
    double spent{0.0};

    double balance() const { return endowment + deposits - spent; }
};

/** Queue nodes of the binarized hierarchy with their per-level min-queues over nearest
 *  descending queue nodes, and the downward shortcut search built on them. */
class ShortcutSystem {
public:
    ShortcutSystem(ClusterForest& forest, QueueKind kind);

    /** From-scratch queue-node test for the current shape of the hierarchy. */
    bool classify(NodeId x) const;
    bool is_queue(NodeId x) const { return x < m_is_queue.size() && m_is_queue[x]; }

    /** Maximal queue nodes strictly below u with no queue node in between. */
    std::vector<NodeId> nearest_descending_queue_nodes(NodeId u, std::uint64_t* visits = nullptr) const;

    /** Up to two vertices carrying the minimum level-i key below u; empty if none. */
    std::vector<VertexId> shortcut_search(NodeId u, int level, Counters* counters = nullptr) const;

    /** Minimum level-i key below queue node (or vertex) v as seen by its ancestors. */
    WeightKey queue_min(NodeId v, int level) const;

    /** Non-topological change: the level-i list of vertex x changed. Bottom-up early-stop update. */
    void refresh_vertex(VertexId x, int level);

    /** Topological change: nodes whose children, rank or kind changed. Rebuilds affected queues. */
    void on_structure(const std::vector<NodeId>& dirty);
    void on_release(NodeId x);
    void rebuild_all();

    /** Rebuilds every queue of queue node a from its nearest descending queue nodes. */
    void rebuild_node(NodeId a);

    void deposit(double credits) { m_ledger.deposits += credits; }
    void set_endowment(double credits) { m_ledger.endowment = credits; }
    const CreditLedger& ledger() const { return m_ledger; }
    /** Credits the current layout is required to hold under the heavy/buffer/bottom invariants. */
    double required_credits() const;

    /** Compares every queue with its from-scratch definition and checks the ledger. */
    std::vector<std::string> audit() const;

    /** Queue contents of a for one level, for tests. */
    std::vector<MinQueue::Entry> queue_entries(NodeId a, int level) const;

private:
    friend class ClusterForest;
    using LevelQueues = std::map<int, std::unique_ptr<MinQueue>>;

    NodeId ascending_queue_node(NodeId v) const;
    bool heavy_tree_node(NodeId x) const;
    bool light_rank_node(NodeId x) const;
    void ensure_size();
    MinQueue& queue(NodeId a, int level);
    /** Sets v's entry in Q_level(q) to key (erasing when absent); true if anything changed. */
    bool set_entry(NodeId q, NodeId v, int level, WeightKey key);
    WeightKey scratch_min(NodeId v, int level) const;
    void descend(NodeId from, int level, std::vector<VertexId>& out, std::uint64_t& hops) const;

    ClusterForest* m_forest;
    QueueKind m_kind;
    std::vector<char> m_is_queue;
    std::vector<LevelQueues> m_queues;
    CreditLedger m_ledger;
};

} // namespace dmsf
