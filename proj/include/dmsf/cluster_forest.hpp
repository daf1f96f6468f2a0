#pragma once

#include <dmsf/core.hpp>
#include <dmsf/counters.hpp>
#include <dmsf/min_queue.hpp>
#include <dmsf/params.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dmsf {

class ShortcutSystem;

using NodeId = std::uint32_t;
inline constexpr NodeId kNil = UINT32_MAX;

enum class NodeKind : std::uint8_t {
    VERTEX,     ///< leaf of the hierarchy, one per graph vertex
    CLUSTER,
    RANK_TREE,  ///< internal node of a rank tree of a heavy tree
    RANK_PATH,
    LIGHT_RANK, ///< internal node of a rank tree over bottom trees
    BUFFER,
    BOTTOM,
    TOP,
    FREE,
};

const char* to_string(NodeKind k);

/** Where a child of a cluster sits inside the parent's local tree. */
enum class Slot : std::uint8_t { NONE, HEAVY, BUFFER, BOTTOM };

struct LocalNode {
    NodeKind kind{NodeKind::FREE};
    bool head{false}; ///< root of a buffer, bottom or top tree
    NodeId parent{kNil};
    NodeId child[2]{kNil, kNil};
    /** Cluster level for CLUSTER nodes; level of the owning cluster for local-tree nodes;
     *  -1 for vertices. */
    int level{-1};
    int rank{0};
    int height{0};          ///< balanced-tree height (search-tree nodes only)
    std::uint32_t count{0}; ///< leaf count (search-tree heads only)
    std::uint32_t size{0};  ///< graph vertices below
    Slot slot{Slot::NONE};
    std::uint64_t tree_bits{0};
    std::uint64_t nontree_bits{0};
    bool dirty{false};

    bool is_leaf() const { return child[0] == kNil && child[1] == kNil; }
};

/** The cluster forest together with its binarized local trees, the per-vertex edge lists and
 *  the per-node aggregates that guide downward searches. */
class ClusterForest {
public:
    ClusterForest(std::size_t n, const Tuning& tuning, bool shortcuts, QueueKind queue_kind = QueueKind::BINARY_HEAP);
    ~ClusterForest();
    ClusterForest(ClusterForest&&) noexcept;
    ClusterForest& operator=(ClusterForest&&) noexcept;
    ClusterForest(const ClusterForest&) = delete;
    ClusterForest& operator=(const ClusterForest&) = delete;

    const Thresholds& thresholds() const { return m_thr; }
    std::size_t vertex_count() const { return m_n; }
    int level_count() const { return m_thr.level_max + 1; }

    EdgeTable& edges() { return m_edges; }
    const EdgeTable& edges() const { return m_edges; }

    // --- structure -----------------------------------------------------------------

    /** One level-0 root per component of size >= 2 with every vertex as a direct child;
     *  singleton components stay bare leaves. */
    void build_initial(const std::vector<std::vector<VertexId>>& components);

    /** Merges sibling level-(i+1) nodes into one new cluster node and returns it. */
    NodeId merge_clusters(const std::vector<NodeId>& nodes);
    /** Moves w out of p into a fresh sibling cluster p' and returns p'. */
    NodeId split_cluster(NodeId p, NodeId w);

    const LocalNode& node(NodeId x) const { return m_nodes.at(x); }
    std::size_t node_capacity() const { return m_nodes.size(); }
    bool alive(NodeId x) const { return x < m_nodes.size() && m_nodes[x].kind != NodeKind::FREE; }

    NodeId cluster_parent(NodeId x) const;
    /** Ancestor-or-self of vertex x that is a child of the level-j cluster containing x. */
    NodeId cluster_child_at(VertexId x, int j, std::uint64_t* visits = nullptr) const;
    NodeId root_of(NodeId x) const;
    int depth(NodeId x) const;
    /** Cluster children of u in the hierarchy (vertices or clusters). */
    std::vector<NodeId> cluster_children(NodeId u) const;
    std::vector<NodeId> roots() const;

    WeightKey min_key(NodeId x, int level) const { return m_min[static_cast<std::size_t>(x) * m_levels + level]; }

    // --- searches ------------------------------------------------------------------

    /** Vertex with the cheapest level-i non-tree edge below u, following minimum keys down. */
    std::optional<VertexId> simple_down_search(NodeId u, int level, Counters* counters = nullptr) const;
    std::optional<EdgeId> tree_edge_search(NodeId u, int level) const;
    void for_each_tree_edge(NodeId u, int level, const std::function<void(EdgeId)>& fn) const;

    // --- per-vertex edge lists -----------------------------------------------------

    EdgeId list_head(VertexId x, int level) const { return m_head[idx(x, level)]; }
    EdgeId list_next(EdgeId e, VertexId at) const { return m_next[side(e, at)]; }
    std::vector<EdgeId> list_items(VertexId x, int level) const;
    const std::vector<EdgeId>& tree_incident(VertexId x) const { return m_tree_inc[x]; }

    /** Initial bulk load: non-tree edges at level 0 in ascending key order, tree edges at level 0. */
    void load_edges(const std::vector<EdgeId>& nontree_sorted, const std::vector<EdgeId>& tree);

    void remove_nontree(EdgeId e);
    void remove_tree(EdgeId e);
    /** Non-tree edge becomes a tree edge at its current level. */
    void convert_to_tree(EdgeId e);
    /** Raises a non-tree edge by one level; it must head both of its lists. */
    void promote_nontree(EdgeId e);
    void promote_tree(EdgeId e);

    /** Recomputes aggregates on the root path of x for the given levels, stopping early. */
    void update_paths(VertexId x, std::uint64_t level_mask);

    // --- shortcuts / audit ---------------------------------------------------------

    ShortcutSystem* shortcuts() { return m_shortcuts.get(); }
    const ShortcutSystem* shortcuts() const { return m_shortcuts.get(); }
    Counters& counters() { return m_counters; }
    const Counters& counters() const { return m_counters; }

    /** Full consistency check against recomputation from scratch; returns failure messages. */
    std::vector<std::string> audit() const;
    /** Heavy/light classification check (meaningful right after merges and splits). */
    std::vector<std::string> audit_heavy_light(NodeId u) const;
    /** Children of every level-i cluster are connected by its level-i tree edges. */
    std::vector<std::string> audit_tree_connectivity() const;
    std::string dump() const;
    int height() const;

private:
    friend class ShortcutSystem;

    std::size_t idx(VertexId x, int level) const { return static_cast<std::size_t>(x) * m_levels + level; }
    std::size_t side(EdgeId e, VertexId at) const
    {
        return 2 * static_cast<std::size_t>(e) + (m_edges[e].endpoints.first == at ? 0 : 1);
    }

    NodeId alloc(NodeKind kind, int level);
    void release(NodeId x);
    void set_child(NodeId p, int slot, NodeId c);
    int child_slot(NodeId p, NodeId c) const;
    void mark(NodeId x);
    NodeId new_cluster(int level);

    // balanced leaf trees (buffer / bottom / top)
    bool bbst_internal(NodeId head, NodeId x) const;
    std::pair<int, std::uint64_t> order_key(NodeId head, NodeId leaf) const;
    std::vector<NodeId> bbst_leaves(NodeId head) const;
    NodeId bbst_rightmost(NodeId head) const;
    void bbst_insert(NodeId head, NodeId leaf);
    void bbst_erase(NodeId head, NodeId leaf);
    void bbst_build(NodeId head, const std::vector<NodeId>& sorted_leaves);
    void bbst_free_internals(NodeId head);
    void bbst_rebalance(NodeId head, NodeId from);
    void bbst_fix_height(NodeId x);
    void bbst_rotate(NodeId x);
    NodeId bbst_make(NodeId head, const std::vector<NodeId>& leaves, std::size_t lo, std::size_t hi);

    // rank trees
    std::vector<NodeId> pair_roots(std::vector<NodeId> roots, NodeKind kind, int level);
    std::vector<NodeId> dismantle_heavy(NodeId u);
    void build_heavy(NodeId u, std::vector<NodeId> roots);
    std::vector<NodeId> strip_rank_ancestors(NodeId x, NodeKind kind, NodeId* old_root);

    // local tree editing
    NodeId top_head(NodeId u) const { return m_nodes[u].child[1]; }
    NodeId buffer_head(NodeId u) const;
    NodeId bottom_head_of(NodeId leaf) const;
    void remove_child(NodeId u, NodeId x);
    void add_child(NodeId u, NodeId x);
    void add_heavy(NodeId u, const std::vector<NodeId>& xs);
    void buffer_insert(NodeId u, NodeId x);
    void retire_buffer(NodeId u);
    void insert_light_pieces(NodeId u, std::vector<NodeId> pieces);
    void refresh_bottom(NodeId u, NodeId bottom);
    std::vector<NodeId> light_roots(NodeId u) const;

    void flush();
    void recompute(NodeId x);
    void recompute_leaf(VertexId x);

    std::size_t m_n;
    int m_levels;
    Thresholds m_thr;
    EdgeTable m_edges;
    std::vector<LocalNode> m_nodes;
    std::vector<WeightKey> m_min;
    std::vector<NodeId> m_free;
    std::vector<NodeId> m_pending_free;
    std::vector<NodeId> m_dirty;

    // E_i(x): intrusive doubly linked lists indexed by 2e + endpoint side
    std::vector<EdgeId> m_head, m_tail;
    std::vector<EdgeId> m_next, m_prev;
    std::vector<std::uint32_t> m_tree_count; // per (vertex, level)
    std::vector<std::vector<EdgeId>> m_tree_inc;
    std::vector<std::uint32_t> m_tree_pos; // per side

    Counters m_counters;
    std::unique_ptr<ShortcutSystem> m_shortcuts;
};

} // namespace dmsf
