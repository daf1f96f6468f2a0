#pragma once

#include <dmsf/core.hpp>
#include <dmsf/counters.hpp>
#include <dmsf/dec_msf.hpp>
#include <dmsf/dyntree.hpp>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dmsf {

/** Edges whose tree status changed in one update. */
struct MsfChange {
    std::optional<EdgeId> became_tree;
    std::optional<EdgeId> became_nontree;

    bool operator==(const MsfChange&) const = default;
};

struct CollapseRecord {
    int slot{0};
    std::size_t edges{0};   ///< edges of the rebuilt structure, super-edges included
    std::size_t nontree{0}; ///< its non-tree edges
    std::size_t components_without_nontree{0};
    bool minimal{true}; ///< slot - 1 would have broken the edge-count bound
};

/** Fully dynamic minimum spanning forest built from a logarithmic array of decremental
 *  structures over compressed snapshots of the graph. */
class FullDynMsf {
public:
    explicit FullDynMsf(std::size_t n, const DecOptions& opts = {});

    /** Inserts edge (u, v); its id is written to *id when given. */
    MsfChange insert(VertexId u, VertexId v, WeightKey key, EdgeId* id = nullptr);
    MsfChange erase(VertexId u, VertexId v);

    std::optional<EdgeId> find(VertexId u, VertexId v) const;
    std::vector<EdgeId> msf() const;
    /** Sum of ranks over the forest. */
    std::uint64_t msf_weight() const { return m_weight; }
    const EdgeTable& edges() const { return m_edges; }
    std::size_t vertex_count() const { return m_n; }

    std::size_t slot_count() const { return m_slots.size(); }
    const DecStructure* slot(std::size_t i) const { return m_slots.at(i).ds.get(); }

    /** Edge-count and non-tree-edge invariants plus super-edge status; failure messages. */
    std::vector<std::string> check_invariants() const;
    /** Full audit of every live decremental structure. */
    std::vector<std::string> audit() const;
    const std::vector<CollapseRecord>& collapses() const { return m_collapses; }

    Counters counters() const;
    /** Structures whose promotions exceeded edges * level_max, retired ones included. */
    std::size_t promotion_violations() const;
    double credits_spent() const;
    double credits_available() const;

private:
    struct Slot {
        std::unique_ptr<DecStructure> ds;
        std::vector<VertexId> to_global;
        std::vector<std::vector<EdgeId>> members; // local edge -> global edges it stands for
        std::vector<char> super;
        std::uint64_t gen{0};
    };
    struct Container {
        std::uint32_t slot;
        EdgeId local;
        std::uint64_t gen;
    };

    bool valid(const Container& c) const;
    std::vector<Container> containers(EdgeId g);
    /** Deletes local edge from slot s; replacements it triggers are deleted as well and
     *  every one of them is appended to d. */
    void evict(std::uint32_t s, EdgeId local, std::vector<EdgeId>& d);
    void collapse(std::vector<EdgeId> d);
    void build_compressed(std::uint32_t s, const std::vector<EdgeId>& nontree);
    void retire(std::uint32_t s);
    void link_tree(EdgeId e);
    void cut_tree(EdgeId e);
    void check_after_update() const;

    std::size_t m_n;
    DecOptions m_opts;
    EdgeTable m_edges;
    DynForest m_dyn;
    std::vector<DynForest::Handle> m_handle;
    std::map<std::pair<VertexId, VertexId>, EdgeId> m_pairs;
    std::vector<Slot> m_slots;
    std::vector<std::vector<Container>> m_contain;
    std::vector<CollapseRecord> m_collapses;
    std::uint64_t m_gen{0};
    std::uint64_t m_super_tiebreak{0};
    std::uint64_t m_weight{0};
    Counters m_retired_counters;
    double m_retired_spent{0.0};
    double m_retired_available{0.0};
    std::size_t m_retired_promotion_violations{0};
};

} // namespace dmsf
