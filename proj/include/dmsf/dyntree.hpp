#pragma once

#include <dmsf/core.hpp>

#include <cstdint>
#include <vector>

namespace dmsf {

/** Dynamic forest with path-maximum queries, backed by a link-cut tree.
 *
 * Tree edges are represented as their own splay nodes so the path aggregate is taken
 * over edge keys only. Handles stay valid until the edge is cut. */
class DynForest {
public:
    using Handle = std::uint32_t;
    static constexpr Handle kNoHandle = UINT32_MAX;

    explicit DynForest(std::size_t n = 0);

    std::size_t vertex_count() const { return m_n; }

    /** Throws std::invalid_argument if u and v are already connected. */
    Handle link(VertexId u, VertexId v, WeightKey key);
    void cut(Handle h);
    bool connected(VertexId u, VertexId v);
    /** Maximum-key edge on the u-v path. Throws if u == v or u, v disconnected. */
    Handle path_max(VertexId u, VertexId v);

    bool live(Handle h) const;
    WeightKey key(Handle h) const;
    std::pair<VertexId, VertexId> endpoints(Handle h) const;

private:
    struct Node {
        std::uint32_t ch[2]{kNil, kNil};
        std::uint32_t parent{kNil};
        std::uint32_t best{kNil}; // node with max key in splay subtree, kNil if none carries a key
        bool rev{false};
        bool has_key{false};
        bool live{true};
        WeightKey key{};
        VertexId a{kNoVertex}, b{kNoVertex};
    };
    static constexpr std::uint32_t kNil = UINT32_MAX;

    bool is_root(std::uint32_t x) const;
    void push(std::uint32_t x);
    void pull(std::uint32_t x);
    void rotate(std::uint32_t x);
    void splay(std::uint32_t x);
    void access(std::uint32_t x);
    void make_root(std::uint32_t x);
    std::uint32_t find_root(std::uint32_t x);
    void check_vertex(VertexId v) const;

    std::size_t m_n;
    std::vector<Node> m_nodes;
    std::vector<std::uint32_t> m_free;
};

} // namespace dmsf
