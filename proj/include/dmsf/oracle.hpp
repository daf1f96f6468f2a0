#pragma once

#include <dmsf/core.hpp>
#include <dmsf/counters.hpp>
#include <dmsf/dec_msf.hpp>
#include <dmsf/full_dyn.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmsf {

struct OracleEdge {
    EdgeId id{kNoEdge};
    VertexId u{0};
    VertexId v{0};
    WeightKey key{};
};

struct SpanningForest {
    std::vector<EdgeId> edges; ///< sorted by id
    std::uint64_t weight{0};   ///< sum of ranks
};

/** Throws std::invalid_argument on duplicate keys or bad endpoints. */
SpanningForest kruskal(std::size_t n, std::span<const OracleEdge> edges);
/** Independent second oracle: Prim from every unvisited vertex. */
SpanningForest prim(std::size_t n, std::span<const OracleEdge> edges);

/** Vertices reachable from start over the given edges. */
std::vector<char> component_of(std::size_t n, std::span<const OracleEdge> edges, VertexId start);

/** Cheapest edge with exactly one endpoint marked in side. */
std::optional<EdgeId> min_cut_replacement(std::span<const OracleEdge> live, const std::vector<char>& side);

/**
 * Workload PRNG: std::mt19937_64 seeded with the 64-bit seed. Bounded draws take
 * below(b) = x mod b for the first 64-bit output x >= (2^64 - b) mod b. Unit draws use the
 * top 53 bits.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : m_gen(seed) {}
    std::uint64_t next() { return m_gen(); }
    std::uint64_t below(std::uint64_t bound);
    double unit() { return static_cast<double>(m_gen() >> 11) * 0x1.0p-53; }
    bool chance(double p) { return unit() < p; }

    template <class T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 m_gen;
};

enum class OpKind { INSERT, DELETE, QUERY };

struct Op {
    OpKind kind{OpKind::QUERY};
    VertexId u{0};
    VertexId v{0};
    std::uint64_t weight{0};

    bool operator==(const Op&) const = default;
};

struct Workload {
    std::size_t n{1};
    std::vector<Op> ops;

    bool operator==(const Workload&) const = default;
};

struct ParseError : std::runtime_error {
    ParseError(std::size_t line, const std::string& what);
    std::size_t line;
};

/** Mixed workload; mix is the insert probability. Insert-only runs stop once the graph is complete. */
Workload gen_workload(std::size_t n, std::size_t ops, double mix, std::uint64_t seed);
/** m random edges inserted, then `deletions` of them deleted in random order. */
Workload gen_decremental(std::size_t n, std::size_t m, std::size_t deletions, std::uint64_t seed);

void write_workload(std::ostream& out, const Workload& w);
std::string to_text(const Workload& w);
Workload read_workload(std::istream& in);
Workload parse_workload(const std::string& text);

/** Throws std::invalid_argument naming the op index if an op breaks the workload rules. */
void validate_workload(const Workload& w);

enum class ReplayKind {
    FULLY_DYNAMIC,
    DECREMENTAL ///< leading inserts form the initial graph, the remaining ops must be deletes or queries
};

struct ReplayConfig {
    ReplayKind kind{ReplayKind::FULLY_DYNAMIC};
    DecOptions options{};
    bool check_oracle{true};
    bool quick_audit{false}; ///< cheap hierarchy scan after every op
};

struct OpRecord {
    std::size_t index{0};
    Op op{};
    MsfChange change{}; ///< ids are workload edge ids (order of insertion)
    std::uint64_t msf_weight{0};
    Counters counters{}; ///< cumulative
    double credits_spent{0.0};
};

struct ReplayResult {
    std::vector<OpRecord> records;
    std::vector<std::string> divergences;
    std::size_t edges_created{0};
    std::vector<CollapseRecord> collapses;
    std::size_t promotion_violations{0};
    std::vector<int> final_levels; ///< level of every edge at the end, -1 once deleted
    Counters counters{};
};

struct ScaleRow {
    std::size_t n{0};
    SearchMode mode{SearchMode::SIMPLE};
    std::size_t edges{0};
    std::size_t deletions{0};
    Counters counters{};
    double mean_search_cost{0.0}; ///< down visits (simple) or hops (shortcut) per downward search
    double seconds{0.0};
};

/** Decremental run on gen_decremental(n, max(ops, 4n), ops, seed) without oracle checks. */
ScaleRow scale_run(std::size_t n, std::size_t ops, std::uint64_t seed, SearchMode mode);

/** Drives the structure and the oracles side by side; divergences are collected, not thrown. */
ReplayResult replay(const Workload& w, const ReplayConfig& cfg);

} // namespace dmsf
