#include <dmsf/full_dyn.hpp>
#include <dmsf/oracle.hpp>

#include <doctest.h>

#include <map>

using namespace dmsf;

namespace {

WeightKey real(std::uint64_t rank, std::uint64_t tie) { return WeightKey{EdgeClass::REAL, rank, tie}; }

std::vector<OracleEdge> live_edges(const FullDynMsf& f)
{
    std::vector<OracleEdge> out;
    for (const auto& r : f.edges().records())
        if (r.status != EdgeStatus::DELETED) out.push_back({r.id, r.endpoints.first, r.endpoints.second, r.key});
    return out;
}

void require_matches_kruskal(const FullDynMsf& f)
{
    const auto expected = kruskal(f.vertex_count(), live_edges(f));
    REQUIRE(f.msf() == expected.edges);
    REQUIRE(f.msf_weight() == expected.weight);
}

void require_invariants(const FullDynMsf& f)
{
    const auto errs = f.check_invariants();
    REQUIRE_MESSAGE(errs.empty(), (errs.empty() ? std::string{} : errs.front()));
}

} // namespace

TEST_CASE("empty structures")
{
    FullDynMsf one(1);
    CHECK(one.msf().empty());
    FullDynMsf five(5);
    CHECK(five.msf().empty());
    CHECK(five.msf_weight() == 0);
    CHECK_THROWS_AS(FullDynMsf(0), std::invalid_argument);
}

TEST_CASE("triangle: delete the lightest edge")
{
    FullDynMsf f(3, DecOptions{SearchMode::SHORTCUT, {}, QueueKind::BINARY_HEAP, true, false});
    EdgeId a, b, c;
    CHECK(f.insert(0, 1, real(1, 0), &a).became_tree == a);
    CHECK(f.insert(1, 2, real(2, 1), &b).became_tree == b);
    const auto ch = f.insert(0, 2, real(3, 2), &c);
    CHECK_FALSE(ch.became_tree);
    CHECK_FALSE(ch.became_nontree);
    const auto del = f.erase(0, 1);
    CHECK(del.became_tree == c);
    CHECK(f.msf() == std::vector<EdgeId>{b, c});
    CHECK(f.msf_weight() == 5);
}

TEST_CASE("inserting a lighter cycle edge swaps out the path maximum")
{
    FullDynMsf f(4);
    EdgeId e01, e12, e23, e03;
    f.insert(0, 1, real(10, 0), &e01);
    f.insert(1, 2, real(30, 1), &e12);
    f.insert(2, 3, real(20, 2), &e23);
    const auto ch = f.insert(0, 3, real(5, 3), &e03);
    CHECK(ch.became_tree == e03);
    CHECK(ch.became_nontree == e12);
    CHECK(f.msf_weight() == 35);
    require_invariants(f);
    // the evicted edge must come back when the light one leaves
    CHECK(f.erase(3, 0).became_tree == e12);
    require_matches_kruskal(f);
}

TEST_CASE("precondition errors")
{
    FullDynMsf f(4);
    f.insert(0, 1, real(1, 0));
    CHECK_THROWS_AS(f.insert(1, 0, real(2, 1)), std::invalid_argument);
    CHECK_THROWS_AS(f.insert(2, 2, real(3, 2)), std::invalid_argument);
    CHECK_THROWS_AS(f.insert(0, 9, real(3, 2)), std::invalid_argument);
    CHECK_THROWS_AS(f.erase(2, 3), std::invalid_argument);
    CHECK_THROWS_AS(f.insert(2, 3, WeightKey{EdgeClass::SUPER, 0, 0}), std::invalid_argument);
}

TEST_CASE("insert-only workload tracks Kruskal")
{
    const auto w = gen_workload(24, 1000, 1.0, 4);
    FullDynMsf f(24);
    EdgeId next = 0;
    for (const auto& op : w.ops) {
        REQUIRE(op.kind == OpKind::INSERT);
        f.insert(op.u, op.v, real(op.weight, next++));
        require_matches_kruskal(f);
        require_invariants(f);
    }
}

TEST_CASE("mixed workloads match Kruskal and keep both invariants")
{
    for (auto mode : {SearchMode::SIMPLE, SearchMode::SHORTCUT}) {
        for (std::uint64_t seed = 1; seed <= 6; ++seed) {
            const std::size_t n = seed % 2 ? 32 : 12;
            const auto w = gen_workload(n, 2000, 0.55, seed);
            DecOptions o;
            o.mode = mode;
            FullDynMsf f(n, o);
            EdgeId next = 0;
            for (const auto& op : w.ops) {
                if (op.kind == OpKind::INSERT) f.insert(op.u, op.v, real(op.weight, next++));
                else if (op.kind == OpKind::DELETE) f.erase(op.u, op.v);
                require_matches_kruskal(f);
                require_invariants(f);
            }
            for (const auto& c : f.collapses()) {
                CHECK(c.edges <= 5 * c.nontree);
                CHECK(c.components_without_nontree == 0);
            }
        }
    }
}

TEST_CASE("audit mode on a small mixed run")
{
    DecOptions o;
    o.mode = SearchMode::SHORTCUT;
    o.audit = true;
    const auto w = gen_workload(16, 400, 0.6, 21);
    FullDynMsf f(16, o);
    EdgeId next = 0;
    for (const auto& op : w.ops) {
        if (op.kind == OpKind::INSERT) f.insert(op.u, op.v, real(op.weight, next++));
        else f.erase(op.u, op.v);
    }
    require_matches_kruskal(f);
    CHECK(f.credits_spent() <= f.credits_available());
}

TEST_CASE("compressed structures replace like the expanded graph")
{
    // a path whose interior vertices are not terminals collapses into one super-edge
    FullDynMsf f(6);
    EdgeId id;
    for (VertexId v = 0; v + 1 < 6; ++v) f.insert(v, v + 1, real(10 + v, v));
    f.insert(0, 5, real(100, 5), &id);
    REQUIRE(f.collapses().size() == 1);
    const auto& c = f.collapses().back();
    CHECK(c.nontree == 1);
    CHECK(c.edges == 2);
    // removing any path edge must bring in the chord, exactly as on the expanded graph
    for (VertexId v = 0; v + 1 < 6; ++v) {
        FullDynMsf g(6);
        for (VertexId x = 0; x + 1 < 6; ++x) g.insert(x, x + 1, real(10 + x, x));
        EdgeId chord;
        g.insert(0, 5, real(100, 5), &chord);
        CHECK(g.erase(v, v + 1).became_tree == chord);
        require_matches_kruskal(g);
    }
}
