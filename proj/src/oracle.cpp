#include <dmsf/oracle.hpp>

#include <algorithm>
#include <chrono>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_set>

namespace dmsf {

namespace {

struct Dsu {
    std::vector<VertexId> parent;
    explicit Dsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
    VertexId find(VertexId x)
    {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(VertexId a, VertexId b)
    {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[a] = b;
        return true;
    }
};

void check_edges(std::size_t n, std::span<const OracleEdge> edges)
{
    std::vector<WeightKey> keys;
    for (const auto& e : edges) {
        if (e.u >= n || e.v >= n) throw std::invalid_argument("edge endpoint out of range");
        keys.push_back(e.key);
    }
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) throw std::invalid_argument("duplicate edge key");
}

} // namespace

SpanningForest kruskal(std::size_t n, std::span<const OracleEdge> edges)
{
    check_edges(n, edges);
    std::vector<const OracleEdge*> order;
    for (const auto& e : edges) order.push_back(&e);
    std::sort(order.begin(), order.end(), [](auto a, auto b) { return a->key < b->key; });
    Dsu dsu(n);
    SpanningForest out;
    for (const auto* e : order) {
        if (!dsu.unite(e->u, e->v)) continue;
        out.edges.push_back(e->id);
        out.weight += e->key.rank;
    }
    std::sort(out.edges.begin(), out.edges.end());
    return out;
}

SpanningForest prim(std::size_t n, std::span<const OracleEdge> edges)
{
    check_edges(n, edges);
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        adj[edges[i].u].push_back(i);
        adj[edges[i].v].push_back(i);
    }
    using Item = std::pair<WeightKey, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    std::vector<char> in(n, 0);
    SpanningForest out;
    for (VertexId s = 0; s < n; ++s) {
        if (in[s]) continue;
        in[s] = 1;
        for (auto i : adj[s]) heap.emplace(edges[i].key, i);
        while (!heap.empty()) {
            const auto [k, i] = heap.top();
            heap.pop();
            const auto& e = edges[i];
            const VertexId x = in[e.u] ? e.v : e.u;
            if (in[x]) continue;
            in[x] = 1;
            out.edges.push_back(e.id);
            out.weight += e.key.rank;
            for (auto j : adj[x])
                if (!in[edges[j].u] || !in[edges[j].v]) heap.emplace(edges[j].key, j);
        }
    }
    std::sort(out.edges.begin(), out.edges.end());
    return out;
}

std::vector<char> component_of(std::size_t n, std::span<const OracleEdge> edges, VertexId start)
{
    std::vector<std::vector<VertexId>> adj(n);
    for (const auto& e : edges) {
        adj[e.u].push_back(e.v);
        adj[e.v].push_back(e.u);
    }
    std::vector<char> seen(n, 0);
    std::vector<VertexId> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
        const VertexId x = stack.back();
        stack.pop_back();
        for (VertexId y : adj[x])
            if (!seen[y]) {
                seen[y] = 1;
                stack.push_back(y);
            }
    }
    return seen;
}

std::optional<EdgeId> min_cut_replacement(std::span<const OracleEdge> live, const std::vector<char>& side)
{
    const OracleEdge* best = nullptr;
    for (const auto& e : live) {
        if (side.at(e.u) == side.at(e.v)) continue;
        if (!best || e.key < best->key) best = &e;
    }
    if (!best) return std::nullopt;
    return best->id;
}

std::uint64_t Rng::below(std::uint64_t bound)
{
    if (bound == 0) throw std::invalid_argument("empty range");
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t x = m_gen();
        if (x >= threshold) return x % bound;
    }
}

ParseError::ParseError(std::size_t line_no, const std::string& what)
    : std::runtime_error("line " + std::to_string(line_no) + ": " + what), line(line_no)
{
}

namespace {

using Pair = std::pair<VertexId, VertexId>;

Pair ordered(VertexId u, VertexId v) { return {std::min(u, v), std::max(u, v)}; }

// live pair set with O(1) uniform sampling
struct LiveSet {
    std::vector<Pair> items;
    std::map<Pair, std::size_t> index;

    bool contains(Pair p) const { return index.count(p) != 0; }
    void add(Pair p)
    {
        index[p] = items.size();
        items.push_back(p);
    }
    void remove(Pair p)
    {
        const auto i = index.at(p);
        index[items.back()] = i;
        items[i] = items.back();
        items.pop_back();
        index.erase(p);
    }
};

struct WeightPool {
    Rng& rng;
    std::unordered_set<std::uint64_t> used;
    std::uint64_t range;
    std::uint64_t draw()
    {
        for (;;) {
            const std::uint64_t w = 1 + rng.below(range);
            if (used.insert(w).second) return w;
        }
    }
};

Pair random_absent(Rng& rng, std::size_t n, const LiveSet& live)
{
    const std::size_t total = n * (n - 1) / 2;
    if (live.items.size() * 2 < total) {
        for (;;) {
            const auto u = static_cast<VertexId>(rng.below(n));
            const auto v = static_cast<VertexId>(rng.below(n - 1));
            const Pair p = ordered(u, v >= u ? v + 1 : v);
            if (!live.contains(p)) return p;
        }
    }
    // dense: pick the k-th absent pair
    std::uint64_t k = rng.below(total - live.items.size());
    for (VertexId u = 0; u < n; ++u)
        for (VertexId v = u + 1; v < n; ++v) {
            if (live.contains({u, v})) continue;
            if (k-- == 0) return {u, v};
        }
    throw std::logic_error("no absent pair");
}

} // namespace

Workload gen_workload(std::size_t n, std::size_t ops, double mix, std::uint64_t seed)
{
    if (n < 2) throw std::invalid_argument("workloads need at least two vertices");
    if (mix < 0.0 || mix > 1.0) throw std::invalid_argument("mix must lie in [0, 1]");
    Rng rng(seed);
    WeightPool weights{rng, {}, std::max<std::uint64_t>(1000, 8 * ops)};
    Workload w;
    w.n = n;
    LiveSet live;
    const std::size_t total = n * (n - 1) / 2;
    while (w.ops.size() < ops) {
        const bool full = live.items.size() == total;
        bool insert = live.items.empty() || (!full && rng.chance(mix));
        if (full && mix >= 1.0) break;
        if (insert) {
            const Pair p = random_absent(rng, n, live);
            live.add(p);
            w.ops.push_back({OpKind::INSERT, p.first, p.second, weights.draw()});
        } else {
            const Pair p = live.items[rng.below(live.items.size())];
            live.remove(p);
            w.ops.push_back({OpKind::DELETE, p.first, p.second, 0});
        }
    }
    return w;
}

Workload gen_decremental(std::size_t n, std::size_t m, std::size_t deletions, std::uint64_t seed)
{
    if (n < 2) throw std::invalid_argument("workloads need at least two vertices");
    if (m > n * (n - 1) / 2) throw std::invalid_argument("more edges than vertex pairs");
    if (deletions > m) throw std::invalid_argument("more deletions than edges");
    Rng rng(seed);
    WeightPool weights{rng, {}, std::max<std::uint64_t>(1000, 8 * m)};
    Workload w;
    w.n = n;
    LiveSet live;
    while (live.items.size() < m) {
        const Pair p = random_absent(rng, n, live);
        live.add(p);
        w.ops.push_back({OpKind::INSERT, p.first, p.second, weights.draw()});
    }
    std::vector<Pair> order = live.items;
    rng.shuffle(order);
    for (std::size_t i = 0; i < deletions; ++i) w.ops.push_back({OpKind::DELETE, order[i].first, order[i].second, 0});
    return w;
}

void write_workload(std::ostream& out, const Workload& w)
{
    out << "N " << w.n << '\n';
    for (const auto& op : w.ops) {
        switch (op.kind) {
        case OpKind::INSERT: out << "I " << op.u << ' ' << op.v << ' ' << op.weight << '\n'; break;
        case OpKind::DELETE: out << "D " << op.u << ' ' << op.v << '\n'; break;
        case OpKind::QUERY: out << "Q\n"; break;
        }
    }
}

std::string to_text(const Workload& w)
{
    std::ostringstream out;
    write_workload(out, w);
    return out.str();
}

Workload read_workload(std::istream& in)
{
    Workload w;
    bool have_n = false;
    std::string line;
    std::size_t line_no = 0;
    auto number = [&](std::istringstream& s, const char* what) {
        std::string tok;
        if (!(s >> tok)) throw ParseError(line_no, std::string("missing ") + what);
        if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; }))
            throw ParseError(line_no, std::string("bad ") + what + " '" + tok + "'");
        try {
            return static_cast<std::uint64_t>(std::stoull(tok));
        } catch (const std::out_of_range&) {
            throw ParseError(line_no, std::string(what) + " out of range");
        }
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream s(line);
        std::string tag;
        if (!(s >> tag) || tag[0] == '#') continue;
        if (tag == "N") {
            if (have_n) throw ParseError(line_no, "second N line");
            w.n = number(s, "vertex count");
            if (w.n == 0) throw ParseError(line_no, "vertex count must be positive");
            have_n = true;
        } else {
            if (!have_n) throw ParseError(line_no, "operation before the N line");
            Op op;
            if (tag == "I" || tag == "D") {
                op.kind = tag == "I" ? OpKind::INSERT : OpKind::DELETE;
                const auto u = number(s, "vertex");
                const auto v = number(s, "vertex");
                if (u >= w.n || v >= w.n) throw ParseError(line_no, "vertex out of range");
                if (u == v) throw ParseError(line_no, "self-loop");
                op.u = static_cast<VertexId>(u);
                op.v = static_cast<VertexId>(v);
                if (op.kind == OpKind::INSERT) op.weight = number(s, "weight");
            } else if (tag == "Q") {
                op.kind = OpKind::QUERY;
            } else {
                throw ParseError(line_no, "unknown operation '" + tag + "'");
            }
            std::string extra;
            if (s >> extra && extra[0] != '#') throw ParseError(line_no, "trailing token '" + extra + "'");
            w.ops.push_back(op);
        }
    }
    if (!have_n) throw ParseError(line_no, "missing N line");
    return w;
}

Workload parse_workload(const std::string& text)
{
    std::istringstream in(text);
    return read_workload(in);
}

void validate_workload(const Workload& w)
{
    std::set<Pair> live;
    std::set<std::uint64_t> weights;
    for (std::size_t i = 0; i < w.ops.size(); ++i) {
        const auto& op = w.ops[i];
        if (op.kind == OpKind::QUERY) continue;
        if (op.u >= w.n || op.v >= w.n || op.u == op.v) throw std::invalid_argument("op " + std::to_string(i) + ": bad endpoints");
        const Pair p = ordered(op.u, op.v);
        if (op.kind == OpKind::INSERT) {
            if (!live.insert(p).second) throw std::invalid_argument("op " + std::to_string(i) + ": edge already present");
            if (!weights.insert(op.weight).second) throw std::invalid_argument("op " + std::to_string(i) + ": repeated weight");
        } else if (!live.erase(p)) {
            throw std::invalid_argument("op " + std::to_string(i) + ": edge not present");
        }
    }
}

namespace {

struct OracleGraph {
    std::size_t n;
    std::map<Pair, OracleEdge> live;

    std::vector<OracleEdge> edges() const
    {
        std::vector<OracleEdge> out;
        for (const auto& [p, e] : live) out.push_back(e);
        return out;
    }
};

std::string describe(std::size_t i, const std::string& what) { return "op " + std::to_string(i) + ": " + what; }

std::string ids(const std::vector<EdgeId>& v)
{
    std::string s = "{";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + "}";
}

// expected change between two forests, both sorted
MsfChange diff(const std::vector<EdgeId>& before, const std::vector<EdgeId>& after, std::optional<EdgeId> removed)
{
    MsfChange c;
    std::vector<EdgeId> added, dropped;
    std::set_difference(after.begin(), after.end(), before.begin(), before.end(), std::back_inserter(added));
    std::set_difference(before.begin(), before.end(), after.begin(), after.end(), std::back_inserter(dropped));
    if (!added.empty()) c.became_tree = added.front();
    for (EdgeId e : dropped)
        if (e != removed) c.became_nontree = e;
    return c;
}

void replay_fully_dynamic(const Workload& w, const ReplayConfig& cfg, ReplayResult& res)
{
    FullDynMsf f(w.n, cfg.options);
    OracleGraph g{w.n, {}};
    std::vector<EdgeId> tree;
    EdgeId next = 0;
    for (std::size_t i = 0; i < w.ops.size(); ++i) {
        const auto& op = w.ops[i];
        OpRecord rec;
        rec.index = i;
        rec.op = op;
        std::optional<EdgeId> removed;
        try {
            if (op.kind == OpKind::INSERT) {
                const WeightKey key{EdgeClass::REAL, op.weight, next};
                EdgeId id = kNoEdge;
                rec.change = f.insert(op.u, op.v, key, &id);
                if (id != next) throw std::logic_error("edge ids out of step");
                g.live[ordered(op.u, op.v)] = OracleEdge{id, op.u, op.v, key};
                ++next;
            } else if (op.kind == OpKind::DELETE) {
                const auto it = g.live.find(ordered(op.u, op.v));
                if (it == g.live.end()) throw std::invalid_argument("edge not present");
                removed = it->second.id;
                rec.change = f.erase(op.u, op.v);
                g.live.erase(it);
            }
        } catch (const std::exception& ex) {
            res.divergences.push_back(describe(i, ex.what()));
            break;
        }
        rec.msf_weight = f.msf_weight();
        rec.counters = f.counters();
        rec.credits_spent = f.credits_spent();
        if (cfg.check_oracle && op.kind != OpKind::QUERY) {
            const auto expected = kruskal(w.n, g.edges());
            const auto got = f.msf();
            if (got != expected.edges)
                res.divergences.push_back(describe(i, "forest " + ids(got) + " expected " + ids(expected.edges)));
            if (rec.msf_weight != expected.weight) res.divergences.push_back(describe(i, "weight mismatch"));
            if (rec.change != diff(tree, expected.edges, removed)) res.divergences.push_back(describe(i, "reported change mismatch"));
            tree = expected.edges;
        }
        if (cfg.quick_audit) {
            for (const auto& m : f.check_invariants()) res.divergences.push_back(describe(i, m));
            for (std::size_t s = 0; s < f.slot_count(); ++s)
                if (const auto* ds = f.slot(s))
                    for (const auto& m : ds->quick_audit()) res.divergences.push_back(describe(i, "slot " + std::to_string(s) + ": " + m));
        }
        res.records.push_back(rec);
        if (!res.divergences.empty()) break;
    }
    res.edges_created = next;
    res.collapses = f.collapses();
    res.promotion_violations = f.promotion_violations();
    res.counters = f.counters();
    for (std::size_t s = 0; s < f.slot_count(); ++s) {
        const auto* ds = f.slot(s);
        if (!ds) continue;
        for (EdgeId l = 0; l < ds->edge_count(); ++l) res.final_levels.push_back(ds->live(l) ? ds->edge(l).level : -1);
    }
}

void replay_decremental(const Workload& w, const ReplayConfig& cfg, ReplayResult& res)
{
    std::size_t start = 0;
    std::vector<InputEdge> input;
    OracleGraph g{w.n, {}};
    std::map<Pair, EdgeId> id_of;
    while (start < w.ops.size() && w.ops[start].kind == OpKind::INSERT) {
        const auto& op = w.ops[start];
        const auto id = static_cast<EdgeId>(input.size());
        const WeightKey key{EdgeClass::REAL, op.weight, id};
        input.push_back({op.u, op.v, key});
        g.live[ordered(op.u, op.v)] = OracleEdge{id, op.u, op.v, key};
        id_of[ordered(op.u, op.v)] = id;
        ++start;
    }
    std::optional<DecStructure> ds;
    try {
        ds.emplace(w.n, input, cfg.options);
    } catch (const std::exception& ex) {
        res.divergences.push_back(describe(0, ex.what()));
        return;
    }
    res.edges_created = input.size();
    std::uint64_t weight = 0;
    for (EdgeId e : ds->msf()) weight += ds->edge(e).key.rank;
    if (cfg.check_oracle && ds->msf() != kruskal(w.n, g.edges()).edges)
        res.divergences.push_back(describe(start, "initial forest differs from Kruskal"));
    for (std::size_t i = start; i < w.ops.size() && res.divergences.empty(); ++i) {
        const auto& op = w.ops[i];
        OpRecord rec;
        rec.index = i;
        rec.op = op;
        if (op.kind == OpKind::INSERT) {
            res.divergences.push_back(describe(i, "insert after the first delete in a decremental run"));
            break;
        }
        if (op.kind == OpKind::DELETE) {
            const auto it = id_of.find(ordered(op.u, op.v));
            if (it == id_of.end()) {
                res.divergences.push_back(describe(i, "edge not present"));
                break;
            }
            const EdgeId e = it->second;
            const bool was_tree = ds->edge(e).status == EdgeStatus::TREE;
            std::optional<EdgeId> expected;
            if (cfg.check_oracle && was_tree) {
                std::vector<OracleEdge> forest;
                for (EdgeId t : ds->msf())
                    if (t != e) forest.push_back(g.live.at(ordered(ds->edge(t).endpoints.first, ds->edge(t).endpoints.second)));
                const auto side = component_of(w.n, forest, op.u);
                id_of.erase(it);
                g.live.erase(ordered(op.u, op.v));
                expected = min_cut_replacement(g.edges(), side);
            } else {
                id_of.erase(it);
                g.live.erase(ordered(op.u, op.v));
            }
            try {
                const std::uint64_t rank = ds->edge(e).key.rank;
                const auto r = ds->remove(e);
                rec.change.became_tree = r;
                if (was_tree) weight -= rank;
                if (r) weight += ds->edge(*r).key.rank;
                if (cfg.check_oracle && r != expected)
                    res.divergences.push_back(describe(i, "replacement differs from the cut minimum"));
                if (!was_tree && r) res.divergences.push_back(describe(i, "non-tree deletion produced a replacement"));
            } catch (const std::exception& ex) {
                res.divergences.push_back(describe(i, ex.what()));
                break;
            }
            if (cfg.check_oracle && ds->msf() != kruskal(w.n, g.edges()).edges)
                res.divergences.push_back(describe(i, "forest differs from Kruskal"));
        }
        if (cfg.quick_audit)
            for (const auto& m : ds->quick_audit()) res.divergences.push_back(describe(i, m));
        rec.msf_weight = weight;
        rec.counters = ds->counters();
        rec.credits_spent = ds->credits_spent();
        res.records.push_back(rec);
    }
    res.counters = ds->counters();
    if (ds->counters().promotions > ds->edge_count() * static_cast<std::uint64_t>(ds->level_max())) res.promotion_violations = 1;
    for (EdgeId l = 0; l < ds->edge_count(); ++l) res.final_levels.push_back(ds->live(l) ? ds->edge(l).level : -1);
}

} // namespace

ReplayResult replay(const Workload& w, const ReplayConfig& cfg)
{
    ReplayResult res;
    if (cfg.kind == ReplayKind::FULLY_DYNAMIC) replay_fully_dynamic(w, cfg, res);
    else replay_decremental(w, cfg, res);
    return res;
}

ScaleRow scale_run(std::size_t n, std::size_t ops, std::uint64_t seed, SearchMode mode)
{
    const std::size_t m = std::min(std::max(ops, 4 * n), n * (n - 1) / 2);
    const auto w = gen_decremental(n, m, std::min(ops, m), seed);
    ReplayConfig cfg;
    cfg.kind = ReplayKind::DECREMENTAL;
    cfg.options.mode = mode;
    cfg.check_oracle = false;
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = replay(w, cfg);
    const auto t1 = std::chrono::steady_clock::now();
    if (!res.divergences.empty()) throw std::runtime_error(res.divergences.front());
    ScaleRow row;
    row.n = n;
    row.mode = mode;
    row.edges = m;
    row.deletions = std::min(ops, m);
    row.counters = res.counters;
    const auto searches = static_cast<double>(std::max<std::uint64_t>(1, res.counters.down_searches));
    row.mean_search_cost =
        static_cast<double>(mode == SearchMode::SIMPLE ? res.counters.down_visits : res.counters.hops) / searches;
    row.seconds = std::chrono::duration<double>(t1 - t0).count();
    return row;
}

} // namespace dmsf
