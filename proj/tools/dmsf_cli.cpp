#include <dmsf/oracle.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace dmsf;

namespace {

constexpr int kOk = 0;
constexpr int kDivergence = 1;
constexpr int kUsage = 2;

struct RunConfig {
    std::string mode{"shortcut"};
    bool audit{false};
    double eps_h{Tuning{}.eps_h};
    double eps_q{Tuning{}.eps_q};
    double alpha{Tuning{}.alpha};
    bool decremental{false};
};

void add_tuning(CLI::App* cmd, RunConfig& cfg)
{
    cmd->add_option("--mode", cfg.mode, "simple, shortcut or both")->check(CLI::IsMember({"simple", "shortcut", "both"}));
    cmd->add_flag("--audit", cfg.audit, "full audit after every update");
    cmd->add_option("--eps-h", cfg.eps_h, "heavy-child exponent");
    cmd->add_option("--eps-q", cfg.eps_q, "queue spacing exponent");
    cmd->add_option("--alpha", cfg.alpha, "buffer size exponent");
}

// returns false on values that cannot work at all
bool check_tuning(const RunConfig& cfg)
{
    if (cfg.eps_h <= 0.0 || cfg.eps_q <= 0.0 || cfg.alpha <= 0.0) {
        std::cerr << "error: --eps-h, --eps-q and --alpha must be positive\n";
        return false;
    }
    if (cfg.eps_h >= 0.5) std::cerr << "warning: --eps-h " << cfg.eps_h << " is outside (0, 0.5)\n";
    if (cfg.eps_q > 1.0 / 6.0) std::cerr << "warning: --eps-q " << cfg.eps_q << " is outside (0, 1/6]\n";
    return true;
}

std::vector<SearchMode> modes_of(const std::string& m)
{
    if (m == "simple") return {SearchMode::SIMPLE};
    if (m == "shortcut") return {SearchMode::SHORTCUT};
    return {SearchMode::SIMPLE, SearchMode::SHORTCUT};
}

ReplayConfig replay_config(const RunConfig& cfg, SearchMode mode)
{
    ReplayConfig rc;
    rc.kind = cfg.decremental ? ReplayKind::DECREMENTAL : ReplayKind::FULLY_DYNAMIC;
    rc.options.mode = mode;
    rc.options.audit = cfg.audit;
    rc.options.tuning.eps_h = cfg.eps_h;
    rc.options.tuning.eps_q = cfg.eps_q;
    rc.options.tuning.alpha = cfg.alpha;
    rc.quick_audit = true;
    return rc;
}

const char* op_tag(OpKind k)
{
    switch (k) {
    case OpKind::INSERT: return "I";
    case OpKind::DELETE: return "D";
    case OpKind::QUERY: return "Q";
    }
    return "?";
}

std::string opt_id(const std::optional<EdgeId>& e) { return e ? std::to_string(*e) : std::string{}; }

void write_csv(std::ostream& out, const std::vector<OpRecord>& records)
{
    out << "index,op,became_tree,became_nontree,msf_weight,promotions,down_visits,up_visits,queue_ops,hops,credits_spent\n";
    char credits[64];
    for (const auto& r : records) {
        std::snprintf(credits, sizeof credits, "%.3f", r.credits_spent);
        out << r.index << ',' << op_tag(r.op.kind) << ',' << opt_id(r.change.became_tree) << ',' << opt_id(r.change.became_nontree)
            << ',' << r.msf_weight << ',' << r.counters.promotions << ',' << r.counters.down_visits << ',' << r.counters.up_visits
            << ',' << r.counters.queue_ops << ',' << r.counters.hops << ',' << credits << '\n';
    }
}

// streams agree on everything but the counters
bool same_stream(const ReplayResult& a, const ReplayResult& b)
{
    if (a.records.size() != b.records.size()) return false;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const auto &x = a.records[i], &y = b.records[i];
        if (x.index != y.index || x.change != y.change || x.msf_weight != y.msf_weight) return false;
    }
    return a.final_levels == b.final_levels;
}

int cmd_gen(std::size_t n, std::size_t ops, double mix, std::uint64_t seed, const std::string& out_path)
{
    Workload w;
    try {
        w = gen_workload(n, ops, mix, seed);
    } catch (const std::invalid_argument& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kUsage;
    }
    if (out_path.empty() || out_path == "-") {
        write_workload(std::cout, w);
        return kOk;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        std::cerr << "error: cannot write " << out_path << '\n';
        return kUsage;
    }
    write_workload(out, w);
    return kOk;
}

int cmd_run(const std::string& path, const RunConfig& cfg, const std::string& csv_path)
{
    if (!check_tuning(cfg)) return kUsage;
    Workload w;
    try {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            std::cerr << "error: cannot read " << path << '\n';
            return kUsage;
        }
        w = read_workload(in);
        validate_workload(w);
    } catch (const ParseError& ex) {
        std::cerr << path << ": parse error: " << ex.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& ex) {
        std::cerr << path << ": " << ex.what() << '\n';
        return kUsage;
    }
    std::vector<ReplayResult> results;
    for (auto mode : modes_of(cfg.mode)) results.push_back(replay(w, replay_config(cfg, mode)));
    int status = kOk;
    for (std::size_t i = 0; i < results.size(); ++i)
        for (const auto& d : results[i].divergences) {
            std::cerr << to_string(modes_of(cfg.mode)[i]) << ": " << d << '\n';
            status = kDivergence;
        }
    if (results.size() == 2 && !same_stream(results[0], results[1])) {
        std::cerr << "simple and shortcut modes disagree\n";
        status = kDivergence;
    }
    // with both modes the shortcut run is written
    const auto& shown = results.back();
    if (csv_path.empty() || csv_path == "-") {
        write_csv(std::cout, shown.records);
    } else {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) {
            std::cerr << "error: cannot write " << csv_path << '\n';
            return kUsage;
        }
        write_csv(out, shown.records);
    }
    std::cerr << w.ops.size() << " ops, final weight " << (shown.records.empty() ? 0 : shown.records.back().msf_weight)
              << (status == kOk ? ", no divergence\n" : ", DIVERGED\n");
    return status;
}

int cmd_fuzz(std::size_t trials, std::size_t max_n, std::size_t ops, std::uint64_t seed, const RunConfig& cfg)
{
    if (!check_tuning(cfg)) return kUsage;
    if (max_n < 2) {
        std::cerr << "error: --max-n must be at least 2\n";
        return kUsage;
    }
    Rng rng(seed);
    std::size_t failed = 0, updates = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t n = 2 + rng.below(max_n - 1);
        const double mix = 0.3 + 0.5 * rng.unit();
        const std::uint64_t wseed = rng.next();
        const auto w = gen_workload(n, ops, mix, wseed);
        std::vector<ReplayResult> results;
        for (auto mode : modes_of(cfg.mode)) results.push_back(replay(w, replay_config(cfg, mode)));
        std::string problem;
        for (const auto& r : results)
            if (!r.divergences.empty()) problem = r.divergences.front();
        if (problem.empty() && results.size() == 2 && !same_stream(results[0], results[1])) problem = "modes disagree";
        updates += results.front().records.size();
        if (!problem.empty()) {
            ++failed;
            std::cerr << "trial " << t << " (n=" << n << ", workload seed " << wseed << "): " << problem << '\n';
        }
    }
    std::cout << trials << " trials, " << updates << " updates, " << failed << " failed\n";
    return failed ? kDivergence : kOk;
}

std::vector<std::size_t> parse_list(const std::string& s)
{
    std::vector<std::size_t> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        std::size_t pos = 0;
        const auto v = std::stoull(item, &pos);
        if (pos != item.size() || v < 2) throw std::invalid_argument("bad size '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("empty size list");
    return out;
}

int cmd_scale(const std::string& sizes, std::size_t ops, std::uint64_t seed, const std::string& csv_path)
{
    std::vector<std::size_t> ns;
    try {
        ns = parse_list(sizes);
    } catch (const std::exception& ex) {
        std::cerr << "error: --n: " << ex.what() << '\n';
        return kUsage;
    }
    std::ofstream file;
    if (!csv_path.empty() && csv_path != "-") {
        file.open(csv_path, std::ios::binary);
        if (!file) {
            std::cerr << "error: cannot write " << csv_path << '\n';
            return kUsage;
        }
    }
    std::ostream& out = file.is_open() ? file : std::cout;
    out << "n,mode,edges,deletions,down_searches,mean_search_cost,down_visits,hops,up_visits,queue_ops,promotions\n";
    for (std::size_t n : ns) {
        for (auto mode : {SearchMode::SIMPLE, SearchMode::SHORTCUT}) {
            const auto row = scale_run(n, ops, seed, mode);
            const auto& c = row.counters;
            char mean[64];
            std::snprintf(mean, sizeof mean, "%.4f", row.mean_search_cost);
            out << n << ',' << to_string(mode) << ',' << row.edges << ',' << row.deletions << ',' << c.down_searches << ',' << mean << ','
                << c.down_visits << ',' << c.hops << ',' << c.up_visits << ',' << c.queue_ops << ',' << c.promotions << '\n';
            std::cerr << "n=" << n << ' ' << to_string(mode) << ": " << row.seconds << "s\n";
        }
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Fully dynamic minimum spanning forest harness"};
    app.require_subcommand(1);

    std::size_t gen_n = 16, gen_ops = 1000;
    double gen_mix = 0.6;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen", "generate a random workload");
    gen->add_option("--n", gen_n, "vertex count");
    gen->add_option("--ops", gen_ops, "operation count");
    gen->add_option("--mix", gen_mix, "insert probability")->check(CLI::Range(0.0, 1.0));
    gen->add_option("--seed", gen_seed, "PRNG seed");
    gen->add_option("--out", gen_out, "output path (stdout if omitted)");

    RunConfig run_cfg;
    std::string run_workload, run_csv;
    auto* run = app.add_subcommand("run", "replay a workload against the oracles and emit per-op CSV");
    run->add_option("--workload", run_workload, "workload file")->required();
    run->add_option("--csv", run_csv, "CSV output path (stdout if omitted)");
    run->add_flag("--decremental", run_cfg.decremental, "leading inserts build the graph, the rest must be deletions");
    add_tuning(run, run_cfg);

    RunConfig fuzz_cfg;
    fuzz_cfg.mode = "both";
    std::size_t trials = 200, max_n = 32, fuzz_ops = 500;
    std::uint64_t fuzz_seed = 1;
    auto* fuzz = app.add_subcommand("fuzz", "random workloads against the oracles");
    fuzz->add_option("--trials", trials, "number of workloads");
    fuzz->add_option("--max-n", max_n, "largest vertex count");
    fuzz->add_option("--ops", fuzz_ops, "operations per workload");
    fuzz->add_option("--seed", fuzz_seed, "PRNG seed");
    add_tuning(fuzz, fuzz_cfg);

    std::string scale_n = "8,16,32,64", scale_csv;
    std::size_t scale_ops = 10000;
    std::uint64_t scale_seed = 1;
    auto* scale = app.add_subcommand("scale", "decremental counter means per n in both modes");
    scale->add_option("--n", scale_n, "comma-separated vertex counts");
    scale->add_option("--ops", scale_ops, "deletions per run");
    scale->add_option("--seed", scale_seed, "PRNG seed");
    scale->add_option("--csv", scale_csv, "CSV output path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*gen) return cmd_gen(gen_n, gen_ops, gen_mix, gen_seed, gen_out);
        if (*run) return cmd_run(run_workload, run_cfg, run_csv);
        if (*fuzz) return cmd_fuzz(trials, max_n, fuzz_ops, fuzz_seed, fuzz_cfg);
        if (*scale) return cmd_scale(scale_n, scale_ops, scale_seed, scale_csv);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return kDivergence;
    }
    return kUsage;
}
