#pragma once

#include <cstdint>

namespace dmsf {

/** Operation counters shared by the hierarchy, the searches and the queue system. */
struct Counters {
    std::uint64_t promotions{0};
    std::uint64_t down_visits{0};   ///< nodes visited by simple downward searches
    std::uint64_t down_searches{0}; ///< downward searches in either mode
    std::uint64_t up_visits{0};
    std::uint64_t queue_ops{0};
    std::uint64_t hops{0};          ///< shortcut hops plus descendant-set visits
    std::uint64_t rebuild_work{0};  ///< work units spent forming shortcuts on topological changes
    std::uint64_t max_hops{0};      ///< largest single shortcut search
    std::uint64_t max_descendants{0};
    std::uint64_t cap_violations{0};
    std::uint64_t merges{0};
    std::uint64_t splits{0};

    Counters& operator+=(const Counters& o)
    {
        promotions += o.promotions;
        down_visits += o.down_visits;
        down_searches += o.down_searches;
        up_visits += o.up_visits;
        queue_ops += o.queue_ops;
        hops += o.hops;
        rebuild_work += o.rebuild_work;
        max_hops = max_hops > o.max_hops ? max_hops : o.max_hops;
        max_descendants = max_descendants > o.max_descendants ? max_descendants : o.max_descendants;
        cap_violations += o.cap_violations;
        merges += o.merges;
        splits += o.splits;
        return *this;
    }
};

} // namespace dmsf
