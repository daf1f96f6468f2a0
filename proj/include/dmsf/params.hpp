#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace dmsf {

/** Tunable constants of the hierarchy and the shortcutting system. */
struct Tuning {
    double eps_h{0.4};  ///< heavy-child exponent
    double eps_q{0.15}; ///< queue-node spacing exponent
    double alpha{3.0};  ///< buffer/bottom tree size exponent
    double c_height{6.0};
    double c_visits{16.0};
    double c_hops{16.0};
};

/** Size-dependent thresholds derived from a Tuning and the structure's vertex count.
 *
 * All logs are base 2 of max(n, 2). The asymptotic expressions are clamped below so that
 * tiny structures stay well formed: heavy divisor >= 1, queue spacing >= 1, s_max >= 4. */
struct Thresholds {
    std::size_t n{1};
    double log_n{1.0};
    double heavy_divisor{1.0}; ///< log^{eps_h} n
    int queue_spacing{1};      ///< ceil(eps_q log log n)
    std::size_t s_max{4};      ///< log^alpha n
    int level_max{0};          ///< floor(log2 n)
    Tuning tuning{};

    Thresholds() = default;
    Thresholds(std::size_t n_struct, const Tuning& t) : n(std::max<std::size_t>(n_struct, 1)), tuning(t)
    {
        log_n = std::log2(static_cast<double>(std::max<std::size_t>(n, 2)));
        heavy_divisor = std::max(1.0, std::pow(log_n, t.eps_h));
        const double loglog = std::log2(log_n);
        queue_spacing = std::max(1, static_cast<int>(std::ceil(t.eps_q * loglog - 1e-12)));
        s_max = std::max<std::size_t>(4, static_cast<std::size_t>(std::floor(std::pow(log_n, t.alpha) + 1e-9)));
        int lm = 0;
        while ((std::size_t{2} << lm) <= n) ++lm;
        level_max = lm;
    }

    /** Child of a cluster with n_parent vertices is heavy iff n_child >= n_parent / log^{eps_h} n. */
    bool heavy(std::size_t n_child, std::size_t n_parent) const
    {
        return static_cast<double>(n_child) * heavy_divisor >= static_cast<double>(n_parent);
    }

    double log_s_max() const { return std::log2(static_cast<double>(s_max)); }

    /** Height cap c_H (1/eps_h) log n. */
    double height_cap() const { return tuning.c_height / tuning.eps_h * log_n; }
    /** Nearest-descending-queue-node cap c_V log^{3 eps_q} n. */
    double visit_cap() const { return tuning.c_visits * std::pow(log_n, 3.0 * tuning.eps_q); }
    /** Shortcut hop cap c_P (1/eps_h + 1/eps_q) log n / log log max(n,4) + c_P log^{3 eps_q} n. */
    double hop_cap() const
    {
        const double ll = std::log2(std::log2(static_cast<double>(std::max<std::size_t>(n, 4))));
        return tuning.c_hops * (1.0 / tuning.eps_h + 1.0 / tuning.eps_q) * log_n / ll +
               tuning.c_hops * std::pow(log_n, 3.0 * tuning.eps_q);
    }

    /** Credits held per heavy-tree leaf: (2 + log s_max) log n. */
    double heavy_leaf_credits() const { return (2.0 + log_s_max()) * log_n; }
    /** Credits held by a whole buffer tree with s leaves: s (2 + log s_max - log s) log n. */
    double buffer_tree_credits(std::size_t s) const
    {
        if (s == 0) return 0.0;
        const double sd = static_cast<double>(s);
        return sd * (2.0 + log_s_max() - std::log2(sd)) * log_n;
    }
    /** Upper bound on the initial credit endowment of a fresh structure. */
    double initial_endowment_bound() const
    {
        return std::pow(log_n, tuning.eps_h) * heavy_leaf_credits() + 2.0 * static_cast<double>(s_max) * log_n +
               static_cast<double>(n);
    }
};

} // namespace dmsf
