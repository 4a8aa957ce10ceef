#pragma once
// External cluster-validity measures: Adjusted Rand Index and per-cluster
// purity, both computed from a shared class x cluster contingency table.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "driftstream/model.hpp"

namespace driftstream {

// Reserved predicted-cluster id for samples no macro-cluster covers. It takes
// part in both metrics as an ordinary cluster column.
inline constexpr ClassId kNoiseCluster = -1;

inline Contingency build_contingency(std::span<const ClassId> truth, std::span<const ClassId> pred) {
    if (truth.size() != pred.size()) throw StreamError("contingency: label lists differ in length");
    if (truth.empty()) throw StreamError("contingency: empty label lists");

    Contingency c;
    std::map<ClassId, std::size_t> row_of, col_of;
    for (ClassId t : truth)
        if (row_of.emplace(t, row_of.size()).second) c.class_ids.push_back(t);
    for (ClassId p : pred)
        if (col_of.emplace(p, col_of.size()).second) c.cluster_ids.push_back(p);
    std::sort(c.class_ids.begin(), c.class_ids.end());
    std::sort(c.cluster_ids.begin(), c.cluster_ids.end());
    for (std::size_t i = 0; i < c.class_ids.size(); ++i) row_of[c.class_ids[i]] = i;
    for (std::size_t j = 0; j < c.cluster_ids.size(); ++j) col_of[c.cluster_ids[j]] = j;

    c.n_classes = c.class_ids.size();
    c.n_clusters = c.cluster_ids.size();
    c.counts.assign(c.n_classes * c.n_clusters, 0);
    c.row_sums.assign(c.n_classes, 0);
    c.col_sums.assign(c.n_clusters, 0);
    for (std::size_t k = 0; k < truth.size(); ++k) {
        const std::size_t i = row_of[truth[k]];
        const std::size_t j = col_of[pred[k]];
        ++c.counts[i * c.n_clusters + j];
        ++c.row_sums[i];
        ++c.col_sums[j];
        ++c.total;
    }
    return c;
}

namespace detail {

inline __int128 choose2(std::int64_t n) {
    return static_cast<__int128>(n) * (n - 1) / 2;
}

}  // namespace detail

// Chance-corrected partition agreement in [-1, 1]. Binomial terms are kept in
// integer arithmetic until the final division; a zero denominator means both
// partitions have identical pair structure and scores 1.
inline double ari(const Contingency& c) {
    if (c.total < 2) throw StreamError("ari: needs at least two samples");

    __int128 index = 0;
    for (std::int64_t nij : c.counts) index += detail::choose2(nij);
    __int128 sum_rows = 0, sum_cols = 0;
    for (std::int64_t a : c.row_sums) sum_rows += detail::choose2(a);
    for (std::int64_t b : c.col_sums) sum_cols += detail::choose2(b);
    const __int128 pairs = detail::choose2(c.total);

    // ARI = (index - sum_rows*sum_cols/pairs) / ((sum_rows+sum_cols)/2 - sum_rows*sum_cols/pairs),
    // cleared of fractions by multiplying through with 2*pairs.
    const __int128 num = 2 * (pairs * index - sum_rows * sum_cols);
    const __int128 den = pairs * (sum_rows + sum_cols) - 2 * sum_rows * sum_cols;
    if (den == 0) return 1.0;
    return static_cast<double>(num) / static_cast<double>(den);
}

// Mean over non-empty clusters of the dominant-class fraction, in (0, 1].
// Accumulated as an exact rational while it fits 128 bits so that small
// tables (e.g. 2/3 and 1 averaging to 5/6) come out bit-exact.
inline double purity(const Contingency& c) {
    std::int64_t live_clusters = 0;
    __int128 num = 0, den = 1;
    bool exact = true;
    double approx = 0.0;

    constexpr __int128 kLimit = static_cast<__int128>(1) << 100;
    for (std::size_t j = 0; j < c.n_clusters; ++j) {
        const std::int64_t size = c.col_sums[j];
        if (size == 0) continue;
        ++live_clusters;
        std::int64_t dominant = 0;
        for (std::size_t i = 0; i < c.n_classes; ++i)
            dominant = std::max(dominant, c.at(i, j));
        approx += static_cast<double>(dominant) / static_cast<double>(size);
        if (exact) {
            // num/den += dominant/size over the lcm of the denominators
            const std::int64_t g = std::gcd(static_cast<std::int64_t>(den % size), size);
            const __int128 mult = size / g;
            if (den > kLimit / mult) {
                exact = false;
            } else {
                num = num * mult + static_cast<__int128>(dominant) * (den / g);
                den *= mult;
            }
        }
    }
    if (live_clusters == 0) throw StreamError("purity: table has no samples");
    if (exact)
        return static_cast<double>(num) / static_cast<double>(den * live_clusters);
    return approx / static_cast<double>(live_clusters);
}

}  // namespace driftstream
