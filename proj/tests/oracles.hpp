#pragma once
// Brute-force reference implementations used only by tests. They must stay
// independent of the library code paths they check: ARI goes through pair
// counting instead of the contingency table, purity groups raw lists
// directly, and the median is taken from a fully sorted distance list.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "driftstream/model.hpp"

namespace oracles {

// ARI from pairwise agreement counts: a = pairs together in both partitions,
// b = together in truth only, c = together in prediction only, d = neither.
inline double pair_counting_ari(std::span<const driftstream::ClassId> truth,
                                std::span<const driftstream::ClassId> pred) {
    const std::size_t n = truth.size();
    double a = 0, b = 0, c = 0, d = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool same_truth = truth[i] == truth[j];
            const bool same_pred = pred[i] == pred[j];
            if (same_truth && same_pred) ++a;
            else if (same_truth) ++b;
            else if (same_pred) ++c;
            else ++d;
        }
    const double denom = (a + b) * (b + d) + (a + c) * (c + d);
    if (denom == 0.0) return 1.0;
    return 2.0 * (a * d - b * c) / denom;
}

inline double direct_purity(std::span<const driftstream::ClassId> truth,
                            std::span<const driftstream::ClassId> pred) {
    std::map<driftstream::ClassId, std::map<driftstream::ClassId, std::int64_t>> per_cluster;
    for (std::size_t i = 0; i < truth.size(); ++i) ++per_cluster[pred[i]][truth[i]];
    double sum = 0.0;
    for (const auto& [cluster, classes] : per_cluster) {
        std::int64_t total = 0, dominant = 0;
        for (const auto& [cls, count] : classes) {
            total += count;
            dominant = std::max(dominant, count);
        }
        sum += static_cast<double>(dominant) / static_cast<double>(total);
    }
    return sum / static_cast<double>(per_cluster.size());
}

inline double median_pairwise_distance(std::span<const driftstream::Sample> buffer) {
    std::vector<double> dists;
    for (std::size_t i = 0; i < buffer.size(); ++i)
        for (std::size_t j = i + 1; j < buffer.size(); ++j)
            dists.push_back(std::sqrt(
                driftstream::squared_distance(buffer[i].features, buffer[j].features)));
    std::sort(dists.begin(), dists.end());
    const std::size_t m = dists.size();
    if (m % 2 == 1) return dists[m / 2];
    return 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
}

// Dense-sampling check that some point of the kernel ball of a lies in the
// shell annulus of b (2-D only).
inline bool kernel_meets_shell_sampled(const driftstream::MicroCluster& a,
                                       const driftstream::MicroCluster& b, int steps = 400) {
    for (int i = 0; i <= steps; ++i)
        for (int j = 0; j < steps; ++j) {
            const double rho = a.kernel_radius * static_cast<double>(i) / steps;
            const double theta = 2.0 * 3.14159265358979323846 * j / steps;
            const double px = a.center[0] + rho * std::cos(theta);
            const double py = a.center[1] + rho * std::sin(theta);
            const double dx = px - b.center[0];
            const double dy = py - b.center[1];
            const double dist = std::sqrt(dx * dx + dy * dy);
            if (dist >= b.kernel_radius && dist <= b.radius) return true;
        }
    return false;
}

}  // namespace oracles
