#pragma once
// Core domain types for the stream clustering engine: samples, micro-clusters,
// the live model, and the engine configuration. Everything here is a plain
// value type; moving a model between threads is safe, sharing one is not.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace driftstream {

using Tick = std::int64_t;       // logical event time; for index-based streams tick == sample index
using ClusterId = std::int64_t;  // creation-ordered, never reused within one engine lifetime
using Label = std::int64_t;      // macro-cluster label; 0 = not yet promoted
using ClassId = std::int64_t;    // ground-truth class id (evaluation only)

// Recoverable input problems: bad samples, bad files, bad configs.
struct StreamError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Precondition / internal invariant violations.
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

// One timestamped observation. The label is ground truth for evaluation and
// is never read by the engine itself.
struct Sample {
    std::vector<double> features;
    Tick timestamp = 0;
    std::optional<ClassId> label;
};

// Summary of a group of nearby stream points. The kernel is the inner ball
// of radius radius/kernel_divisor; samples landing there move the center,
// samples in the shell annulus only raise the density.
struct MicroCluster {
    ClusterId id = 0;
    std::vector<double> center;
    double radius = 0.0;
    double kernel_radius = 0.0;       // always radius / kernel_divisor
    std::int64_t density = 0;         // samples absorbed in total
    std::int64_t kernel_count = 0;    // samples absorbed inside the kernel (includes the creation point)
    Tick last_update = 0;
    std::set<ClusterId> edges;        // intersecting macro neighbors, symmetric
    Label label = 0;
};

// The set of live micro-clusters plus the undirected intersection graph.
// Connected components of labeled clusters are the macro-clusters; every
// component carries exactly one label and labels are unique per component.
struct ClusterModel {
    std::map<ClusterId, MicroCluster> clusters;
    Label next_label = 1;
    std::optional<double> previous_radius;  // last radius produced by a buffer flush
    Tick clock = 0;
    ClusterId next_id = 1;
};

struct AdaptiveRadius {
    Tick window = 100;  // buffer span in ticks; the radius is re-estimated per window
};

struct FixedRadius {
    double radius = 0.1;  // every cluster is created with this radius
};

using RadiusPolicy = std::variant<AdaptiveRadius, FixedRadius>;

struct EngineConfig {
    RadiusPolicy radius_policy = AdaptiveRadius{};
    std::int64_t density_threshold = 5;  // absorbed-sample count that promotes a micro to macro
    double kernel_divisor = 2.0;         // must exceed 1 so the kernel stays inside the cluster
    Tick max_idle = 2000;                // clusters idle for at least this many ticks are killed
    double min_radius = 1e-9;            // clamp for degenerate radius estimates
    std::size_t pair_sample_cap = 4096;  // buffers larger than this use a sampled pairwise median
};

inline bool is_adaptive(const EngineConfig& cfg) {
    return std::holds_alternative<AdaptiveRadius>(cfg.radius_policy);
}

inline void validate_config(const EngineConfig& cfg) {
    if (cfg.density_threshold < 1) throw StreamError("density threshold must be positive");
    if (!(cfg.kernel_divisor > 1.0)) throw StreamError("kernel divisor must exceed 1");
    if (cfg.max_idle < 1) throw StreamError("idle threshold must be positive");
    if (!(cfg.min_radius > 0.0)) throw StreamError("min radius must be positive");
    if (const auto* a = std::get_if<AdaptiveRadius>(&cfg.radius_policy)) {
        if (a->window < 1) throw StreamError("window must be positive");
    } else {
        const auto& f = std::get<FixedRadius>(cfg.radius_policy);
        if (!(f.radius >= cfg.min_radius)) throw StreamError("fixed radius must be at least min radius");
    }
}

// class x cluster count table; rows are ground-truth classes, columns are
// predicted clusters.
struct Contingency {
    std::size_t n_classes = 0;
    std::size_t n_clusters = 0;
    std::vector<std::int64_t> counts;     // row-major, n_classes * n_clusters
    std::vector<std::int64_t> row_sums;
    std::vector<std::int64_t> col_sums;
    std::int64_t total = 0;
    std::vector<ClassId> class_ids;       // row index -> original class id
    std::vector<ClassId> cluster_ids;     // column index -> original cluster id

    std::int64_t at(std::size_t i, std::size_t j) const { return counts[i * n_clusters + j]; }
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

// Early-exit variant for nearest-neighbor scans: bails out once the running
// sum exceeds bound. Checked in blocks so the common case stays branch-light.
inline double squared_distance_bounded(std::span<const double> a, std::span<const double> b,
                                       double bound) {
    double acc = 0.0;
    const std::size_t n = a.size();
    std::size_t i = 0;
    while (i < n) {
        const std::size_t stop = std::min(n, i + 64);
        for (; i < stop; ++i) {
            const double d = a[i] - b[i];
            acc += d * d;
        }
        if (acc > bound) return acc;
    }
    return acc;
}

inline double distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

namespace detail {

// Deterministic component discovery over labeled clusters, in min-id order.
inline std::vector<std::vector<ClusterId>> labeled_components(const ClusterModel& model) {
    std::vector<std::vector<ClusterId>> components;
    std::set<ClusterId> seen;
    for (const auto& [id, mc] : model.clusters) {
        if (mc.label <= 0 || seen.count(id)) continue;
        std::vector<ClusterId> comp;
        std::vector<ClusterId> stack{id};
        seen.insert(id);
        while (!stack.empty()) {
            const ClusterId cur = stack.back();
            stack.pop_back();
            comp.push_back(cur);
            const auto it = model.clusters.find(cur);
            if (it == model.clusters.end()) continue;
            for (ClusterId nb : it->second.edges) {
                if (!seen.count(nb) && model.clusters.count(nb)) {
                    seen.insert(nb);
                    stack.push_back(nb);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
    }
    return components;
}

}  // namespace detail

// Reports every broken type invariant as a human-readable string. Empty
// result means the model is consistent. Never throws.
inline std::vector<std::string> validate_model(const ClusterModel& model, const EngineConfig& cfg) {
    std::vector<std::string> violations;
    const auto complain = [&](std::string msg) { violations.push_back(std::move(msg)); };

    std::size_t dim = 0;
    for (const auto& [id, mc] : model.clusters) {
        const std::string tag = "cluster " + std::to_string(id);
        if (mc.id != id) complain(tag + ": key/id mismatch");
        if (dim == 0) dim = mc.center.size();
        if (mc.center.size() != dim) complain(tag + ": dimension mismatch");
        if (!(mc.radius > 0.0)) complain(tag + ": non-positive radius");
        if (!(mc.kernel_radius > 0.0 && mc.kernel_radius < mc.radius))
            complain(tag + ": kernel radius outside (0, radius)");
        if (mc.kernel_radius != mc.radius / cfg.kernel_divisor)
            complain(tag + ": kernel radius != radius / kernel divisor");
        if (mc.density < 1) complain(tag + ": density below 1");
        if (mc.kernel_count < 0 || mc.kernel_count > mc.density)
            complain(tag + ": kernel count outside [0, density]");
        if (mc.label > 0 && mc.density < cfg.density_threshold)
            complain(tag + ": labeled below density threshold");
        if (mc.label < 0) complain(tag + ": negative label");
        if (mc.label >= model.next_label) complain(tag + ": label not below next_label");
        if (mc.last_update > model.clock) complain(tag + ": last update beyond clock");
        if (mc.edges.count(id)) complain(tag + ": self edge");
        for (ClusterId nb : mc.edges) {
            const auto it = model.clusters.find(nb);
            if (it == model.clusters.end()) {
                complain(tag + ": dangling edge to " + std::to_string(nb));
            } else if (!it->second.edges.count(id)) {
                complain("asymmetric edge (" + std::to_string(id) + "," + std::to_string(nb) + ")");
            }
        }
    }

    std::map<Label, int> label_components;
    for (const auto& comp : detail::labeled_components(model)) {
        std::set<Label> labels;
        for (ClusterId id : comp) labels.insert(model.clusters.at(id).label);
        if (labels.size() != 1) {
            complain("component label mismatch at cluster " + std::to_string(comp.front()));
        }
        for (Label l : labels) ++label_components[l];
    }
    for (const auto& [label, uses] : label_components) {
        if (uses > 1) complain("label " + std::to_string(label) + " shared by distinct components");
    }
    if (!model.clusters.empty() && model.clusters.rbegin()->first >= model.next_id)
        complain("next_id not beyond largest cluster id");
    return violations;
}

}  // namespace driftstream
