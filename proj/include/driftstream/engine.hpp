#pragma once
// The online clustering engine. Samples arrive one at a time; in adaptive
// mode they are buffered per time window and each expired window is flushed
// against the model with a radius estimated from that window's data (median
// pairwise distance). In fixed mode every sample is processed immediately
// with a constant radius, matching the classic per-sample scheme.
//
// Micro-clusters that absorb enough samples are promoted to macro status,
// linked to geometrically intersecting macros, and share one label per
// connected component. Idle clusters are killed and split components are
// deterministically relabeled.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftstream/model.hpp"

namespace driftstream {

enum class EventKind {
    ClusterCreated,
    ClusterPromoted,
    ClustersLinked,
    ClusterKilled,
    ComponentRelabeled,
};

inline const char* event_name(EventKind k) {
    switch (k) {
        case EventKind::ClusterCreated: return "created";
        case EventKind::ClusterPromoted: return "promoted";
        case EventKind::ClustersLinked: return "linked";
        case EventKind::ClusterKilled: return "killed";
        case EventKind::ComponentRelabeled: return "relabeled";
    }
    return "?";
}

struct ModelEvent {
    EventKind kind;
    Tick clock = 0;
    ClusterId subject = 0;
    ClusterId other = 0;  // peer cluster for linked events
    Label label = 0;
};

// Median of pairwise Euclidean distances in the buffer. Degenerate buffers
// (fewer than two samples, or a median below min_radius) fall back to the
// previous flush's radius when available, else to min_radius. Buffers larger
// than pair_cap sample a fixed budget of pairs with a deterministic rng.
inline double compute_radius(std::span<const Sample> buffer, std::optional<double> previous,
                             double min_radius, std::size_t pair_cap = 4096) {
    if (buffer.empty()) throw ContractError("compute_radius: empty buffer");
    const std::size_t n = buffer.size();
    if (n < 2) return previous.value_or(min_radius);

    std::vector<double> sq;
    if (n <= pair_cap) {
        sq.reserve(n * (n - 1) / 2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                sq.push_back(squared_distance(buffer[i].features, buffer[j].features));
    } else {
        const std::size_t budget = 64 * std::max<std::size_t>(pair_cap, 1);
        std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
        sq.reserve(budget);
        while (sq.size() < budget) {
            const std::size_t i = rng() % n;
            const std::size_t j = rng() % n;
            if (i == j) continue;
            sq.push_back(squared_distance(buffer[i].features, buffer[j].features));
        }
    }

    const std::size_t mid = sq.size() / 2;
    std::nth_element(sq.begin(), sq.begin() + mid, sq.end());
    double median = std::sqrt(sq[mid]);
    if (sq.size() % 2 == 0) {
        const double below =
            std::sqrt(*std::max_element(sq.begin(), sq.begin() + mid));
        median = 0.5 * (below + median);
    }
    if (median < min_radius) return previous.value_or(min_radius);
    return median;
}

// Nearest micro-cluster by center distance; ties go to the lowest id.
inline std::optional<std::pair<ClusterId, double>> nearest_cluster(const ClusterModel& model,
                                                                   std::span<const double> point) {
    std::optional<std::pair<ClusterId, double>> best;
    for (const auto& [id, mc] : model.clusters) {
        const double bound = best ? best->second : std::numeric_limits<double>::infinity();
        const double d2 = squared_distance_bounded(mc.center, point, bound);
        if (!best || d2 < best->second) best = {id, d2};
    }
    return best;
}

// Nearest cluster whose radius covers the point, if any; ties to lowest id.
inline std::optional<ClusterId> covering_cluster(const ClusterModel& model,
                                                 std::span<const double> point) {
    std::optional<ClusterId> best;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (const auto& [id, mc] : model.clusters) {
        const double r2 = mc.radius * mc.radius;
        const double d2 = squared_distance_bounded(mc.center, point, std::max(r2, best_d2));
        if (d2 <= r2 && d2 < best_d2) {
            best = id;
            best_d2 = d2;
        }
    }
    return best;
}

// True when the kernel ball of one cluster meets the shell annulus of the
// other, in either direction. The shell spans [kernel_radius, radius] and all
// comparisons are inclusive, so touching regions count as intersecting.
inline bool macro_intersects(const MicroCluster& a, const MicroCluster& b) {
    const double d = distance(a.center, b.center);
    const auto kernel_meets_shell = [d](const MicroCluster& x, const MicroCluster& y) {
        return d <= x.kernel_radius + y.radius && d + x.kernel_radius >= y.kernel_radius;
    };
    return kernel_meets_shell(a, b) || kernel_meets_shell(b, a);
}

// Re-establishes the one-label-per-component rule. Each old label stays with
// the component holding the smallest-id cluster that carried it; components
// left without any owned label receive fresh ones, in min-id order.
inline void relabel_components(ClusterModel& model, std::vector<ModelEvent>& events) {
    const auto components = detail::labeled_components(model);

    std::map<ClusterId, std::size_t> comp_of;
    for (std::size_t c = 0; c < components.size(); ++c)
        for (ClusterId id : components[c]) comp_of[id] = c;

    // smallest-id holder per label; map iteration over clusters is id-ordered
    std::map<Label, ClusterId> holder;
    for (const auto& [id, mc] : model.clusters)
        if (mc.label > 0) holder.emplace(mc.label, id);

    std::vector<std::set<Label>> owned(components.size());
    for (const auto& [label, id] : holder) owned[comp_of[id]].insert(label);

    for (std::size_t c = 0; c < components.size(); ++c) {
        const Label fresh = owned[c].empty() ? model.next_label++ : *owned[c].begin();
        bool changed = false;
        for (ClusterId id : components[c]) {
            MicroCluster& mc = model.clusters.at(id);
            if (mc.label != fresh) {
                mc.label = fresh;
                changed = true;
            }
        }
        if (changed)
            events.push_back({EventKind::ComponentRelabeled, model.clock, components[c].front(), 0,
                              fresh});
    }
}

inline MicroCluster& create_micro(ClusterModel& model, const Sample& s, double radius,
                                  const EngineConfig& cfg, std::vector<ModelEvent>& events) {
    if (!(radius >= cfg.min_radius)) throw ContractError("create_micro: radius below min_radius");
    MicroCluster mc;
    mc.id = model.next_id++;
    mc.center = s.features;
    mc.radius = radius;
    mc.kernel_radius = radius / cfg.kernel_divisor;
    mc.density = 1;
    mc.kernel_count = 1;
    mc.last_update = s.timestamp;
    mc.label = 0;
    const auto it = model.clusters.emplace(mc.id, std::move(mc)).first;
    events.push_back({EventKind::ClusterCreated, s.timestamp, it->first, 0, 0});
    return it->second;
}

// Absorbs one covered sample: bumps density, moves the center by the
// incremental kernel mean on kernel hits, and promotes the cluster to macro
// status once the density threshold is reached. Promotion links the cluster
// to every intersecting macro and the merged component settles on its
// smallest label.
inline void update_micro(ClusterModel& model, ClusterId id, const Sample& s,
                         const EngineConfig& cfg, std::vector<ModelEvent>& events) {
    MicroCluster& mc = model.clusters.at(id);
    const double d2 = squared_distance(mc.center, s.features);
    if (d2 > mc.radius * mc.radius) throw ContractError("update_micro: sample outside cluster");

    mc.last_update = s.timestamp;
    mc.density += 1;
    if (d2 <= mc.kernel_radius * mc.kernel_radius) {
        mc.kernel_count += 1;
        for (std::size_t i = 0; i < mc.center.size(); ++i)
            mc.center[i] += (s.features[i] - mc.center[i]) / static_cast<double>(mc.kernel_count);
    }

    if (mc.density >= cfg.density_threshold && mc.label == 0) {
        std::vector<ClusterId> neighbors;
        for (const auto& [oid, other] : model.clusters)
            if (oid != id && other.label > 0 && macro_intersects(mc, other))
                neighbors.push_back(oid);

        Label chosen = 0;
        for (ClusterId nb : neighbors) {
            const Label l = model.clusters.at(nb).label;
            if (chosen == 0 || l < chosen) chosen = l;
        }
        if (chosen == 0) chosen = model.next_label++;
        mc.label = chosen;
        events.push_back({EventKind::ClusterPromoted, s.timestamp, id, 0, chosen});
        for (ClusterId nb : neighbors) {
            mc.edges.insert(nb);
            model.clusters.at(nb).edges.insert(id);
            events.push_back({EventKind::ClustersLinked, s.timestamp, id, nb, 0});
        }
        if (!neighbors.empty()) relabel_components(model, events);
    }
}

// Removes every cluster idle for at least max_idle ticks, detaches its edges
// symmetrically, and relabels whatever components the removals touched.
inline void kill_expired(ClusterModel& model, const EngineConfig& cfg,
                         std::vector<ModelEvent>& events) {
    std::vector<ClusterId> doomed;
    for (const auto& [id, mc] : model.clusters)
        if (model.clock - mc.last_update >= cfg.max_idle) doomed.push_back(id);
    if (doomed.empty()) return;

    for (ClusterId id : doomed) {
        const MicroCluster& mc = model.clusters.at(id);
        for (ClusterId nb : mc.edges) {
            const auto it = model.clusters.find(nb);
            if (it != model.clusters.end()) it->second.edges.erase(id);
        }
        events.push_back({EventKind::ClusterKilled, model.clock, id, 0, mc.label});
        model.clusters.erase(id);
    }
    relabel_components(model, events);
}

// Assign-or-create for a single sample against the live model: the nearest
// cluster absorbs it when its own radius covers the sample, otherwise a new
// cluster is created with radius_for_new.
inline void absorb_or_create(ClusterModel& model, const Sample& s, double radius_for_new,
                             const EngineConfig& cfg, std::vector<ModelEvent>& events) {
    const auto nearest = nearest_cluster(model, s.features);
    if (nearest) {
        const MicroCluster& mc = model.clusters.at(nearest->first);
        if (nearest->second <= mc.radius * mc.radius) {
            update_micro(model, nearest->first, s, cfg, events);
            return;
        }
    }
    create_micro(model, s, radius_for_new, cfg, events);
}

// Macro label of the nearest covering cluster, if it has one. Never mutates
// the model; unpromoted coverage and no coverage both yield nullopt.
inline std::optional<Label> predict(const ClusterModel& model, const Sample& s) {
    const auto id = covering_cluster(model, s.features);
    if (!id) return std::nullopt;
    const Label l = model.clusters.at(*id).label;
    if (l <= 0) return std::nullopt;
    return l;
}

class Engine {
public:
    explicit Engine(EngineConfig cfg) : cfg_(std::move(cfg)) { validate_config(cfg_); }

    // Feeds one sample. Adaptive mode buffers it and flushes expired windows
    // first; fixed mode processes it immediately. Expiry and fixed-mode
    // ingestion both run the idle-cluster sweep.
    std::vector<ModelEvent> ingest(const Sample& s) {
        std::vector<ModelEvent> events;
        check_sample(s);
        model_.clock = s.timestamp;

        if (const auto* adaptive = std::get_if<AdaptiveRadius>(&cfg_.radius_policy)) {
            if (!started_) {
                window_start_ = s.timestamp;
                started_ = true;
            }
            bool expired = false;
            while (s.timestamp >= window_start_ + adaptive->window) {
                if (!buffer_.empty()) flush_buffer(events);
                window_start_ += adaptive->window;
                expired = true;
            }
            if (expired) kill_expired(model_, cfg_, events);
            buffer_.push_back(s);
        } else {
            started_ = true;
            absorb_or_create(model_, s, std::get<FixedRadius>(cfg_.radius_policy).radius, cfg_,
                             events);
            kill_expired(model_, cfg_, events);
        }
        return events;
    }

    // Processes whatever is pending in the current window without waiting for
    // it to expire. Call at end of stream.
    std::vector<ModelEvent> finish() {
        std::vector<ModelEvent> events;
        if (!buffer_.empty()) {
            flush_buffer(events);
            if (const auto* adaptive = std::get_if<AdaptiveRadius>(&cfg_.radius_policy))
                window_start_ += adaptive->window;
            kill_expired(model_, cfg_, events);
        }
        return events;
    }

    // Estimates the window radius and runs assign-or-create over the buffered
    // samples in arrival order; clusters created mid-buffer take part in the
    // nearest search for the samples after them.
    void flush_buffer(std::vector<ModelEvent>& events) {
        if (buffer_.empty()) throw ContractError("flush_buffer: empty buffer");
        const double r = compute_radius(buffer_, model_.previous_radius, cfg_.min_radius,
                                        cfg_.pair_sample_cap);
        model_.previous_radius = r;
        for (const Sample& s : buffer_) absorb_or_create(model_, s, r, cfg_, events);
        buffer_.clear();
    }

    const ClusterModel& model() const { return model_; }
    const EngineConfig& config() const { return cfg_; }
    const std::vector<Sample>& buffer() const { return buffer_; }
    Tick window_start() const { return window_start_; }

private:
    void check_sample(const Sample& s) {
        if (s.features.empty()) throw StreamError("ingest: empty feature vector");
        for (double v : s.features)
            if (!std::isfinite(v)) throw StreamError("ingest: non-finite feature value");
        if (dim_ == 0) dim_ = s.features.size();
        if (s.features.size() != dim_)
            throw StreamError("ingest: feature dimension " + std::to_string(s.features.size()) +
                              " != stream dimension " + std::to_string(dim_));
        if (s.timestamp < 0) throw StreamError("ingest: negative timestamp");
        if (started_ && s.timestamp < model_.clock)
            throw StreamError("ingest: decreasing timestamp");
    }

    EngineConfig cfg_;
    ClusterModel model_;
    std::vector<Sample> buffer_;  // adaptive mode only; empty in fixed mode
    Tick window_start_ = 0;
    std::size_t dim_ = 0;
    bool started_ = false;
};

// Lossless, byte-stable description of the model. Two models with identical
// state serialize to identical bytes.
inline std::string snapshot_json(const ClusterModel& model) {
    nlohmann::ordered_json j;
    j["clock"] = model.clock;
    j["next_id"] = model.next_id;
    j["next_label"] = model.next_label;
    if (model.previous_radius)
        j["previous_radius"] = *model.previous_radius;
    else
        j["previous_radius"] = nullptr;

    auto clusters = nlohmann::ordered_json::array();
    for (const auto& [id, mc] : model.clusters) {
        nlohmann::ordered_json cj;
        cj["id"] = id;
        cj["center"] = mc.center;
        cj["radius"] = mc.radius;
        cj["kernel_radius"] = mc.kernel_radius;
        cj["density"] = mc.density;
        cj["kernel_count"] = mc.kernel_count;
        cj["last_update"] = mc.last_update;
        cj["label"] = mc.label;
        cj["edges"] = mc.edges;  // std::set serializes in sorted order
        clusters.push_back(std::move(cj));
    }
    j["clusters"] = std::move(clusters);
    return j.dump(2) + "\n";
}

inline ClusterModel restore_model(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw StreamError(std::string("snapshot parse failed: ") + e.what());
    }
    ClusterModel model;
    try {
        model.clock = j.at("clock").get<Tick>();
        model.next_id = j.at("next_id").get<ClusterId>();
        model.next_label = j.at("next_label").get<Label>();
        if (!j.at("previous_radius").is_null())
            model.previous_radius = j.at("previous_radius").get<double>();
        for (const auto& cj : j.at("clusters")) {
            MicroCluster mc;
            mc.id = cj.at("id").get<ClusterId>();
            mc.center = cj.at("center").get<std::vector<double>>();
            mc.radius = cj.at("radius").get<double>();
            mc.kernel_radius = cj.at("kernel_radius").get<double>();
            mc.density = cj.at("density").get<std::int64_t>();
            mc.kernel_count = cj.at("kernel_count").get<std::int64_t>();
            mc.last_update = cj.at("last_update").get<Tick>();
            mc.label = cj.at("label").get<Label>();
            mc.edges = cj.at("edges").get<std::set<ClusterId>>();
            model.clusters.emplace(mc.id, std::move(mc));
        }
    } catch (const nlohmann::json::exception& e) {
        throw StreamError(std::string("snapshot field error: ") + e.what());
    }
    return model;
}

}  // namespace driftstream
