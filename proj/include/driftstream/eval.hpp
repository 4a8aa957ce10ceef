#pragma once
// Horizon-based prequential evaluation, exhaustive grid search over engine
// parameters, and the single-thread ingestion benchmark.
//
// The prequential protocol is test-then-train: after ingesting the sample at
// the current position, the frozen model predicts the next H samples and the
// agreement with their ground truth is recorded, then the stream advances.
// Macro agreement is scored with ARI over predicted labels; micro quality
// with purity over covering cluster ids. Uncovered samples count as a
// reserved noise cluster in both.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "driftstream/csv.hpp"
#include "driftstream/data.hpp"
#include "driftstream/engine.hpp"
#include "driftstream/metrics.hpp"
#include "driftstream/model.hpp"

namespace driftstream {

struct EvalConfig {
    std::int64_t horizon = 20;  // look-ahead samples scored per evaluation point
    Tick interval = 1;          // evaluate every this many ticks
    std::uint64_t seed = 0;
};

struct TraceRow {
    Tick clock = 0;
    double ari = 0.0;
    double purity = 0.0;
    std::int64_t clusters = 0;
    std::int64_t macros = 0;
};

struct EvalSummary {
    double mean_ari = 0.0;
    double mean_purity = 0.0;
};

struct EvalTrace {
    std::vector<TraceRow> rows;
    EvalSummary summary;
};

inline std::int64_t macro_count(const ClusterModel& model) {
    std::set<Label> labels;
    for (const auto& [id, mc] : model.clusters)
        if (mc.label > 0) labels.insert(mc.label);
    return static_cast<std::int64_t>(labels.size());
}

// Predicted macro label per sample on a frozen model; uncovered or
// unpromoted coverage maps to the reserved noise cluster id.
inline std::vector<ClassId> final_assignment(const ClusterModel& model,
                                             std::span<const Sample> samples) {
    std::vector<ClassId> out;
    out.reserve(samples.size());
    for (const Sample& s : samples) {
        const auto label = predict(model, s);
        out.push_back(label ? static_cast<ClassId>(*label) : kNoiseCluster);
    }
    return out;
}

inline EvalTrace prequential_run(std::span<const Sample> stream, const EngineConfig& engine_cfg,
                                 const EvalConfig& eval_cfg) {
    if (eval_cfg.horizon < 1) throw StreamError("prequential: horizon must be positive");
    if (eval_cfg.interval < 1) throw StreamError("prequential: interval must be positive");
    const std::size_t n = stream.size();
    const std::size_t horizon = static_cast<std::size_t>(eval_cfg.horizon);
    if (n <= horizon) throw StreamError("prequential: stream no longer than horizon");
    for (const Sample& s : stream)
        if (!s.label) throw StreamError("prequential: ground-truth labels required");

    Engine engine(engine_cfg);
    EvalTrace trace;
    const Tick origin = stream.front().timestamp;

    for (std::size_t i = 0; i < n; ++i) {
        engine.ingest(stream[i]);
        if ((stream[i].timestamp - origin) % eval_cfg.interval != 0) continue;
        if (i + horizon >= n) continue;  // fewer than H samples left to look at

        std::vector<ClassId> truth, macro_pred, micro_pred;
        truth.reserve(horizon);
        macro_pred.reserve(horizon);
        micro_pred.reserve(horizon);
        const ClusterModel& model = engine.model();
        for (std::size_t k = i + 1; k <= i + horizon; ++k) {
            truth.push_back(*stream[k].label);
            const auto label = predict(model, stream[k]);
            macro_pred.push_back(label ? static_cast<ClassId>(*label) : kNoiseCluster);
            const auto cover = covering_cluster(model, stream[k].features);
            micro_pred.push_back(cover ? static_cast<ClassId>(*cover) : kNoiseCluster);
        }

        TraceRow row;
        row.clock = stream[i].timestamp;
        row.ari = ari(build_contingency(truth, macro_pred));
        row.purity = purity(build_contingency(truth, micro_pred));
        row.clusters = static_cast<std::int64_t>(model.clusters.size());
        row.macros = macro_count(model);
        trace.rows.push_back(row);
    }

    for (const TraceRow& row : trace.rows) {
        trace.summary.mean_ari += row.ari;
        trace.summary.mean_purity += row.purity;
    }
    if (!trace.rows.empty()) {
        trace.summary.mean_ari /= static_cast<double>(trace.rows.size());
        trace.summary.mean_purity /= static_cast<double>(trace.rows.size());
    }
    return trace;
}

struct GridResult {
    EngineConfig cfg;
    EvalSummary summary;
};

// Every configuration gets an isolated engine and an independent prequential
// run; results are ranked by mean ARI, ties by mean purity, remaining ties by
// the order the configurations were given (generate grids lexicographically
// to make that order meaningful).
inline std::vector<GridResult> grid_search(std::span<const Sample> stream,
                                           std::span<const EngineConfig> configs,
                                           const EvalConfig& eval_cfg, unsigned threads = 1) {
    if (configs.empty()) throw StreamError("grid_search: empty grid");
    std::vector<GridResult> results(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) results[i].cfg = configs[i];

    std::atomic<std::size_t> cursor{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto run_range = [&] {
        while (true) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= configs.size()) break;
            try {
                results[i].summary = prequential_run(stream, configs[i], eval_cfg).summary;
            } catch (...) {
                const std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                cursor.store(configs.size());  // stop handing out work
                break;
            }
        }
    };

    if (threads <= 1) {
        run_range();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(run_range);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::stable_sort(results.begin(), results.end(), [](const GridResult& a, const GridResult& b) {
        if (a.summary.mean_ari != b.summary.mean_ari)
            return a.summary.mean_ari > b.summary.mean_ari;
        return a.summary.mean_purity > b.summary.mean_purity;
    });
    return results;
}

inline std::vector<EngineConfig> adaptive_grid(const EngineConfig& base,
                                               std::span<const Tick> windows,
                                               std::span<const std::int64_t> densities,
                                               std::span<const double> divisors) {
    std::vector<EngineConfig> out;
    for (Tick w : windows)
        for (std::int64_t d : densities)
            for (double k : divisors) {
                EngineConfig cfg = base;
                cfg.radius_policy = AdaptiveRadius{w};
                cfg.density_threshold = d;
                cfg.kernel_divisor = k;
                out.push_back(cfg);
            }
    return out;
}

inline std::vector<EngineConfig> fixed_grid(const EngineConfig& base, std::span<const double> radii,
                                            std::span<const std::int64_t> densities) {
    std::vector<EngineConfig> out;
    for (double r : radii)
        for (std::int64_t d : densities) {
            EngineConfig cfg = base;
            cfg.radius_policy = FixedRadius{r};
            cfg.density_threshold = d;
            out.push_back(cfg);
        }
    return out;
}

// Default search spaces: ten evenly spaced points per range, except the
// kernel divisor where the lower end of its nominal [1, 10] range is dropped
// because the kernel must stay strictly inside the cluster.
inline std::vector<Tick> default_window_grid() {
    std::vector<Tick> out;
    for (int i = 0; i < 10; ++i)
        out.push_back(static_cast<Tick>(std::llround(60.0 + i * (1200.0 - 60.0) / 9.0)));
    return out;
}

inline std::vector<std::int64_t> default_density_grid() {
    return {2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
}

inline std::vector<double> default_divisor_grid() {
    return {2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0};
}

inline std::vector<double> default_radius_grid() {
    std::vector<double> out;
    for (int i = 0; i < 10; ++i) out.push_back(0.01 + i * (1.0 - 0.01) / 9.0);
    return out;
}

// Component-wise mean of per-user best configurations, for building one
// global model out of per-stream grid winners. All inputs must share the
// radius policy kind.
inline EngineConfig average_configs(std::span<const EngineConfig> configs) {
    if (configs.empty()) throw StreamError("average_configs: nothing to average");
    EngineConfig out = configs.front();
    const bool adaptive = is_adaptive(out);
    double window = 0.0, radius = 0.0, density = 0.0, divisor = 0.0;
    for (const EngineConfig& cfg : configs) {
        if (is_adaptive(cfg) != adaptive)
            throw StreamError("average_configs: mixed radius policies");
        if (adaptive)
            window += static_cast<double>(std::get<AdaptiveRadius>(cfg.radius_policy).window);
        else
            radius += std::get<FixedRadius>(cfg.radius_policy).radius;
        density += static_cast<double>(cfg.density_threshold);
        divisor += cfg.kernel_divisor;
    }
    const double m = static_cast<double>(configs.size());
    if (adaptive)
        out.radius_policy = AdaptiveRadius{static_cast<Tick>(std::llround(window / m))};
    else
        out.radius_policy = FixedRadius{radius / m};
    out.density_threshold = std::max<std::int64_t>(1, std::llround(density / m));
    out.kernel_divisor = divisor / m;
    return out;
}

struct BenchBlobs {
    int n_blobs = 4;
    double stddev = 1.0;
    double center_box = 10.0;
};

struct BenchRow {
    std::size_t dim = 0;
    std::int64_t n = 0;
    double mean_s = 0.0;
    double min_s = 0.0;
};

// Wall-clock seconds to push one generated blob stream through a fresh
// engine, single thread, generation excluded from the measurement.
inline std::vector<BenchRow> bench_time(std::span<const std::size_t> dims, std::int64_t n_samples,
                                        const BenchBlobs& blobs, const EngineConfig& engine_cfg,
                                        int repeats, std::uint64_t seed = 0) {
    if (repeats < 1) throw StreamError("bench_time: repeats must be positive");
    std::vector<BenchRow> out;
    for (std::size_t dim : dims) {
        const BlobSpec spec =
            random_blob_spec(blobs.n_blobs, dim, n_samples, blobs.stddev, seed, blobs.center_box);
        const auto data = gen_blobs(spec);

        BenchRow row;
        row.dim = dim;
        row.n = n_samples;
        row.min_s = std::numeric_limits<double>::infinity();
        for (int r = 0; r < repeats; ++r) {
            Engine engine(engine_cfg);
            const auto start = std::chrono::steady_clock::now();
            for (const Sample& s : data) engine.ingest(s);
            engine.finish();
            const std::chrono::duration<double> elapsed =
                std::chrono::steady_clock::now() - start;
            row.mean_s += elapsed.count();
            row.min_s = std::min(row.min_s, elapsed.count());
        }
        row.mean_s /= repeats;
        out.push_back(row);
    }
    return out;
}

inline std::string trace_csv(const EvalTrace& trace) {
    std::string out = "clock,ari,purity,clusters,macros\n";
    for (const TraceRow& row : trace.rows) {
        out += std::to_string(row.clock);
        out += ',';
        out += format_double(row.ari);
        out += ',';
        out += format_double(row.purity);
        out += ',';
        out += std::to_string(row.clusters);
        out += ',';
        out += std::to_string(row.macros);
        out += '\n';
    }
    return out;
}

inline std::string ranking_csv(std::span<const GridResult> results) {
    std::string out = "rank,mode,window,radius,density,kernel_divisor,mean_ari,mean_purity\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const EngineConfig& cfg = results[i].cfg;
        out += std::to_string(i + 1);
        if (const auto* a = std::get_if<AdaptiveRadius>(&cfg.radius_policy)) {
            out += ",adaptive," + std::to_string(a->window) + ",";
        } else {
            out += ",fixed,," + format_double(std::get<FixedRadius>(cfg.radius_policy).radius);
        }
        out += ',' + std::to_string(cfg.density_threshold);
        out += ',' + format_double(cfg.kernel_divisor);
        out += ',' + format_double(results[i].summary.mean_ari);
        out += ',' + format_double(results[i].summary.mean_purity);
        out += '\n';
    }
    return out;
}

inline std::string bench_csv(std::span<const BenchRow> rows) {
    std::string out = "dims,n,mean_s,min_s\n";
    for (const BenchRow& row : rows) {
        out += std::to_string(row.dim);
        out += ',' + std::to_string(row.n);
        out += ',' + format_double(row.mean_s);
        out += ',' + format_double(row.min_s);
        out += '\n';
    }
    return out;
}

}  // namespace driftstream
