// Command-line front end: gen | run | eval | grid | bench.
//
// Engine and evaluation settings come from an optional JSON config file with
// flags taking precedence; the seed falls back to DRIFTSTREAM_SEED when
// neither source provides one. All outputs land in the --out directory under
// fixed filenames so reruns are diffable.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 internal error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "driftstream/csv.hpp"
#include "driftstream/data.hpp"
#include "driftstream/engine.hpp"
#include "driftstream/eval.hpp"
#include "driftstream/metrics.hpp"
#include "driftstream/model.hpp"

namespace fs = std::filesystem;
using namespace driftstream;

namespace {

// Bad flag combinations, as opposed to bad data; mapped to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Settings {
    std::string mode = "adaptive";
    Tick window = 100;
    double fixed_radius = 0.1;
    std::int64_t density = 5;
    double kernel_divisor = 2.0;
    Tick max_idle = 2000;
    double min_radius = 1e-9;
    std::int64_t horizon = 20;
    Tick interval = 1;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void apply_config_file(Settings& s, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StreamError("cannot open config " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw StreamError(path + ": " + e.what());
    }
    const auto get = [&](const char* key, auto& out) {
        if (j.contains(key)) out = j.at(key).get<std::decay_t<decltype(out)>>();
    };
    get("mode", s.mode);
    get("t_w", s.window);
    get("r", s.fixed_radius);
    get("d", s.density);
    get("k", s.kernel_divisor);
    get("t_max", s.max_idle);
    get("r_min", s.min_radius);
    get("h", s.horizon);
    get("t", s.interval);
    if (j.contains("seed")) {
        s.seed = j.at("seed").get<std::uint64_t>();
        s.seed_set = true;
    }
}

std::uint64_t resolve_seed(const Settings& s) {
    if (s.seed_set) return s.seed;
    if (const char* env = std::getenv("DRIFTSTREAM_SEED")) {
        std::int64_t v = 0;
        if (parse_int(env, v)) return static_cast<std::uint64_t>(v);
        throw StreamError("DRIFTSTREAM_SEED is not an integer");
    }
    return 0;
}

EngineConfig engine_config(const Settings& s) {
    EngineConfig cfg;
    if (s.mode == "adaptive") {
        cfg.radius_policy = AdaptiveRadius{s.window};
    } else if (s.mode == "fixed") {
        cfg.radius_policy = FixedRadius{s.fixed_radius};
    } else {
        throw StreamError("mode must be 'adaptive' or 'fixed', got '" + s.mode + "'");
    }
    cfg.density_threshold = s.density;
    cfg.kernel_divisor = s.kernel_divisor;
    cfg.max_idle = s.max_idle;
    cfg.min_radius = s.min_radius;
    return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw StreamError("cannot write " + path.string());
    out << content;
}

fs::path prepare_out_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw StreamError("cannot create output directory " + dir + ": " + ec.message());
    return p;
}

std::string events_csv(std::span<const ModelEvent> events) {
    std::string out = "clock,event,cluster,other,label\n";
    for (const ModelEvent& e : events) {
        out += std::to_string(e.clock);
        out += ',';
        out += event_name(e.kind);
        out += ',' + std::to_string(e.subject);
        out += ',' + std::to_string(e.other);
        out += ',' + std::to_string(e.label);
        out += '\n';
    }
    return out;
}

struct InputSpec {
    std::string path;
    bool toy = false;
    std::string label_column = "label";
    std::string time_column;
    bool sort_by_label = false;
};

std::vector<Sample> load_input(const InputSpec& in, std::uint64_t seed) {
    if (in.toy == !in.path.empty())
        throw UsageError("exactly one input source required: --input or --toy");
    std::vector<Sample> samples;
    if (in.toy) {
        samples = gen_toy(seed);
    } else {
        CsvSchema schema;
        schema.label_column = in.label_column;
        if (!in.time_column.empty()) schema.timestamp_column = in.time_column;
        samples = load_csv(in.path, schema).samples;
    }
    if (in.sort_by_label) samples = order_by_label(samples);
    return samples;
}

// Tracks which settings flags the user actually passed, across subcommands,
// so config-file values only fill the gaps.
struct OptionRegistry {
    std::map<std::string, std::vector<CLI::Option*>> by_name;

    void note(const std::string& name, CLI::Option* opt) { by_name[name].push_back(opt); }

    bool given(const std::string& name) const {
        const auto it = by_name.find(name);
        if (it == by_name.end()) return false;
        for (const CLI::Option* opt : it->second)
            if (opt->count() > 0) return true;
        return false;
    }
};

void add_engine_flags(CLI::App* cmd, Settings& s, OptionRegistry& reg) {
    reg.note("mode", cmd->add_option("--mode", s.mode, "Radius policy: adaptive or fixed"));
    reg.note("tw", cmd->add_option("--tw", s.window, "Adaptive window length in ticks"));
    reg.note("r", cmd->add_option("--r", s.fixed_radius, "Fixed-mode cluster radius"));
    reg.note("d", cmd->add_option("--d", s.density, "Density threshold for macro promotion"));
    reg.note("k", cmd->add_option("--k", s.kernel_divisor,
                                  "Kernel divisor (kernel radius = radius / k)"));
    reg.note("tmax", cmd->add_option("--tmax", s.max_idle, "Idle ticks before a cluster is killed"));
    reg.note("rmin", cmd->add_option("--rmin", s.min_radius, "Lower clamp for degenerate radii"));
}

void add_input_flags(CLI::App* cmd, InputSpec& in) {
    cmd->add_option("--input,-i", in.path, "Dataset CSV path");
    cmd->add_flag("--toy", in.toy, "Use the built-in toy dataset instead of a file");
    cmd->add_option("--label-column", in.label_column, "Label column name");
    cmd->add_option("--time-column", in.time_column, "Timestamp column name (default: row index)");
    cmd->add_flag("--sort-by-label", in.sort_by_label, "Stable-sort the stream by label first");
}

int cmd_gen(const Settings& settings, const std::string& out_path, bool toy, int n_blobs,
            std::size_t dims, std::int64_t n, double stddev) {
    const std::uint64_t seed = resolve_seed(settings);
    std::vector<Sample> samples;
    if (toy == (n_blobs > 0))
        throw UsageError("choose exactly one of --toy or --blobs");
    if (toy) {
        samples = gen_toy(seed);
    } else {
        if (dims < 1) throw UsageError("--dims must be at least 1");
        if (n < n_blobs) throw UsageError("--n must be at least the blob count");
        samples = gen_blobs(random_blob_spec(n_blobs, dims, n, stddev, seed));
    }
    save_csv(out_path, samples);
    std::cout << "wrote " << samples.size() << " rows to " << out_path << "\n";
    return 0;
}

int cmd_run(const Settings& settings, const InputSpec& input, const std::string& out_dir) {
    const std::uint64_t seed = resolve_seed(settings);
    const auto samples = load_input(input, seed);
    const EngineConfig cfg = engine_config(settings);
    const fs::path out = prepare_out_dir(out_dir);

    Engine engine(cfg);
    std::vector<ModelEvent> events;
    std::string flushes = "clock,clusters,macros\n";
    Tick last_window = engine.window_start();
    bool first = true;
    const auto record_flush = [&](Tick clock) {
        flushes += std::to_string(clock) + ',' +
                   std::to_string(engine.model().clusters.size()) + ',' +
                   std::to_string(macro_count(engine.model())) + '\n';
    };
    for (const Sample& s : samples) {
        const auto ev = engine.ingest(s);
        events.insert(events.end(), ev.begin(), ev.end());
        if (!first && engine.window_start() != last_window) record_flush(s.timestamp);
        last_window = engine.window_start();
        first = false;
    }
    const auto tail = engine.finish();
    events.insert(events.end(), tail.begin(), tail.end());
    record_flush(engine.model().clock);

    write_file(out / "snapshot.json", snapshot_json(engine.model()));
    write_file(out / "events.csv", events_csv(events));
    write_file(out / "flushes.csv", flushes);

    const auto violations = validate_model(engine.model(), cfg);
    if (!violations.empty()) throw ContractError("model invariant broken: " + violations.front());

    std::cout << "clusters=" << engine.model().clusters.size()
              << " macros=" << macro_count(engine.model());
    bool labeled = true;
    for (const Sample& s : samples) labeled = labeled && s.label.has_value();
    if (labeled) {
        std::vector<ClassId> truth;
        for (const Sample& s : samples) truth.push_back(*s.label);
        const auto pred = final_assignment(engine.model(), samples);
        std::cout << " final_ari=" << format_double(ari(build_contingency(truth, pred)));
    }
    std::cout << "\n";
    return 0;
}

int cmd_eval(const Settings& settings, const InputSpec& input, const std::string& out_dir) {
    const std::uint64_t seed = resolve_seed(settings);
    const auto samples = load_input(input, seed);
    const fs::path out = prepare_out_dir(out_dir);

    EvalConfig ecfg;
    ecfg.horizon = settings.horizon;
    ecfg.interval = settings.interval;
    ecfg.seed = seed;
    const auto trace = prequential_run(samples, engine_config(settings), ecfg);
    write_file(out / "trace.csv", trace_csv(trace));
    std::cout << "rows=" << trace.rows.size()
              << " mean_ari=" << format_double(trace.summary.mean_ari)
              << " mean_purity=" << format_double(trace.summary.mean_purity) << "\n";
    return 0;
}

int cmd_grid(const Settings& settings, const InputSpec& input, const std::string& out_dir,
             std::vector<Tick> windows, std::vector<std::int64_t> densities,
             std::vector<double> divisors, std::vector<double> radii, unsigned threads) {
    const std::uint64_t seed = resolve_seed(settings);
    const auto samples = load_input(input, seed);
    const fs::path out = prepare_out_dir(out_dir);

    EngineConfig base = engine_config(settings);
    std::vector<EngineConfig> configs;
    if (settings.mode == "adaptive") {
        if (windows.empty()) windows = default_window_grid();
        if (densities.empty()) densities = default_density_grid();
        if (divisors.empty()) divisors = default_divisor_grid();
        configs = adaptive_grid(base, windows, densities, divisors);
    } else {
        if (radii.empty()) radii = default_radius_grid();
        if (densities.empty()) densities = default_density_grid();
        configs = fixed_grid(base, radii, densities);
    }

    EvalConfig ecfg;
    ecfg.horizon = settings.horizon;
    ecfg.interval = settings.interval;
    ecfg.seed = seed;
    const auto ranked = grid_search(samples, configs, ecfg, threads);
    write_file(out / "ranking.csv", ranking_csv(ranked));

    const auto& best = ranked.front();
    std::cout << "configs=" << ranked.size() << " best";
    if (const auto* a = std::get_if<AdaptiveRadius>(&best.cfg.radius_policy))
        std::cout << " tw=" << a->window;
    else
        std::cout << " r=" << format_double(std::get<FixedRadius>(best.cfg.radius_policy).radius);
    std::cout << " d=" << best.cfg.density_threshold << " k=" << format_double(best.cfg.kernel_divisor)
              << " mean_ari=" << format_double(best.summary.mean_ari) << "\n";
    return 0;
}

int cmd_bench(const Settings& settings, const std::string& out_dir, std::vector<std::size_t> dims,
              std::int64_t n, int n_blobs, double stddev, int repeats) {
    const std::uint64_t seed = resolve_seed(settings);
    const fs::path out = prepare_out_dir(out_dir);
    BenchBlobs blobs;
    blobs.n_blobs = n_blobs;
    blobs.stddev = stddev;
    const auto rows = bench_time(dims, n, blobs, engine_config(settings), repeats, seed);
    write_file(out / "bench.csv", bench_csv(rows));
    for (const BenchRow& row : rows)
        std::cout << "dims=" << row.dim << " n=" << row.n << " mean_s=" << format_double(row.mean_s)
                  << " min_s=" << format_double(row.min_s) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online stream clustering with window-adaptive micro-cluster radii"};
    app.require_subcommand(1);
    // the evaluation flags are --h and --t, so help stays long-form only
    app.set_help_flag("--help", "Print help");

    Settings settings;
    OptionRegistry reg;
    std::string config_path;
    InputSpec input;
    std::string out_dir;
    std::uint64_t seed_flag = 0;

    app.add_option("--config", config_path, "JSON config file; flags override its values");
    const auto* seed_opt = app.add_option("--seed", seed_flag, "Seed (falls back to DRIFTSTREAM_SEED)");

    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset CSV");
    gen->set_help_flag("--help", "Print help");
    gen->fallthrough();
    bool gen_toy_flag = false;
    int gen_blobs_n = 0;
    std::size_t gen_dims = 2;
    std::int64_t gen_n = 10000;
    double gen_stddev = 1.0;
    std::string gen_out;
    gen->add_flag("--toy", gen_toy_flag, "Three-group 2-D toy dataset");
    gen->add_option("--blobs", gen_blobs_n, "Number of Gaussian blobs");
    gen->add_option("--dims", gen_dims, "Feature dimension for --blobs");
    gen->add_option("--n", gen_n, "Total sample count for --blobs");
    gen->add_option("--stddev", gen_stddev, "Blob standard deviation");
    gen->add_option("-o,--out", gen_out, "Output CSV path")->required();

    auto* run = app.add_subcommand("run", "Stream a dataset through one engine");
    run->set_help_flag("--help", "Print help");
    run->fallthrough();
    add_input_flags(run, input);
    add_engine_flags(run, settings, reg);
    run->add_option("--out", out_dir, "Output directory")->required();

    auto* eval = app.add_subcommand("eval", "Horizon-based prequential evaluation");
    eval->set_help_flag("--help", "Print help");
    eval->fallthrough();
    add_input_flags(eval, input);
    add_engine_flags(eval, settings, reg);
    reg.note("h", eval->add_option("--h", settings.horizon, "Evaluation horizon in samples"));
    reg.note("t", eval->add_option("--t", settings.interval, "Evaluation interval in ticks"));
    eval->add_option("--out", out_dir, "Output directory")->required();

    auto* grid = app.add_subcommand("grid", "Exhaustive parameter search");
    grid->set_help_flag("--help", "Print help");
    grid->fallthrough();
    add_input_flags(grid, input);
    add_engine_flags(grid, settings, reg);
    std::vector<Tick> grid_windows;
    std::vector<std::int64_t> grid_densities;
    std::vector<double> grid_divisors, grid_radii;
    unsigned grid_threads = 1;
    reg.note("h", grid->add_option("--h", settings.horizon, "Evaluation horizon in samples"));
    reg.note("t", grid->add_option("--t", settings.interval, "Evaluation interval in ticks"));
    grid->add_option("--tw-list", grid_windows, "Window values")->delimiter(',');
    grid->add_option("--d-list", grid_densities, "Density threshold values")->delimiter(',');
    grid->add_option("--k-list", grid_divisors, "Kernel divisor values")->delimiter(',');
    grid->add_option("--r-list", grid_radii, "Fixed radius values")->delimiter(',');
    grid->add_option("--threads", grid_threads, "Worker threads");
    grid->add_option("--out", out_dir, "Output directory")->required();

    auto* bench = app.add_subcommand("bench", "Single-thread ingestion timing");
    bench->set_help_flag("--help", "Print help");
    bench->fallthrough();
    add_engine_flags(bench, settings, reg);
    std::vector<std::size_t> bench_dims = {2, 10, 100};
    std::int64_t bench_n = 10000;
    int bench_blobs = 4;
    double bench_stddev = 1.0;
    int bench_repeats = 3;
    bench->add_option("--dims", bench_dims, "Feature dimensions to time")->delimiter(',');
    bench->add_option("--n", bench_n, "Samples per run");
    bench->add_option("--blobs", bench_blobs, "Number of blobs");
    bench->add_option("--stddev", bench_stddev, "Blob standard deviation");
    bench->add_option("--repeats", bench_repeats, "Repetitions per dimension");
    bench->add_option("--out", out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (!config_path.empty()) {
            const Settings from_flags = settings;  // parser already wrote flag values here
            Settings merged;
            apply_config_file(merged, config_path);
            if (reg.given("mode")) merged.mode = from_flags.mode;
            if (reg.given("tw")) merged.window = from_flags.window;
            if (reg.given("r")) merged.fixed_radius = from_flags.fixed_radius;
            if (reg.given("d")) merged.density = from_flags.density;
            if (reg.given("k")) merged.kernel_divisor = from_flags.kernel_divisor;
            if (reg.given("tmax")) merged.max_idle = from_flags.max_idle;
            if (reg.given("rmin")) merged.min_radius = from_flags.min_radius;
            if (reg.given("h")) merged.horizon = from_flags.horizon;
            if (reg.given("t")) merged.interval = from_flags.interval;
            settings = merged;
        }
        if (seed_opt->count() > 0) {
            settings.seed = seed_flag;
            settings.seed_set = true;
        }
        if (gen->parsed())
            return cmd_gen(settings, gen_out, gen_toy_flag, gen_blobs_n, gen_dims, gen_n,
                           gen_stddev);
        if (run->parsed()) return cmd_run(settings, input, out_dir);
        if (eval->parsed()) return cmd_eval(settings, input, out_dir);
        if (grid->parsed())
            return cmd_grid(settings, input, out_dir, grid_windows, grid_densities, grid_divisors,
                            grid_radii, grid_threads);
        if (bench->parsed())
            return cmd_bench(settings, out_dir, bench_dims, bench_n, bench_blobs, bench_stddev,
                             bench_repeats);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const StreamError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ContractError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
