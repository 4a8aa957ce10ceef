#pragma once
// Dataset plumbing: seeded synthetic generators, label-sorted stream
// ordering, CSV ingestion with explicit missing-value handling, and the
// iterative regression imputer that completes missing cells.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "driftstream/csv.hpp"
#include "driftstream/model.hpp"

namespace driftstream {

namespace detail {

// Gaussian draws via Box-Muller over mt19937_64 output: the standard library
// engine is portable by specification, the distribution objects are not.
class NormalSource {
public:
    explicit NormalSource(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform_open();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        constexpr double two_pi = 6.283185307179586476925286766559;
        spare_ = mag * std::sin(two_pi * u2);
        has_spare_ = true;
        return mag * std::cos(two_pi * u2);
    }

    double uniform_open() {  // (0, 1]
        return static_cast<double>((rng_() >> 11) + 1) * 0x1.0p-53;
    }

    std::mt19937_64& raw() { return rng_; }

private:
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace detail

struct Blob {
    std::vector<double> center;
    double stddev = 1.0;
    std::int64_t count = 1;
};

struct BlobSpec {
    std::vector<Blob> blobs;
    std::size_t dim = 2;
    std::uint64_t seed = 0;
};

// Isotropic Gaussian blobs, one label per blob, timestamps 0..n-1 in
// generation order (blob by blob, i.e. already label-sorted).
inline std::vector<Sample> gen_blobs(const BlobSpec& spec) {
    if (spec.dim < 1) throw StreamError("gen_blobs: dimension must be at least 1");
    if (spec.blobs.empty()) throw StreamError("gen_blobs: no blobs");
    for (const Blob& b : spec.blobs) {
        if (b.count < 1) throw StreamError("gen_blobs: blob count must be at least 1");
        if (b.stddev < 0.0) throw StreamError("gen_blobs: negative stddev");
        if (b.center.size() != spec.dim) throw StreamError("gen_blobs: center dimension mismatch");
    }

    detail::NormalSource noise(spec.seed);
    std::vector<Sample> out;
    Tick tick = 0;
    for (std::size_t b = 0; b < spec.blobs.size(); ++b) {
        const Blob& blob = spec.blobs[b];
        for (std::int64_t i = 0; i < blob.count; ++i) {
            Sample s;
            s.features.resize(spec.dim);
            for (std::size_t d = 0; d < spec.dim; ++d)
                s.features[d] = blob.center[d] + blob.stddev * noise.next();
            s.timestamp = tick++;
            s.label = static_cast<ClassId>(b);
            out.push_back(std::move(s));
        }
    }
    return out;
}

// Blob spec with centers drawn uniformly from [-box, box]^dim and the total
// sample count split as evenly as possible across blobs.
inline BlobSpec random_blob_spec(int n_blobs, std::size_t dim, std::int64_t n_total, double stddev,
                                 std::uint64_t seed, double box = 10.0) {
    if (n_blobs < 1) throw StreamError("random_blob_spec: need at least one blob");
    if (n_total < n_blobs) throw StreamError("random_blob_spec: fewer samples than blobs");
    BlobSpec spec;
    spec.dim = dim;
    spec.seed = seed;
    detail::NormalSource src(seed ^ 0xb10b5eedULL);
    for (int b = 0; b < n_blobs; ++b) {
        Blob blob;
        blob.stddev = stddev;
        blob.count = n_total / n_blobs + (b < n_total % n_blobs ? 1 : 0);
        blob.center.resize(dim);
        for (std::size_t d = 0; d < dim; ++d)
            blob.center[d] = box * (2.0 * src.uniform_open() - 1.0);
        spec.blobs.push_back(std::move(blob));
    }
    return spec;
}

// Min-max scales every coordinate into [0, 1]; constant coordinates go to 0.
inline void scale_to_unit_box(std::vector<Sample>& samples) {
    if (samples.empty()) return;
    const std::size_t dim = samples.front().features.size();
    std::vector<double> lo(dim, std::numeric_limits<double>::infinity());
    std::vector<double> hi(dim, -std::numeric_limits<double>::infinity());
    for (const Sample& s : samples)
        for (std::size_t d = 0; d < dim; ++d) {
            lo[d] = std::min(lo[d], s.features[d]);
            hi[d] = std::max(hi[d], s.features[d]);
        }
    for (Sample& s : samples)
        for (std::size_t d = 0; d < dim; ++d) {
            const double range = hi[d] - lo[d];
            s.features[d] = range > 0.0 ? (s.features[d] - lo[d]) / range : 0.0;
        }
}

// Three Gaussian groups in the unit square: two compact ones and a sparse one
// with four times their spread, ~333 points each, label-sorted by
// construction. Centers are fixed; only the draws vary with the seed.
inline std::vector<Sample> gen_toy(std::uint64_t seed, std::int64_t per_group = 333) {
    BlobSpec spec;
    spec.dim = 2;
    spec.seed = seed;
    spec.blobs = {
        Blob{{1.0, 1.0}, 0.2, per_group},
        Blob{{3.0, 3.0}, 0.2, per_group},
        Blob{{7.0, 7.0}, 0.8, per_group},
    };
    auto samples = gen_blobs(spec);
    scale_to_unit_box(samples);
    return samples;
}

// Stable sort by label (original order within each label), timestamps
// reassigned 0..n-1 afterwards.
inline std::vector<Sample> order_by_label(std::span<const Sample> samples) {
    std::vector<Sample> out(samples.begin(), samples.end());
    for (const Sample& s : out)
        if (!s.label) throw StreamError("order_by_label: unlabeled sample");
    std::stable_sort(out.begin(), out.end(),
                     [](const Sample& a, const Sample& b) { return *a.label < *b.label; });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].timestamp = static_cast<Tick>(i);
    return out;
}

struct CsvSchema {
    std::string label_column = "label";
    std::optional<std::string> timestamp_column;  // absent -> tick = row index
};

struct CsvData {
    std::vector<Sample> samples;
    std::vector<std::string> feature_names;
    std::vector<std::string> label_names;  // empty when labels are numeric in the file
};

// Missing feature cells (empty strings) load as NaN; everything else must be
// a finite number. String labels are mapped to ids in first-appearance order.
inline CsvData load_csv(const std::string& path, const CsvSchema& schema = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StreamError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw StreamError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto headers = split_fields(line);
    std::optional<std::size_t> label_col, time_col;
    std::vector<std::size_t> feature_cols;
    CsvData data;
    for (std::size_t c = 0; c < headers.size(); ++c) {
        if (headers[c] == schema.label_column) {
            label_col = c;
        } else if (schema.timestamp_column && headers[c] == *schema.timestamp_column) {
            time_col = c;
        } else {
            feature_cols.push_back(c);
            data.feature_names.emplace_back(headers[c]);
        }
    }
    if (!label_col) throw StreamError(path + ": missing label column '" + schema.label_column + "'");
    if (schema.timestamp_column && !time_col)
        throw StreamError(path + ": missing timestamp column '" + *schema.timestamp_column + "'");
    if (feature_cols.empty()) throw StreamError(path + ": no feature columns");

    const std::size_t n_cols = headers.size();
    std::map<std::string, ClassId> label_ids;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != n_cols)
            throw StreamError(path + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(n_cols) + " fields, got " +
                              std::to_string(fields.size()));

        Sample s;
        s.features.reserve(feature_cols.size());
        for (std::size_t c : feature_cols) {
            const auto field = fields[c];
            if (field.empty()) {
                s.features.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            double v = 0.0;
            if (!parse_double(field, v))
                throw StreamError(path + ":" + std::to_string(line_no) + ": non-numeric feature '" +
                                  std::string(field) + "'");
            if (!std::isfinite(v))
                throw StreamError(path + ":" + std::to_string(line_no) + ": non-finite feature");
            s.features.push_back(v);
        }

        const auto label_field = fields[*label_col];
        if (!label_field.empty()) {
            std::int64_t numeric = 0;
            if (parse_int(label_field, numeric)) {
                s.label = numeric;
            } else {
                const auto it = label_ids.emplace(std::string(label_field),
                                                  static_cast<ClassId>(label_ids.size()));
                if (it.second) data.label_names.emplace_back(label_field);
                s.label = it.first->second;
            }
        }

        if (time_col) {
            std::int64_t t = 0;
            if (!parse_int(fields[*time_col], t))
                throw StreamError(path + ":" + std::to_string(line_no) + ": bad timestamp");
            s.timestamp = t;
        } else {
            s.timestamp = static_cast<Tick>(data.samples.size());
        }
        data.samples.push_back(std::move(s));
    }
    if (data.samples.empty()) throw StreamError(path + ": no data rows");
    return data;
}

inline void save_csv(const std::string& path, std::span<const Sample> samples,
                     const CsvSchema& schema = {}) {
    if (samples.empty()) throw StreamError("save_csv: nothing to write");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw StreamError("cannot write " + path);

    const std::size_t dim = samples.front().features.size();
    for (std::size_t d = 0; d < dim; ++d) out << 'f' << d << ',';
    if (schema.timestamp_column) out << *schema.timestamp_column << ',';
    out << schema.label_column << '\n';

    for (const Sample& s : samples) {
        if (s.features.size() != dim) throw StreamError("save_csv: ragged sample");
        for (std::size_t d = 0; d < dim; ++d) {
            if (!std::isnan(s.features[d])) out << format_double(s.features[d]);
            out << ',';
        }
        if (schema.timestamp_column) out << s.timestamp << ',';
        if (s.label) out << *s.label;
        out << '\n';
    }
}

struct ImputeResult {
    std::vector<Sample> samples;
    int iterations = 0;
    double max_change = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

// Least squares via normal equations with partial pivoting; near-singular
// pivots zero the corresponding coefficient instead of failing.
inline std::vector<double> solve_least_squares(const std::vector<std::vector<double>>& rows,
                                               const std::vector<double>& y) {
    const std::size_t p = rows.empty() ? 0 : rows.front().size();
    std::vector<std::vector<double>> ata(p, std::vector<double>(p, 0.0));
    std::vector<double> aty(p, 0.0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t i = 0; i < p; ++i) {
            aty[i] += rows[r][i] * y[r];
            for (std::size_t j = i; j < p; ++j) ata[i][j] += rows[r][i] * rows[r][j];
        }
    }
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < i; ++j) ata[i][j] = ata[j][i];

    std::vector<std::size_t> perm(p);
    for (std::size_t i = 0; i < p; ++i) perm[i] = i;
    std::vector<double> beta(p, 0.0);

    for (std::size_t col = 0; col < p; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < p; ++r)
            if (std::abs(ata[r][col]) > std::abs(ata[pivot][col])) pivot = r;
        if (std::abs(ata[pivot][col]) < 1e-12) continue;  // dependent column, coefficient stays 0
        std::swap(ata[col], ata[pivot]);
        std::swap(aty[col], aty[pivot]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == col) continue;
            const double f = ata[r][col] / ata[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < p; ++c) ata[r][c] -= f * ata[col][c];
            aty[r] -= f * aty[col];
        }
    }
    for (std::size_t i = 0; i < p; ++i)
        if (std::abs(ata[i][i]) >= 1e-12) beta[i] = aty[i] / ata[i][i];
    return beta;
}

}  // namespace detail

// Completes NaN cells. Missing values start at their column mean, then each
// incomplete column is repeatedly re-predicted by a linear regression on all
// other columns (fitted on the rows where the column is observed) until the
// largest cell change drops below tol. Observed cells are never touched.
inline ImputeResult impute(std::span<const Sample> input, int max_iter = 20, double tol = 1e-6) {
    ImputeResult result;
    result.samples.assign(input.begin(), input.end());
    if (input.empty()) return result;

    const std::size_t n = input.size();
    const std::size_t dim = input.front().features.size();
    for (const Sample& s : result.samples) {
        if (s.features.size() != dim) throw StreamError("impute: ragged samples");
        for (double v : s.features)
            if (!std::isnan(v) && !std::isfinite(v)) throw StreamError("impute: non-finite input");
    }

    std::vector<std::vector<bool>> missing(n, std::vector<bool>(dim, false));
    std::vector<std::size_t> observed_count(dim, 0);
    std::vector<double> mean(dim, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < dim; ++c) {
            const double v = result.samples[r].features[c];
            if (std::isnan(v)) {
                missing[r][c] = true;
            } else {
                mean[c] += v;
                ++observed_count[c];
            }
        }

    std::vector<std::size_t> work_cols;
    for (std::size_t c = 0; c < dim; ++c) {
        if (observed_count[c] == 0) {
            mean[c] = 0.0;
            result.warnings.push_back("column " + std::to_string(c) +
                                      " has no observed values, filled with 0");
        } else {
            mean[c] /= static_cast<double>(observed_count[c]);
            if (observed_count[c] < n) work_cols.push_back(c);
        }
    }
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < dim; ++c)
            if (missing[r][c]) result.samples[r].features[c] = mean[c];

    if (work_cols.empty()) return result;

    for (int iter = 0; iter < max_iter; ++iter) {
        double change = 0.0;
        for (std::size_t target : work_cols) {
            std::vector<std::vector<double>> x;
            std::vector<double> y;
            for (std::size_t r = 0; r < n; ++r) {
                if (missing[r][target]) continue;
                std::vector<double> row;
                row.reserve(dim);
                row.push_back(1.0);
                for (std::size_t c = 0; c < dim; ++c)
                    if (c != target) row.push_back(result.samples[r].features[c]);
                x.push_back(std::move(row));
                y.push_back(result.samples[r].features[target]);
            }
            const auto beta = detail::solve_least_squares(x, y);
            for (std::size_t r = 0; r < n; ++r) {
                if (!missing[r][target]) continue;
                double pred = beta[0];
                std::size_t k = 1;
                for (std::size_t c = 0; c < dim; ++c)
                    if (c != target) pred += beta[k++] * result.samples[r].features[c];
                change = std::max(change, std::abs(pred - result.samples[r].features[target]));
                result.samples[r].features[target] = pred;
            }
        }
        result.iterations = iter + 1;
        result.max_change = change;
        if (change < tol) break;
    }
    return result;
}

}  // namespace driftstream
