#include "ezvc/kmeans.hpp"

#include "ezvc/errors.hpp"
#include "ezvc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace ezvc {

namespace {

double sq_dist(const float* a, const float* b, int dim) {
    double acc = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double d = double(a[i]) - double(b[i]);
        acc += d * d;
    }
    return acc;
}

// Flattened view of the (possibly subsampled) input stream.
struct PointSet {
    std::vector<float> data;
    std::int64_t n = 0;
    int dim = 0;
    const float* row(std::int64_t i) const { return data.data() + i * dim; }
};

PointSet gather_points(const std::vector<FrameEmbeddings>& shards, int subsample_every) {
    PointSet ps;
    for (const auto& s : shards) {
        if (s.frames == 0) continue;
        if (ps.dim == 0) ps.dim = s.dim;
        if (s.dim != ps.dim)
            throw ContractError("train_kmeans: inconsistent dims across shards (" +
                                std::to_string(ps.dim) + " vs " + std::to_string(s.dim) + ")");
        for (int t = 0; t < s.frames; t += subsample_every) {
            const float* r = s.row(t);
            for (int d = 0; d < s.dim; ++d) {
                if (!std::isfinite(r[d]))
                    throw DataError("train_kmeans: non-finite value in input frame");
                ps.data.push_back(r[d]);
            }
            ++ps.n;
        }
    }
    return ps;
}

// k-means++: D^2-weighted sampling against the running nearest-centroid
// distance.
std::vector<float> plus_plus_init(const PointSet& ps, int k, Rng& rng) {
    std::vector<float> centroids(size_t(k) * ps.dim);
    std::vector<double> min_d2(size_t(ps.n), std::numeric_limits<double>::infinity());

    const std::int64_t first = rng.uniform_int(0, ps.n - 1);
    std::memcpy(centroids.data(), ps.row(first), sizeof(float) * ps.dim);

    for (int c = 1; c < k; ++c) {
        const float* prev = centroids.data() + size_t(c - 1) * ps.dim;
        double total = 0.0;
        for (std::int64_t i = 0; i < ps.n; ++i) {
            const double d2 = sq_dist(ps.row(i), prev, ps.dim);
            if (d2 < min_d2[size_t(i)]) min_d2[size_t(i)] = d2;
            total += min_d2[size_t(i)];
        }
        std::int64_t pick;
        if (total <= 0.0) {
            pick = rng.uniform_int(0, ps.n - 1); // all points coincide with centroids
        } else {
            const double target = rng.uniform() * total;
            double run = 0.0;
            pick = ps.n - 1;
            for (std::int64_t i = 0; i < ps.n; ++i) {
                run += min_d2[size_t(i)];
                if (run >= target) {
                    pick = i;
                    break;
                }
            }
        }
        std::memcpy(centroids.data() + size_t(c) * ps.dim, ps.row(pick),
                    sizeof(float) * ps.dim);
    }
    return centroids;
}

} // namespace

Codebook train_kmeans(const std::vector<FrameEmbeddings>& shards,
                      const KmeansOptions& opts, KmeansStats* stats) {
    if (opts.k < 1) throw ContractError("train_kmeans: k must be >= 1");
    if (opts.subsample_every < 1)
        throw ContractError("train_kmeans: subsample_every must be >= 1");

    const PointSet ps = gather_points(shards, opts.subsample_every);
    if (ps.n < opts.k)
        throw DomainError("train_kmeans: " + std::to_string(ps.n) +
                          " points for k=" + std::to_string(opts.k));

    Rng rng(opts.seed);
    std::vector<float> centroids = plus_plus_init(ps, opts.k, rng);

    std::vector<std::int32_t> labels(size_t(ps.n), 0);
    std::vector<double> point_d2(size_t(ps.n), 0.0);
    std::vector<double> sums(size_t(opts.k) * ps.dim);
    std::vector<std::int64_t> counts(size_t(opts.k));
    double prev_inertia = std::numeric_limits<double>::infinity();
    double inertia = prev_inertia;

    if (stats) {
        stats->inertia_history.clear();
        stats->iterations = 0;
    }

    for (int iter = 0; iter < opts.max_iters; ++iter) {
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        double sse = 0.0;

        // Assignment + accumulation in fixed chunk order; the chunking only
        // bounds memory, every chunk size yields the same reduction.
        for (std::int64_t base = 0; base < ps.n; base += opts.chunk_size) {
            const std::int64_t end = std::min(ps.n, base + opts.chunk_size);
            for (std::int64_t i = base; i < end; ++i) {
                const float* p = ps.row(i);
                std::int32_t best = 0;
                double best_d2 = sq_dist(p, centroids.data(), ps.dim);
                for (int c = 1; c < opts.k; ++c) {
                    const double d2 = sq_dist(p, centroids.data() + size_t(c) * ps.dim, ps.dim);
                    if (d2 < best_d2) {
                        best_d2 = d2;
                        best = c;
                    }
                }
                labels[size_t(i)] = best;
                point_d2[size_t(i)] = best_d2;
                sse += best_d2;
                double* s = sums.data() + size_t(best) * ps.dim;
                for (int d = 0; d < ps.dim; ++d) s[d] += double(p[d]);
                ++counts[size_t(best)];
            }
        }

        inertia = sse / double(ps.n);
        if (stats) {
            stats->inertia_history.push_back(inertia);
            stats->iterations = iter + 1;
        }

        // Empty clusters take the point that fits its own centroid worst.
        std::vector<bool> taken(size_t(ps.n), false);
        bool reseeded = false;
        for (int c = 0; c < opts.k; ++c) {
            if (counts[size_t(c)] > 0) continue;
            std::int64_t worst = -1;
            double worst_d2 = -1.0;
            for (std::int64_t i = 0; i < ps.n; ++i) {
                if (taken[size_t(i)]) continue;
                if (point_d2[size_t(i)] > worst_d2) {
                    worst_d2 = point_d2[size_t(i)];
                    worst = i;
                }
            }
            if (worst < 0) break;
            taken[size_t(worst)] = true;
            std::memcpy(centroids.data() + size_t(c) * ps.dim, ps.row(worst),
                        sizeof(float) * ps.dim);
            reseeded = true;
        }

        for (int c = 0; c < opts.k; ++c) {
            if (counts[size_t(c)] == 0) continue; // reseeded or untouched
            float* ctr = centroids.data() + size_t(c) * ps.dim;
            const double inv = 1.0 / double(counts[size_t(c)]);
            const double* s = sums.data() + size_t(c) * ps.dim;
            for (int d = 0; d < ps.dim; ++d) ctr[d] = float(s[d] * inv);
        }

        if (!reseeded && prev_inertia < std::numeric_limits<double>::infinity()) {
            const double improvement =
                prev_inertia > 0.0 ? (prev_inertia - inertia) / prev_inertia : 0.0;
            if (improvement < opts.rel_tol && inertia <= prev_inertia) break;
        }
        prev_inertia = inertia;
    }

    Codebook cb;
    cb.k = opts.k;
    cb.dim = ps.dim;
    cb.inertia = inertia;
    cb.centroids = std::move(centroids);

    // distinctness check: identical rows mean the data could not support k clusters
    for (int a = 0; a < cb.k; ++a)
        for (int b = a + 1; b < cb.k; ++b)
            if (std::memcmp(cb.row(a), cb.row(b), sizeof(float) * size_t(cb.dim)) == 0)
                throw DataError("train_kmeans: duplicate centroids " + std::to_string(a) +
                                " and " + std::to_string(b) +
                                " (too few distinct points for k)");
    return cb;
}

std::int32_t nearest_centroid(const Codebook& cb, const float* vec) {
    std::int32_t best = 0;
    double best_d2 = sq_dist(vec, cb.row(0), cb.dim);
    for (int c = 1; c < cb.k; ++c) {
        const double d2 = sq_dist(vec, cb.row(c), cb.dim);
        if (d2 < best_d2) { // strict: ties keep the lowest index
            best_d2 = d2;
            best = c;
        }
    }
    return best;
}

UnitSequence assign(const Codebook& cb, const FrameEmbeddings& emb) {
    if (emb.dim != cb.dim)
        throw ContractError("assign: embedding dim " + std::to_string(emb.dim) +
                            " != codebook dim " + std::to_string(cb.dim));
    UnitSequence seq;
    seq.deduped = false;
    seq.units.resize(size_t(emb.frames));
    for (int t = 0; t < emb.frames; ++t)
        seq.units[size_t(t)] = nearest_centroid(cb, emb.row(t));
    return seq;
}

} // namespace ezvc
