#pragma once

#include "ezvc/types.hpp"

#include <cstdint>
#include <vector>

namespace ezvc {

struct KmeansOptions {
    int k = 500;
    std::uint64_t seed = 0;
    int max_iters = 100;
    double rel_tol = 1e-4;
    // Keep every n-th frame of the input stream (corpus subsampling knob).
    int subsample_every = 1;
    // Points per accumulation chunk; bounds working memory, result is
    // identical to the full-batch reduction for any chunk size.
    int chunk_size = 1 << 16;
};

struct KmeansStats {
    std::vector<double> inertia_history; // one entry per Lloyd iteration
    int iterations = 0;
};

// k-means++ seeding, Lloyd iterations with squared Euclidean distance,
// farthest-point reseeding for empty clusters. Deterministic given
// (data, options): assignments and reductions run in fixed order.
Codebook train_kmeans(const std::vector<FrameEmbeddings>& shards,
                      const KmeansOptions& opts, KmeansStats* stats = nullptr);

// Nearest centroid per frame (ties -> lowest index); deduped flag false.
UnitSequence assign(const Codebook& cb, const FrameEmbeddings& emb);

// Nearest centroid for one vector; distances accumulated in double.
std::int32_t nearest_centroid(const Codebook& cb, const float* vec);

} // namespace ezvc
