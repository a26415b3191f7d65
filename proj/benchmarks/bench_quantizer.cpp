#include <benchmark/benchmark.h>

#include "ezvc/kmeans.hpp"
#include "ezvc/rng.hpp"

using namespace ezvc;

namespace {

FrameEmbeddings random_embeddings(int frames, int dim, std::uint64_t seed) {
    Rng rng(seed);
    FrameEmbeddings emb;
    emb.frames = frames;
    emb.dim = dim;
    emb.source_tag = "bench";
    emb.data.resize(size_t(frames) * dim);
    for (auto& v : emb.data) v = rng.normal_f();
    return emb;
}

} // namespace

static void BM_KmeansTrain(benchmark::State& state) {
    const auto data = random_embeddings(int(state.range(0)), 64, 1);
    for (auto _ : state) {
        KmeansOptions opts;
        opts.k = 32;
        opts.seed = 2;
        opts.max_iters = 20;
        const Codebook cb = train_kmeans({data}, opts);
        benchmark::DoNotOptimize(cb.centroids.data());
    }
}
BENCHMARK(BM_KmeansTrain)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

static void BM_Assign(benchmark::State& state) {
    const auto data = random_embeddings(4000, 64, 3);
    KmeansOptions opts;
    opts.k = int(state.range(0));
    opts.seed = 4;
    opts.max_iters = 10;
    const Codebook cb = train_kmeans({data}, opts);
    const auto probe = random_embeddings(500, 64, 5);
    for (auto _ : state) {
        const UnitSequence seq = assign(cb, probe);
        benchmark::DoNotOptimize(seq.units.data());
    }
}
BENCHMARK(BM_Assign)->Arg(48)->Arg(500)->Unit(benchmark::kMillisecond);
