#include <benchmark/benchmark.h>

#include "ezvc/decoder/loss.hpp"
#include "ezvc/decoder/model.hpp"
#include "ezvc/rng.hpp"

using namespace ezvc;
using namespace ezvc::cfm;

namespace {

FlowItem<float> make_item(const DecoderConfig& cfg, int frames, std::uint64_t seed) {
    Rng rng(seed);
    FlowItem<float> item;
    item.xt.resize(frames, cfg.mel_dim);
    item.v_target.resize(frames, cfg.mel_dim);
    item.cond.resize(frames, cfg.mel_dim);
    for (int r = 0; r < frames; ++r)
        for (int c = 0; c < cfg.mel_dim; ++c) {
            item.xt(r, c) = rng.normal_f();
            item.v_target(r, c) = rng.normal_f();
            item.cond(r, c) = rng.normal_f();
        }
    item.tokens.assign(size_t(frames), 1);
    item.mask.assign(size_t(frames), 1);
    item.t = 0.5f;
    return item;
}

} // namespace

static void BM_DeskForward(benchmark::State& state) {
    DecoderConfig cfg; // desk: 4 layers, 4 heads, dim 256
    cfg.vocab_size = 50;
    const Model<float> model(cfg, 1);
    const int frames = int(state.range(0));
    const auto item = make_item(cfg, frames, 2);
    for (auto _ : state) {
        const MatF out = model.forward(item.xt, item.cond, item.tokens, item.t);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_DeskForward)->Arg(160)->Arg(320)->Unit(benchmark::kMillisecond);

static void BM_DeskForwardBackward(benchmark::State& state) {
    DecoderConfig cfg;
    cfg.vocab_size = 50;
    Model<float> model(cfg, 1);
    const auto item = make_item(cfg, int(state.range(0)), 3);
    for (auto _ : state) {
        model.zero_grads();
        const float sse = flow_item_sse_grad(model, item, 1.0f);
        benchmark::DoNotOptimize(sse);
    }
}
BENCHMARK(BM_DeskForwardBackward)->Arg(160)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
