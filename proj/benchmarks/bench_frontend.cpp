#include <benchmark/benchmark.h>

#include "ezvc/mel.hpp"
#include "ezvc/resample.hpp"
#include "ezvc/synth.hpp"
#include "ezvc/vocoder.hpp"

using namespace ezvc;

static void BM_LogMel1s(benchmark::State& state) {
    const Waveform w = synth::make_utterance(synth::voice_for_speaker(1), {0, 2, 4, 6, 1});
    for (auto _ : state) {
        const MelSpectrogram mel = log_mel(w);
        benchmark::DoNotOptimize(mel.data.data());
    }
}
BENCHMARK(BM_LogMel1s);

static void BM_Resample48kTo16k(benchmark::State& state) {
    const Waveform w = synth::sine(440.0, 1.0, 48000, 0.4);
    for (auto _ : state) {
        const Waveform r = resample(w, 16000);
        benchmark::DoNotOptimize(r.samples.data());
    }
}
BENCHMARK(BM_Resample48kTo16k);

static void BM_PhaseRetrieval(benchmark::State& state) {
    const MelSpectrogram mel =
        log_mel(synth::make_utterance(synth::voice_for_speaker(2), {1, 3, 5}));
    VocoderSpec spec;
    spec.gl_iters = int(state.range(0));
    for (auto _ : state) {
        const Waveform w = mel_to_waveform(mel, spec);
        benchmark::DoNotOptimize(w.samples.data());
    }
}
BENCHMARK(BM_PhaseRetrieval)->Arg(1)->Arg(8)->Arg(32);
