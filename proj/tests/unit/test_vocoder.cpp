#include <doctest.h>

#include "ezvc/errors.hpp"
#include "ezvc/eval.hpp"
#include "ezvc/mel.hpp"
#include "ezvc/synth.hpp"
#include "ezvc/vocoder.hpp"
#include "ezvc/wav.hpp"

#include <filesystem>
#include <fstream>

#include <cmath>

using namespace ezvc;

namespace {

double rms(const Waveform& w) {
    double acc = 0.0;
    for (float s : w.samples) acc += double(s) * s;
    return std::sqrt(acc / std::max<size_t>(w.samples.size(), 1));
}

Waveform harmonic_sample(int which) {
    return synth::make_utterance(synth::voice_for_speaker(which),
                                 {which % 8, (which + 3) % 8, (which + 5) % 8});
}

} // namespace

TEST_CASE("silence mel vocodes to near-silence") {
    MelSpectrogram mel;
    mel.frames = 50;
    mel.channels = 80;
    mel.data.assign(size_t(50) * 80, float(std::log(1e-5)));
    VocoderSpec spec;
    const Waveform w = mel_to_waveform(mel, spec);
    CHECK(rms(w) < 1e-3);
}

TEST_CASE("output length is frames*hop") {
    MelSpectrogram mel;
    mel.frames = 100;
    mel.channels = 80;
    mel.data.assign(size_t(100) * 80, -3.0f);
    VocoderSpec spec;
    const Waveform w = mel_to_waveform(mel, spec);
    CHECK(std::abs(int(w.samples.size()) - 16000) <= 1024);
}

TEST_CASE("round-trip mel error on harmonic signals stays under 0.35 per bin") {
    // oracle measurement: log_mel -> phase retrieval -> log_mel on clean
    // harmonic utterances
    VocoderSpec spec; // 32 iterations
    for (int i : {0, 4, 8}) {
        const Waveform w = harmonic_sample(i);
        const MelSpectrogram mel = log_mel(w);
        const Waveform rec = mel_to_waveform(mel, spec);
        MelSpectrogram mel2 = log_mel(rec);
        mel2.frames = std::min(mel2.frames, mel.frames);
        MelSpectrogram mel1 = mel;
        mel1.frames = mel2.frames;
        mel1.data.resize(size_t(mel1.frames) * 80);
        mel2.data.resize(size_t(mel2.frames) * 80);
        CHECK(mel_l1(mel1, mel2) < 0.35);
    }
}

TEST_CASE("output is finite and bounded after peak normalization") {
    // hot mel frames would clip without normalization
    MelSpectrogram mel;
    mel.frames = 40;
    mel.channels = 80;
    mel.data.assign(size_t(40) * 80, 4.0f);
    VocoderSpec spec;
    const Waveform w = mel_to_waveform(mel, spec);
    for (float s : w.samples) {
        CHECK(std::isfinite(s));
        CHECK(std::abs(s) <= 1.0f);
    }
}

TEST_CASE("phase retrieval is deterministic") {
    const MelSpectrogram mel = log_mel(harmonic_sample(2));
    VocoderSpec spec;
    const Waveform a = mel_to_waveform(mel, spec);
    const Waveform b = mel_to_waveform(mel, spec);
    REQUIRE(a.samples.size() == b.samples.size());
    CHECK(std::equal(a.samples.begin(), a.samples.end(), b.samples.begin()));
}

TEST_CASE("round-trip error does not grow with more iterations") {
    const Waveform w = harmonic_sample(5);
    const MelSpectrogram mel = log_mel(w);
    double prev = 1e9;
    for (int iters : {1, 8, 32}) {
        VocoderSpec spec;
        spec.gl_iters = iters;
        const Waveform rec = mel_to_waveform(mel, spec);
        MelSpectrogram mel2 = log_mel(rec);
        const int frames = std::min(mel2.frames, mel.frames);
        MelSpectrogram a = mel, b = mel2;
        a.frames = b.frames = frames;
        a.data.resize(size_t(frames) * 80);
        b.data.resize(size_t(frames) * 80);
        const double err = mel_l1(a, b);
        CHECK(err <= prev + 1e-9);
        prev = err;
    }
}

TEST_CASE("external vocoder adapter is file-in/file-out with exit-code contract") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "ezvc-tests";
    fs::create_directories(dir);

    // fixture the fake tool will return
    const fs::path fixture = dir / "external_fixture.wav";
    save_waveform(fixture.string(), synth::sine(330.0, 0.25, 16000, 0.4));

    const fs::path tool = dir / "fake_vocoder.sh";
    {
        std::ofstream sh(tool);
        sh << "#!/bin/sh\n[ -f \"$1\" ] || exit 3\ncp '" << fixture.string()
           << "' \"$2\"\n";
    }
    fs::permissions(tool, fs::perms::owner_all);

    const MelSpectrogram mel = log_mel(synth::sine(330.0, 0.25, 16000, 0.4));
    VocoderSpec spec;
    spec.kind = VocoderSpec::Kind::external;
    spec.external_cmd = tool.string();
    const Waveform out = mel_to_waveform(mel, spec);
    const Waveform expect = load_waveform(fixture.string());
    CHECK(out.samples == expect.samples);

    // nonzero exit surfaces as an I/O error
    VocoderSpec broken = spec;
    broken.external_cmd = "/bin/false";
    CHECK_THROWS_AS(mel_to_waveform(mel, broken), IoError);

    VocoderSpec unset;
    unset.kind = VocoderSpec::Kind::external;
    CHECK_THROWS_AS(mel_to_waveform(mel, unset), ContractError);
}

TEST_CASE("vocoder contract checks") {
    MelSpectrogram mel;
    mel.frames = 10;
    mel.channels = 40; // not 80
    mel.data.assign(400, -2.0f);
    VocoderSpec spec;
    CHECK_THROWS_AS(mel_to_waveform(mel, spec), ContractError);

    mel.channels = 80;
    mel.data.assign(800, -2.0f);
    spec.gl_iters = 0;
    CHECK_THROWS_AS(mel_to_waveform(mel, spec), ContractError);
}
