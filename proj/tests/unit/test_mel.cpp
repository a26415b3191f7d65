#include <doctest.h>

#include "ezvc/errors.hpp"
#include "ezvc/mel.hpp"
#include "ezvc/synth.hpp"

#include <cmath>

using namespace ezvc;

TEST_CASE("log_mel frame count is samples/hop") {
    Waveform w;
    w.sample_rate = 16000;
    w.samples.assign(16000, 0.01f);
    const MelSpectrogram mel = log_mel(w);
    CHECK(mel.frames == 100);
    CHECK(mel.channels == 80);
}

TEST_CASE("log_mel of silence sits exactly on the floor") {
    Waveform w;
    w.sample_rate = 16000;
    w.samples.assign(8000, 0.0f);
    const MelSpectrogram mel = log_mel(w);
    const float floor_value = float(std::log(1e-5));
    for (float v : mel.data) CHECK(v == floor_value);
}

TEST_CASE("log_mel of white noise is finite with per-channel variance") {
    const Waveform w = synth::white_noise(1.0, 16000, 7);
    const MelSpectrogram mel = log_mel(w);
    REQUIRE(mel.frames == 100);
    for (float v : mel.data) CHECK(std::isfinite(v));

    int varying = 0;
    for (int c = 0; c < mel.channels; ++c) {
        double mean = 0.0, var = 0.0;
        for (int t = 0; t < mel.frames; ++t) mean += mel.at(t, c);
        mean /= mel.frames;
        for (int t = 0; t < mel.frames; ++t) {
            const double d = mel.at(t, c) - mean;
            var += d * d;
        }
        if (var / mel.frames > 0.0) ++varying;
    }
    CHECK(varying == mel.channels);
}

TEST_CASE("log_mel entries never go below the floor") {
    const Waveform w = synth::make_utterance(synth::voice_for_speaker(2), {0, 3, 5});
    const MelSpectrogram mel = log_mel(w);
    const float floor_value = float(std::log(1e-5));
    for (float v : mel.data) CHECK(v >= floor_value);
}

TEST_CASE("log_mel is translation-covariant by one hop") {
    const Waveform base = synth::make_utterance(synth::voice_for_speaker(1), {1, 4, 2, 6});
    const MelSpectrogram mel = log_mel(base);

    Waveform shifted;
    shifted.sample_rate = 16000;
    shifted.samples.assign(base.samples.begin() + 160, base.samples.end());
    const MelSpectrogram mel_shift = log_mel(shifted);

    REQUIRE(mel_shift.frames == mel.frames - 1);
    // interior frames: skip the first few where reflect padding differs
    double max_abs = 0.0;
    for (int t = 4; t < mel_shift.frames - 4; ++t)
        for (int c = 0; c < mel.channels; ++c)
            max_abs = std::max(max_abs,
                               std::abs(double(mel_shift.at(t, c)) - mel.at(t + 1, c)));
    CHECK(max_abs <= 1e-4);
}

TEST_CASE("log_mel rejects empty and wrong-rate input") {
    Waveform empty;
    empty.sample_rate = 16000;
    CHECK_THROWS_AS(log_mel(empty), DomainError);

    Waveform wrong = synth::sine(100.0, 0.2, 24000);
    CHECK_THROWS_AS(log_mel(wrong), ContractError);
}

TEST_CASE("mel filterbank covers every channel") {
    const MelConfig cfg;
    const Eigen::MatrixXd fb = mel_filterbank(cfg);
    REQUIRE(fb.rows() == 80);
    REQUIRE(fb.cols() == 513);
    for (int c = 0; c < fb.rows(); ++c) CHECK(fb.row(c).maxCoeff() > 0.0);
}

TEST_CASE("istft of stft reconstructs the interior of a signal") {
    const Waveform w = synth::sine(500.0, 0.5, 16000, 0.4);
    const MelConfig cfg;
    const auto spec = stft(w.samples, cfg);
    const auto rec = istft(spec, cfg);
    REQUIRE(rec.size() == size_t(spec.frames) * cfg.hop);
    for (size_t i = 1000; i + 1000 < rec.size() && i < w.samples.size(); i += 61)
        CHECK(rec[i] == doctest::Approx(w.samples[i]).epsilon(1e-3));
}
