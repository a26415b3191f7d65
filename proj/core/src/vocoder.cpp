#include "ezvc/vocoder.hpp"

#include "ezvc/errors.hpp"
#include "ezvc/io.hpp"
#include "ezvc/wav.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>

namespace ezvc {

namespace {

// mag ~= max(0, pinv(FB) * mel_energy), pinv = FB^T (FB FB^T + eps I)^-1
Eigen::MatrixXd mel_pseudo_inverse(const MelConfig& cfg) {
    const Eigen::MatrixXd fb = mel_filterbank(cfg);
    Eigen::MatrixXd gram = fb * fb.transpose();
    gram.diagonal().array() += 1e-8 * gram.trace() / cfg.channels;
    return fb.transpose() * gram.inverse();
}

Waveform phase_retrieval(const MelSpectrogram& mel, int gl_iters, const MelConfig& cfg) {
    const int frames = mel.frames;
    const int bins = cfg.bins();
    const Eigen::MatrixXd pinv = mel_pseudo_inverse(cfg);

    // log-mel -> linear magnitude spectrogram
    Eigen::MatrixXd mag(frames, bins);
    Eigen::VectorXd energies(cfg.channels);
    for (int t = 0; t < frames; ++t) {
        for (int c = 0; c < cfg.channels; ++c) energies(c) = std::exp(double(mel.at(t, c)));
        mag.row(t) = (pinv * energies).cwiseMax(0.0).transpose();
    }

    // Griffin-Lim with zero phase init
    ComplexSpectrogram spec;
    spec.frames = frames;
    spec.bins = bins;
    spec.data.resize(size_t(frames) * bins);
    for (int t = 0; t < frames; ++t)
        for (int b = 0; b < bins; ++b)
            spec.row(t)[b] = std::complex<double>(mag(t, b), 0.0);

    std::vector<float> signal = istft(spec, cfg);
    for (int it = 1; it < gl_iters; ++it) {
        const ComplexSpectrogram est = stft(signal, cfg);
        for (int t = 0; t < frames && t < est.frames; ++t)
            for (int b = 0; b < bins; ++b) {
                const std::complex<double> z = est.row(t)[b];
                const double a = std::abs(z);
                spec.row(t)[b] = a > 1e-12 ? z / a * mag(t, b)
                                           : std::complex<double>(mag(t, b), 0.0);
            }
        signal = istft(spec, cfg);
    }

    Waveform out;
    out.sample_rate = cfg.sample_rate;
    out.samples = std::move(signal);

    float peak = 0.0f;
    for (float s : out.samples) peak = std::max(peak, std::abs(s));
    if (peak > 1.0f)
        for (float& s : out.samples) s /= peak;
    return out;
}

Waveform external_vocoder(const MelSpectrogram& mel, const VocoderSpec& spec) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "ezvc-voc";
    fs::create_directories(dir);
    const fs::path mel_path = dir / ("mel-" + std::to_string(std::rand()) + ".ezmel");
    const fs::path wav_path = dir / ("out-" + std::to_string(std::rand()) + ".wav");

    io::write_mel(mel_path.string(), mel);
    const std::string cmd =
        spec.external_cmd + " " + mel_path.string() + " " + wav_path.string();
    const int rc = std::system(cmd.c_str());
    std::error_code ec;
    fs::remove(mel_path, ec);
    if (rc != 0) {
        fs::remove(wav_path, ec);
        throw IoError("external vocoder failed with status " + std::to_string(rc) +
                      ": " + spec.external_cmd);
    }
    Waveform w = load_waveform(wav_path.string());
    fs::remove(wav_path, ec);
    return w;
}

} // namespace

Waveform mel_to_waveform(const MelSpectrogram& mel, const VocoderSpec& spec,
                         const MelConfig& cfg) {
    if (mel.channels != cfg.channels)
        throw ContractError("mel_to_waveform: expected " + std::to_string(cfg.channels) +
                            " channels, got " + std::to_string(mel.channels));
    if (mel.frames < 1) throw DomainError("mel_to_waveform: empty spectrogram");

    if (spec.kind == VocoderSpec::Kind::external) {
        if (spec.external_cmd.empty())
            throw ContractError("mel_to_waveform: external vocoder without a command");
        return external_vocoder(mel, spec);
    }
    if (spec.gl_iters < 1)
        throw ContractError("mel_to_waveform: gl_iters must be >= 1");
    return phase_retrieval(mel, spec.gl_iters, cfg);
}

} // namespace ezvc
