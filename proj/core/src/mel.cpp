#include "ezvc/mel.hpp"

#include "ezvc/errors.hpp"
#include "ezvc/fft.hpp"

#include <cmath>

namespace ezvc {

namespace {

constexpr double kPi = 3.14159265358979323846;

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Periodic Hann.
std::vector<double> hann(int n) {
    std::vector<double> w(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        w[size_t(i)] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / n));
    return w;
}

// Reflected index into [0, n); bounces until in range.
std::int64_t reflect(std::int64_t i, std::int64_t n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

} // namespace

Eigen::MatrixXd mel_filterbank(const MelConfig& cfg) {
    const int bins = cfg.bins();
    Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(cfg.channels, bins);

    const double mel_lo = hz_to_mel(cfg.fmin);
    const double mel_hi = hz_to_mel(cfg.fmax);
    std::vector<double> edges(size_t(cfg.channels) + 2);
    for (int i = 0; i < cfg.channels + 2; ++i)
        edges[size_t(i)] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.channels + 1));

    const double bin_hz = double(cfg.sample_rate) / cfg.fft_size;
    for (int c = 0; c < cfg.channels; ++c) {
        const double left = edges[size_t(c)];
        const double center = edges[size_t(c) + 1];
        const double right = edges[size_t(c) + 2];
        for (int b = 0; b < bins; ++b) {
            const double f = b * bin_hz;
            double v = 0.0;
            if (f > left && f < center)
                v = (f - left) / (center - left);
            else if (f >= center && f < right)
                v = (right - f) / (right - center);
            fb(c, b) = v;
        }
    }
    return fb;
}

ComplexSpectrogram stft(const std::vector<float>& samples, const MelConfig& cfg) {
    if (samples.empty()) throw DomainError("stft: empty input");

    const std::int64_t n = std::int64_t(samples.size());
    const int frames = int(n / cfg.hop);
    if (frames == 0) throw DomainError("stft: input shorter than one hop");

    const auto window = hann(cfg.win_length);
    const int pad = (cfg.fft_size - cfg.win_length) / 2; // window centered in FFT buffer
    const int half_win = cfg.win_length / 2;

    ComplexSpectrogram out;
    out.frames = frames;
    out.bins = cfg.bins();
    out.data.resize(size_t(frames) * out.bins);

    std::vector<std::complex<double>> buf(size_t(cfg.fft_size));
    for (int t = 0; t < frames; ++t) {
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        const std::int64_t center = std::int64_t(t) * cfg.hop;
        for (int i = 0; i < cfg.win_length; ++i) {
            const std::int64_t src = reflect(center - half_win + i, n);
            buf[size_t(pad + i)] = samples[size_t(src)] * window[size_t(i)];
        }
        fft_inplace(buf, false);
        for (int b = 0; b < out.bins; ++b) out.row(t)[b] = buf[size_t(b)];
    }
    return out;
}

std::vector<float> istft(const ComplexSpectrogram& spec, const MelConfig& cfg) {
    if (spec.bins != cfg.bins())
        throw ContractError("istft: spectrogram bins do not match config");

    const auto window = hann(cfg.win_length);
    const int pad = (cfg.fft_size - cfg.win_length) / 2;
    const int half_win = cfg.win_length / 2;
    const std::int64_t n_out = std::int64_t(spec.frames) * cfg.hop;

    std::vector<double> acc(size_t(n_out), 0.0);
    std::vector<double> norm(size_t(n_out), 0.0);
    std::vector<std::complex<double>> buf(size_t(cfg.fft_size));

    for (int t = 0; t < spec.frames; ++t) {
        // hermitian extension of the half-spectrum
        for (int b = 0; b < spec.bins; ++b) buf[size_t(b)] = spec.row(t)[b];
        for (int b = spec.bins; b < cfg.fft_size; ++b)
            buf[size_t(b)] = std::conj(spec.row(t)[cfg.fft_size - b]);
        fft_inplace(buf, true);

        const std::int64_t center = std::int64_t(t) * cfg.hop;
        for (int i = 0; i < cfg.win_length; ++i) {
            const std::int64_t dst = center - half_win + i;
            if (dst < 0 || dst >= n_out) continue;
            acc[size_t(dst)] += buf[size_t(pad + i)].real() * window[size_t(i)];
            norm[size_t(dst)] += window[size_t(i)] * window[size_t(i)];
        }
    }

    std::vector<float> out(static_cast<size_t>(n_out));
    for (std::int64_t i = 0; i < n_out; ++i)
        out[size_t(i)] = float(acc[size_t(i)] / std::max(norm[size_t(i)], 1e-10));
    return out;
}

MelSpectrogram log_mel(const Waveform& w, const MelConfig& cfg) {
    if (w.empty()) throw DomainError("log_mel: empty waveform");
    if (w.sample_rate != cfg.sample_rate)
        throw ContractError("log_mel: expected " + std::to_string(cfg.sample_rate) +
                            " Hz input, got " + std::to_string(w.sample_rate));

    const auto spec = stft(w.samples, cfg);
    const Eigen::MatrixXd fb = mel_filterbank(cfg);

    MelSpectrogram mel;
    mel.frames = spec.frames;
    mel.channels = cfg.channels;
    mel.hop_samples = cfg.hop;
    mel.sample_rate = cfg.sample_rate;
    mel.data.resize(size_t(spec.frames) * cfg.channels);

    Eigen::VectorXd mag(spec.bins);
    for (int t = 0; t < spec.frames; ++t) {
        for (int b = 0; b < spec.bins; ++b) mag(b) = std::abs(spec.row(t)[b]);
        const Eigen::VectorXd energies = fb * mag;
        for (int c = 0; c < cfg.channels; ++c)
            mel.at(t, c) = float(std::log(std::max(energies(c), cfg.log_floor)));
    }
    return mel;
}

} // namespace ezvc
