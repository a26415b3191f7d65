#pragma once

#include "ezvc/types.hpp"

#include <Eigen/Core>

#include <complex>
#include <vector>

namespace ezvc {

// Front-end analysis settings. The paper fixes {16 kHz, 80 channels, hop 160};
// FFT size, window length, mel range and log floor are project defaults and
// stay configurable.
struct MelConfig {
    int sample_rate = 16000;
    int fft_size = 1024;
    int win_length = 640; // 40 ms
    int hop = 160;
    int channels = 80;
    double fmin = 0.0;
    double fmax = 8000.0;
    double log_floor = 1e-5;

    int bins() const { return fft_size / 2 + 1; }
};

// channels x bins triangular filters on the HTK mel scale, peak 1.
Eigen::MatrixXd mel_filterbank(const MelConfig& cfg);

// Complex half-spectra, one row per frame. Frame t is centered on sample
// t*hop with reflect padding, so frame count is exactly n_samples / hop.
struct ComplexSpectrogram {
    int frames = 0;
    int bins = 0;
    std::vector<std::complex<double>> data; // frames * bins

    std::complex<double>* row(int t) { return data.data() + size_t(t) * bins; }
    const std::complex<double>* row(int t) const { return data.data() + size_t(t) * bins; }
};

ComplexSpectrogram stft(const std::vector<float>& samples, const MelConfig& cfg);

// Weighted overlap-add inverse; returns exactly frames*hop samples.
std::vector<float> istft(const ComplexSpectrogram& spec, const MelConfig& cfg);

// ln(max(mel_energy, log_floor)) over magnitude spectra.
MelSpectrogram log_mel(const Waveform& w, const MelConfig& cfg = {});

} // namespace ezvc
