#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ezvc {

struct Waveform {
    std::vector<float> samples; // mono, [-1, 1]
    int sample_rate = 0;

    double duration() const {
        return sample_rate > 0 ? double(samples.size()) / sample_rate : 0.0;
    }
    bool empty() const { return samples.empty(); }
};

// T x channels log-mel matrix, row-major.
struct MelSpectrogram {
    int frames = 0;
    int channels = 80;
    int hop_samples = 160;
    int sample_rate = 16000;
    std::vector<float> data; // frames * channels

    float& at(int t, int c) { return data[size_t(t) * channels + c]; }
    float at(int t, int c) const { return data[size_t(t) * channels + c]; }
    const float* row(int t) const { return data.data() + size_t(t) * channels; }
    float* row(int t) { return data.data() + size_t(t) * channels; }
};

// T' x dim frame embeddings at 50 frames/sec, row-major.
struct FrameEmbeddings {
    int frames = 0;
    int dim = 0;
    double frame_rate_hz = 50.0;
    std::string source_tag;
    std::vector<float> data; // frames * dim

    const float* row(int t) const { return data.data() + size_t(t) * dim; }
    float* row(int t) { return data.data() + size_t(t) * dim; }
};

struct EncoderSpec {
    enum class Kind { surrogate, imported };
    Kind kind = Kind::surrogate;
    int layer_index = 14; // provenance only; the surrogate ignores it
    int dim = 400;
    std::uint64_t seed = 0;
};

// K x dim centroid matrix from k-means, row-major.
struct Codebook {
    int k = 0;
    int dim = 0;
    double inertia = 0.0; // final mean squared distance
    std::string trained_on;
    std::vector<float> centroids; // k * dim

    const float* row(int i) const { return centroids.data() + size_t(i) * dim; }
    float* row(int i) { return centroids.data() + size_t(i) * dim; }
};

struct UnitSequence {
    std::vector<std::int32_t> units; // each in [0, k)
    bool deduped = false;

    size_t size() const { return units.size(); }
};

struct VocoderSpec {
    enum class Kind { phase_retrieval, external };
    Kind kind = Kind::phase_retrieval;
    int gl_iters = 32;
    std::string external_cmd; // external kind: "<cmd> <mel-file> <out-wav>"
};

struct SpeakerEmbedding {
    std::vector<float> vec; // unit L2 norm
    std::string extractor_tag;
};

} // namespace ezvc
