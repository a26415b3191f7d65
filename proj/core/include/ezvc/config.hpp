#pragma once

#include "ezvc/decoder/config.hpp"
#include "ezvc/decoder/optimizer.hpp"
#include "ezvc/decoder/sampler.hpp"
#include "ezvc/kmeans.hpp"
#include "ezvc/mel.hpp"
#include "ezvc/types.hpp"

#include <cstdint>
#include <string>

namespace ezvc {

// Whole-pipeline configuration. The "paper" preset records the published
// training recipe verbatim; "desk" is the tractable configuration every
// bundled test runs. Files are strict JSON: unknown sections or keys are
// rejected.
struct RunConfig {
    struct Audio {
        int sample_rate = 16000;
        int mel_channels = 80;
        int hop = 160;
        int win_length = 640;
        int fft_size = 1024;
        double fmin = 0.0;
        double fmax = 8000.0;
        double log_floor = 1e-5;
    };
    struct Encoder {
        std::string kind = "surrogate";
        int layer_index = 14;
        int dim = 400;
    };
    struct Kmeans {
        int k = 500;
        int max_iters = 100;
        double rel_tol = 1e-4;
        int subsample_every = 1;
    };
    struct Decoder {
        int layers = 4;
        int heads = 4;
        int model_dim = 256;
        int ffn_mult = 2;
        int conv_kernel = 15;
        int conv_groups = 16;
        double cond_drop_prob = 0.2;
        double mask_frac_lo = 0.7;
        double mask_frac_hi = 1.0;
        std::string position = "rotary";
    };
    struct Sampler {
        int steps = 32;
        double guidance_w = 2.0;
        double sway_s = -1.0;
    };
    struct Vocoder {
        std::string kind = "phase_retrieval";
        int gl_iters = 32;
        std::string external_cmd;
    };
    struct Training {
        double lr = 1e-4;
        int warmup_steps = 500;
        std::int64_t updates = 5000;
        int batch_size = 4;
        double weight_decay = 0.0;
        int log_every = 50;
        int checkpoint_every = 1000;
    };

    std::string preset = "desk";
    Audio audio;
    Encoder encoder;
    Kmeans kmeans;
    Decoder decoder;
    Sampler sampler;
    Vocoder vocoder;
    Training training;

    static RunConfig desk();
    static RunConfig paper();
    static RunConfig from_preset(const std::string& name);

    // Starts from the file's preset (default desk) and applies overrides.
    // Unknown keys anywhere raise ContractError.
    static RunConfig load(const std::string& path);
    void save(const std::string& path) const;

    MelConfig mel_config() const;
    cfm::DecoderConfig decoder_config() const; // vocab from kmeans.k
    cfm::SamplerOptions sampler_options() const;
    cfm::AdamWOptions optimizer_options() const;
    KmeansOptions kmeans_options(std::uint64_t seed) const;
    VocoderSpec vocoder_spec() const;
};

} // namespace ezvc
