#pragma once

#include <cstdint>

namespace ezvc::cfm {

// Transformer decoder hyperparameters; the defaults are the desk-scale
// configuration the bundled tests train. RunConfig owns the named presets.
struct DecoderConfig {
    int layers = 4;
    int heads = 4;
    int model_dim = 256;
    int mel_dim = 80;
    int vocab_size = 502; // units + FILLER + PAD
    int ffn_mult = 2;
    int conv_kernel = 15;
    int conv_groups = 16;
    float cond_drop_prob = 0.2f;
    float mask_frac_lo = 0.7f;
    float mask_frac_hi = 1.0f;

    enum class Position { rotary, sinusoidal };
    Position position = Position::rotary;

    int ffn_hidden() const { return model_dim * ffn_mult; }
    int head_dim() const { return model_dim / heads; }
    std::int32_t filler_id() const { return vocab_size - 2; }
    std::int32_t pad_id() const { return vocab_size - 1; }

    void validate() const;
};

} // namespace ezvc::cfm
