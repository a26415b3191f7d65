#include "ezvc/decoder/flow.hpp"

#include <algorithm>
#include <cmath>

namespace ezvc::cfm {

void DecoderConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ContractError("DecoderConfig: " + msg); };
    if (layers < 1) fail("layers must be >= 1");
    if (heads < 1) fail("heads must be >= 1");
    if (model_dim < 2 || model_dim % 2 != 0) fail("model_dim must be even and >= 2");
    if (model_dim % heads != 0) fail("model_dim must be divisible by heads");
    if (position == Position::rotary && (model_dim / heads) % 2 != 0)
        fail("head dim must be even for rotary positions");
    if (mel_dim < 1) fail("mel_dim must be >= 1");
    if (vocab_size < 3) fail("vocab_size must cover units + FILLER + PAD");
    if (ffn_mult < 1) fail("ffn_mult must be >= 1");
    if (conv_kernel < 1 || conv_kernel % 2 == 0) fail("conv_kernel must be odd and >= 1");
    if (conv_groups < 1 || model_dim % conv_groups != 0)
        fail("conv_groups must divide model_dim");
    if (!(cond_drop_prob >= 0.0f && cond_drop_prob < 1.0f))
        fail("cond_drop_prob must be in [0, 1)");
    if (!(mask_frac_lo > 0.0f && mask_frac_lo <= mask_frac_hi && mask_frac_hi <= 1.0f))
        fail("mask fractions must satisfy 0 < lo <= hi <= 1");
}

std::vector<std::uint8_t> sample_mask(int frames, double frac_lo, double frac_hi,
                                      ezvc::Rng& rng) {
    if (frames < 1) throw ContractError("sample_mask: frames must be >= 1");
    if (!(frac_lo > 0.0 && frac_lo <= frac_hi && frac_hi <= 1.0))
        throw ContractError("sample_mask: bad fraction range");

    const double f = rng.uniform(frac_lo, frac_hi);
    int len = int(std::lround(f * frames));
    len = std::max(1, std::min(frames, len));
    const int start = int(rng.uniform_int(0, frames - len));

    std::vector<std::uint8_t> mask(size_t(frames), 0);
    for (int i = start; i < start + len; ++i) mask[size_t(i)] = 1;
    return mask;
}

void TrainingBatch::validate(const DecoderConfig& cfg) const {
    auto fail = [](const std::string& msg) { throw ContractError("TrainingBatch: " + msg); };
    if (batch < 1 || frames < 1) fail("empty batch");
    if (mel_dim != cfg.mel_dim) fail("mel_dim mismatch");
    if (mel.size() != size_t(batch) * frames * mel_dim) fail("mel buffer size");
    if (token_ids.size() != size_t(batch) * frames) fail("token buffer size");
    if (mask.size() != size_t(batch) * frames) fail("mask buffer size");
    if (lengths.size() != size_t(batch)) fail("lengths size");

    for (int b = 0; b < batch; ++b) {
        const int len = lengths[size_t(b)];
        if (len < 1 || len > frames)
            fail("item " + std::to_string(b) + " has invalid length");
        const std::int32_t* toks = tokens_for(b);
        const std::uint8_t* msk = mask_for(b);
        int masked = 0, transitions = 0;
        std::uint8_t prev = 0;
        for (int t = 0; t < frames; ++t) {
            if (toks[t] < 0 || toks[t] >= cfg.vocab_size)
                fail("item " + std::to_string(b) + " token out of range");
            if (t >= len) {
                if (toks[t] != cfg.pad_id())
                    fail("item " + std::to_string(b) + " padding must be PAD tokens");
                if (msk[t])
                    fail("item " + std::to_string(b) + " mask extends past length");
            }
            if (msk[t] != prev) {
                ++transitions;
                prev = msk[t];
            }
            masked += msk[t] ? 1 : 0;
        }
        if (masked == 0) fail("item " + std::to_string(b) + " has an all-false mask");
        if (transitions > 2)
            fail("item " + std::to_string(b) + " mask span is not contiguous");
        const auto clamp_len = [len](double f) {
            return std::max<std::int64_t>(1, std::min<std::int64_t>(len, std::lround(f * len)));
        };
        if (masked < clamp_len(cfg.mask_frac_lo) || masked > clamp_len(cfg.mask_frac_hi))
            fail("item " + std::to_string(b) + " masked fraction outside mask_frac_range");
    }
}

} // namespace ezvc::cfm
