#pragma once

#include "ezvc/mel.hpp"
#include "ezvc/types.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>

namespace ezvc {

// Deterministic stand-in for a pretrained SSL encoder: 50 Hz mel frames with
// ±2-frame context stacking (5x80 = 400 dims, edges replicated), projected by
// a fixed orthonormal matrix derived from the seed. With dim == 400 the
// projection is a rotation, so pairwise frame distances are seed-invariant.
class SurrogateEncoder {
public:
    explicit SurrogateEncoder(const EncoderSpec& spec, const MelConfig& mel_cfg = {});

    FrameEmbeddings embed(const Waveform& w) const;

    const Eigen::MatrixXd& projection() const { return proj_; }
    const EncoderSpec& spec() const { return spec_; }

    static constexpr int stacked_dim = 5 * 80;

private:
    EncoderSpec spec_;
    MelConfig mel_cfg_;
    Eigen::MatrixXd proj_; // stacked_dim x dim, orthonormal columns
};

FrameEmbeddings surrogate_embed(const Waveform& w, const EncoderSpec& spec);

// Embedding container ("EZVCEMB1"). Import validates the declared dim against
// expected_dim (pass -1 to accept any) and the 50 Hz frame rate; data passes
// through untouched.
FrameEmbeddings import_embeddings(const std::string& path, int expected_dim);
void export_embeddings(const std::string& path, const FrameEmbeddings& emb);

// source_tag round-trip, e.g. "surrogate:v1:layer=14:dim=400:seed=7".
std::string surrogate_source_tag(const EncoderSpec& spec);
std::optional<EncoderSpec> parse_surrogate_tag(const std::string& tag);

} // namespace ezvc
