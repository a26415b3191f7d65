#pragma once

#include "ezvc/pipeline.hpp"
#include "ezvc/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace ezvc {

// Deterministic stand-in for an external speaker-verification model:
// per-band mean and standard deviation of the log-mel over time (80+80 dims),
// L2-normalized.
SpeakerEmbedding proxy_speaker_embedding(const Waveform& w);

// Wraps an external tool's output vector: L2-normalize, tag, nothing else.
SpeakerEmbedding external_speaker_embedding(const std::vector<float>& vec,
                                            const std::string& tag);

double cosine_similarity(const SpeakerEmbedding& a, const SpeakerEmbedding& b);

// 1 - edit_distance / max(len); both sequences must be deduped. Empty vs
// empty is 1.
double unit_overlap(const UnitSequence& a, const UnitSequence& b);

// Mean absolute difference per bin.
double mel_l1(const MelSpectrogram& a, const MelSpectrogram& b);

struct EvalPair {
    std::string id;
    std::string source_path;
    std::string target_path;
    std::string tag; // same-gender / cross-gender / intra-lingual / cross-lingual
};

std::vector<EvalPair> read_pairs_manifest(const std::string& path);

struct PairResult {
    std::string id;
    std::string tag;
    bool ok = false;
    double cosine = 0.0;
    double overlap = 0.0;
    double duration_ratio = 0.0;
    std::string error;
};

struct EvalReport {
    std::vector<PairResult> rows;
    int ok_count = 0;
    double mean_cosine = 0.0;
    double mean_overlap = 0.0;
    double mean_duration_ratio = 0.0;
};

// Converts every pair and measures {cosine, unit_overlap, duration_ratio}.
// Per-pair failures become error rows; the batch continues.
EvalReport eval_batch(const std::vector<EvalPair>& pairs, const cfm::Model<float>& model,
                      const Codebook& cb, const SurrogateEncoder& enc,
                      const VocoderSpec& voc, const cfm::SamplerOptions& sampler,
                      std::uint64_t seed, std::ostream* log = nullptr);

void write_report(const std::string& path, const EvalReport& report);
std::string render_report_table(const EvalReport& report);

} // namespace ezvc
