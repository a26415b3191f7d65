#pragma once

#include "ezvc/decoder/sampler.hpp"
#include "ezvc/decoder/trainer.hpp"
#include "ezvc/encoder.hpp"
#include "ezvc/kmeans.hpp"
#include "ezvc/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace ezvc {

// Voice conversion recipe: the target supplies the speaker prompt (its mel
// plus its units), the source supplies content; the generated region is
// exactly one source-mel long and the prompt region is discarded.
struct ConversionRequest {
    Waveform source;
    Waveform target;
    cfm::SamplerOptions sampler;
    std::uint64_t seed = 0;
};

struct ConversionResult {
    Waveform audio;
    MelSpectrogram generated_mel; // prompt frames already discarded
    UnitSequence source_units;
    UnitSequence target_units;
    int prompt_frames = 0;
};

// embed -> assign -> dedup.
UnitSequence encode_to_units(const Waveform& w, const SurrogateEncoder& enc,
                             const Codebook& cb);

ConversionResult convert(const ConversionRequest& req, const cfm::Model<float>& model,
                         const Codebook& cb, const SurrogateEncoder& enc,
                         const VocoderSpec& voc);

// Self-conversion; the primary quality oracle.
ConversionResult resynthesize(const Waveform& w, const cfm::SamplerOptions& sampler,
                              std::uint64_t seed, const cfm::Model<float>& model,
                              const Codebook& cb, const SurrogateEncoder& enc,
                              const VocoderSpec& voc);

// ---- training-set preparation ----

struct ManifestEntry {
    std::string id;
    std::string audio_path;
    std::string language; // optional tag
};

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

struct DatasetIndexEntry {
    std::string id;
    std::string mel_path;
    std::string units_path;
    int frames = 0;
    int unit_count = 0;
};

struct DatasetIndex {
    int k_units = 0;
    std::string encoder_tag;
    std::vector<DatasetIndexEntry> entries;
};

// Writes out_dir/mel/<id>.ezmel and out_dir/units/<id>.units plus
// out_dir/index.jsonl. Unreadable entries are logged to `log` and skipped.
DatasetIndex prepare_training_set(const std::vector<ManifestEntry>& manifest,
                                  const SurrogateEncoder& enc, const Codebook& cb,
                                  const std::string& out_dir, std::ostream* log = nullptr);

void write_dataset_index(const std::string& path, const DatasetIndex& index);
DatasetIndex read_dataset_index(const std::string& path);

std::vector<cfm::TrainItem> load_dataset(const std::string& index_path);

// Unit files: one record per line {id, deduped, units}.
void write_units_file(const std::string& path, const std::string& id,
                      const UnitSequence& units);
UnitSequence read_units_file(const std::string& path, std::string* id = nullptr);

// Resamples to the pipeline rate (16 kHz) when needed.
Waveform normalize_input(const Waveform& w);

} // namespace ezvc
