#include "ezvc/pipeline.hpp"

#include "ezvc/errors.hpp"
#include "ezvc/io.hpp"
#include "ezvc/mel.hpp"
#include "ezvc/resample.hpp"
#include "ezvc/units.hpp"
#include "ezvc/vocoder.hpp"
#include "ezvc/wav.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>

namespace ezvc {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kMinPromptSeconds = 0.5;

MelSpectrogram mel_from_rows(const cfm::MatF& rows, const MelConfig& cfg) {
    MelSpectrogram mel;
    mel.frames = int(rows.rows());
    mel.channels = int(rows.cols());
    mel.hop_samples = cfg.hop;
    mel.sample_rate = cfg.sample_rate;
    mel.data.resize(size_t(mel.frames) * mel.channels);
    for (int t = 0; t < mel.frames; ++t)
        for (int c = 0; c < mel.channels; ++c) mel.at(t, c) = rows(t, c);
    return mel;
}

json parse_line(const std::string& line, const std::string& path, size_t line_no) {
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object())
        throw FormatError(path + ":" + std::to_string(line_no) + ": malformed record");
    return rec;
}

} // namespace

Waveform normalize_input(const Waveform& w) {
    if (w.empty()) throw DomainError("normalize_input: empty waveform");
    constexpr int kPipelineRate = 16000;
    return w.sample_rate == kPipelineRate ? w : resample(w, kPipelineRate);
}

UnitSequence encode_to_units(const Waveform& w, const SurrogateEncoder& enc,
                             const Codebook& cb) {
    return dedup(assign(cb, enc.embed(normalize_input(w))));
}

ConversionResult convert(const ConversionRequest& req, const cfm::Model<float>& model,
                         const Codebook& cb, const SurrogateEncoder& enc,
                         const VocoderSpec& voc) {
    if (model.config().vocab_size != cb.k + 2)
        throw ContractError("convert: decoder vocabulary (" +
                            std::to_string(model.config().vocab_size) +
                            ") does not cover codebook k=" + std::to_string(cb.k));

    const Waveform source = normalize_input(req.source);
    const Waveform target = normalize_input(req.target);
    if (source.duration() < kMinPromptSeconds || target.duration() < kMinPromptSeconds)
        throw DomainError("convert: source and target must be at least 0.5 s");

    const MelConfig mel_cfg;
    const MelSpectrogram target_mel = log_mel(target, mel_cfg);
    const MelSpectrogram source_mel = log_mel(source, mel_cfg);
    const int prompt_frames = target_mel.frames;
    const int gen_frames = source_mel.frames;
    const int total = prompt_frames + gen_frames;

    ConversionResult result;
    result.prompt_frames = prompt_frames;
    result.target_units = encode_to_units(target, enc, cb);
    result.source_units = encode_to_units(source, enc, cb);

    // target units ++ source units, FILLER-padded to the full frame count
    UnitSequence joined;
    joined.deduped = true;
    joined.units = result.target_units.units;
    joined.units.insert(joined.units.end(), result.source_units.units.begin(),
                        result.source_units.units.end());
    const UnitVocabulary vocab{cb.k};
    const auto tokens = to_tokens(joined, vocab, total);

    cfm::MatF cond = cfm::MatF::Zero(total, mel_cfg.channels);
    for (int t = 0; t < prompt_frames; ++t)
        for (int c = 0; c < mel_cfg.channels; ++c) cond(t, c) = target_mel.at(t, c);

    Rng rng(req.seed);
    const cfm::MatF full =
        cfm::sample(model, cond, tokens, total, prompt_frames, req.sampler, rng);

    // the target (prompt) region is discarded
    result.generated_mel = mel_from_rows(full.bottomRows(gen_frames), mel_cfg);
    result.audio = mel_to_waveform(result.generated_mel, voc, mel_cfg);
    return result;
}

ConversionResult resynthesize(const Waveform& w, const cfm::SamplerOptions& sampler,
                              std::uint64_t seed, const cfm::Model<float>& model,
                              const Codebook& cb, const SurrogateEncoder& enc,
                              const VocoderSpec& voc) {
    ConversionRequest req;
    req.source = w;
    req.target = w;
    req.sampler = sampler;
    req.seed = seed;
    return convert(req, model, cb, enc, voc);
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<ManifestEntry> entries;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json rec = parse_line(line, path, line_no);
        ManifestEntry e;
        if (!rec.contains("id") || !rec.contains("audio_path"))
            throw FormatError(path + ":" + std::to_string(line_no) +
                              ": manifest record needs id and audio_path");
        e.id = rec.at("id").get<std::string>();
        e.audio_path = rec.at("audio_path").get<std::string>();
        e.language = rec.value("language", std::string{});
        entries.push_back(std::move(e));
    }
    return entries;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (const auto& e : entries) {
        json rec = {{"id", e.id}, {"audio_path", e.audio_path}};
        if (!e.language.empty()) rec["language"] = e.language;
        out << rec.dump() << '\n';
    }
    if (!out) throw IoError("write failure on " + path);
}

void write_units_file(const std::string& path, const std::string& id,
                      const UnitSequence& units) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    const json rec = {{"id", id}, {"deduped", units.deduped}, {"units", units.units}};
    out << rec.dump() << '\n';
    if (!out) throw IoError("write failure on " + path);
}

UnitSequence read_units_file(const std::string& path, std::string* id) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path + ": empty units file");
    const json rec = parse_line(line, path, 1);
    UnitSequence seq;
    try {
        seq.deduped = rec.at("deduped").get<bool>();
        seq.units = rec.at("units").get<std::vector<std::int32_t>>();
        if (id) *id = rec.at("id").get<std::string>();
    } catch (const json::exception& e) {
        throw FormatError(path + ": bad units record (" + e.what() + ")");
    }
    return seq;
}

DatasetIndex prepare_training_set(const std::vector<ManifestEntry>& manifest,
                                  const SurrogateEncoder& enc, const Codebook& cb,
                                  const std::string& out_dir, std::ostream* log) {
    if (manifest.empty()) throw DomainError("prepare_training_set: empty manifest");

    fs::create_directories(fs::path(out_dir) / "mel");
    fs::create_directories(fs::path(out_dir) / "units");

    DatasetIndex index;
    index.k_units = cb.k;
    index.encoder_tag = surrogate_source_tag(enc.spec());

    for (const auto& entry : manifest) {
        try {
            const Waveform w = normalize_input(load_waveform(entry.audio_path));
            const MelSpectrogram mel = log_mel(w);
            const UnitSequence units = encode_to_units(w, enc, cb);

            const std::string mel_path =
                (fs::path(out_dir) / "mel" / (entry.id + ".ezmel")).string();
            const std::string units_path =
                (fs::path(out_dir) / "units" / (entry.id + ".units")).string();
            io::write_mel(mel_path, mel);
            write_units_file(units_path, entry.id, units);

            index.entries.push_back({entry.id, mel_path, units_path, mel.frames,
                                     int(units.units.size())});
        } catch (const Error& e) {
            if (log) *log << "skip " << entry.id << ": " << e.what() << '\n';
        }
    }
    write_dataset_index((fs::path(out_dir) / "index.jsonl").string(), index);
    return index;
}

void write_dataset_index(const std::string& path, const DatasetIndex& index) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    const json meta = {{"id", "__meta__"},
                       {"k_units", index.k_units},
                       {"encoder_tag", index.encoder_tag}};
    out << meta.dump() << '\n';
    for (const auto& e : index.entries) {
        const json rec = {{"id", e.id},
                          {"mel_path", e.mel_path},
                          {"units_path", e.units_path},
                          {"frames", e.frames},
                          {"unit_count", e.unit_count}};
        out << rec.dump() << '\n';
    }
    if (!out) throw IoError("write failure on " + path);
}

DatasetIndex read_dataset_index(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    DatasetIndex index;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json rec = parse_line(line, path, line_no);
        try {
            if (rec.value("id", std::string{}) == "__meta__") {
                index.k_units = rec.at("k_units").get<int>();
                index.encoder_tag = rec.value("encoder_tag", std::string{});
                continue;
            }
            DatasetIndexEntry e;
            e.id = rec.at("id").get<std::string>();
            e.mel_path = rec.at("mel_path").get<std::string>();
            e.units_path = rec.at("units_path").get<std::string>();
            e.frames = rec.at("frames").get<int>();
            e.unit_count = rec.at("unit_count").get<int>();
            index.entries.push_back(std::move(e));
        } catch (const json::exception& e) {
            throw FormatError(path + ":" + std::to_string(line_no) + ": bad record (" +
                              e.what() + ")");
        }
    }
    if (index.k_units <= 0)
        throw FormatError(path + ": missing __meta__ record with k_units");
    return index;
}

std::vector<cfm::TrainItem> load_dataset(const std::string& index_path) {
    const DatasetIndex index = read_dataset_index(index_path);
    std::vector<cfm::TrainItem> items;
    items.reserve(index.entries.size());
    for (const auto& e : index.entries) {
        cfm::TrainItem item;
        item.id = e.id;
        item.mel = io::read_mel(e.mel_path);
        item.units = read_units_file(e.units_path);
        if (item.mel.frames != e.frames)
            throw FormatError(index_path + ": frame count mismatch for " + e.id);
        if (!item.units.deduped)
            throw FormatError(index_path + ": units for " + e.id + " are not deduped");
        items.push_back(std::move(item));
    }
    return items;
}

} // namespace ezvc
