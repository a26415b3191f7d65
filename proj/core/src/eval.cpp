#include "ezvc/eval.hpp"

#include "ezvc/errors.hpp"
#include "ezvc/mel.hpp"
#include "ezvc/wav.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace ezvc {

namespace {
using nlohmann::json;
} // namespace

SpeakerEmbedding proxy_speaker_embedding(const Waveform& w) {
    const Waveform norm = normalize_input(w);
    if (norm.duration() < 0.5)
        throw DomainError("proxy_speaker_embedding: need at least 0.5 s of audio");

    const MelSpectrogram mel = log_mel(norm);
    const int ch = mel.channels;
    std::vector<double> mean(size_t(ch), 0.0), var(size_t(ch), 0.0);
    for (int t = 0; t < mel.frames; ++t)
        for (int c = 0; c < ch; ++c) mean[size_t(c)] += mel.at(t, c);
    for (auto& m : mean) m /= mel.frames;
    for (int t = 0; t < mel.frames; ++t)
        for (int c = 0; c < ch; ++c) {
            const double d = mel.at(t, c) - mean[size_t(c)];
            var[size_t(c)] += d * d;
        }

    SpeakerEmbedding emb;
    emb.extractor_tag = "proxy-melstats-v1";
    emb.vec.resize(size_t(2 * ch));
    double norm2 = 0.0;
    for (int c = 0; c < ch; ++c) {
        emb.vec[size_t(c)] = float(mean[size_t(c)]);
        emb.vec[size_t(ch + c)] = float(std::sqrt(var[size_t(c)] / mel.frames));
    }
    for (float v : emb.vec) norm2 += double(v) * v;
    const float inv = float(1.0 / std::sqrt(std::max(norm2, 1e-30)));
    for (float& v : emb.vec) v *= inv;
    return emb;
}

SpeakerEmbedding external_speaker_embedding(const std::vector<float>& vec,
                                            const std::string& tag) {
    if (vec.empty()) throw ContractError("external_speaker_embedding: empty vector");
    SpeakerEmbedding emb;
    emb.extractor_tag = tag;
    emb.vec = vec;
    double norm2 = 0.0;
    for (float v : emb.vec) norm2 += double(v) * v;
    if (norm2 <= 0.0) throw DataError("external_speaker_embedding: zero vector");
    const float inv = float(1.0 / std::sqrt(norm2));
    for (float& v : emb.vec) v *= inv;
    return emb;
}

double cosine_similarity(const SpeakerEmbedding& a, const SpeakerEmbedding& b) {
    if (a.extractor_tag != b.extractor_tag)
        throw ContractError("cosine_similarity: extractor tags differ (" +
                            a.extractor_tag + " vs " + b.extractor_tag + ")");
    if (a.vec.size() != b.vec.size())
        throw ContractError("cosine_similarity: dimension mismatch");
    double dot = 0.0;
    for (size_t i = 0; i < a.vec.size(); ++i) dot += double(a.vec[i]) * b.vec[i];
    return dot;
}

double unit_overlap(const UnitSequence& a, const UnitSequence& b) {
    if (!a.deduped || !b.deduped)
        throw ContractError("unit_overlap: both sequences must be deduped");
    const size_t n = a.units.size(), m = b.units.size();
    if (n == 0 && m == 0) return 1.0;

    // Levenshtein, rolling rows
    std::vector<std::int64_t> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = std::int64_t(j);
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = std::int64_t(i);
        for (size_t j = 1; j <= m; ++j) {
            const std::int64_t sub =
                prev[j - 1] + (a.units[i - 1] == b.units[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    const double dist = double(prev[m]);
    return 1.0 - dist / double(std::max(n, m));
}

double mel_l1(const MelSpectrogram& a, const MelSpectrogram& b) {
    if (a.frames != b.frames || a.channels != b.channels)
        throw ContractError("mel_l1: shape mismatch");
    if (a.frames == 0) return 0.0;
    double acc = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i)
        acc += std::abs(double(a.data[i]) - double(b.data[i]));
    return acc / double(a.data.size());
}

std::vector<EvalPair> read_pairs_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<EvalPair> pairs;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object())
            throw FormatError(path + ":" + std::to_string(line_no) + ": malformed record");
        EvalPair p;
        try {
            p.id = rec.at("id").get<std::string>();
            p.source_path = rec.at("source").get<std::string>();
            p.target_path = rec.at("target").get<std::string>();
            p.tag = rec.value("tag", std::string{});
        } catch (const json::exception& e) {
            throw FormatError(path + ":" + std::to_string(line_no) + ": bad record (" +
                              e.what() + ")");
        }
        pairs.push_back(std::move(p));
    }
    return pairs;
}

EvalReport eval_batch(const std::vector<EvalPair>& pairs, const cfm::Model<float>& model,
                      const Codebook& cb, const SurrogateEncoder& enc,
                      const VocoderSpec& voc, const cfm::SamplerOptions& sampler,
                      std::uint64_t seed, std::ostream* log) {
    EvalReport report;
    for (size_t i = 0; i < pairs.size(); ++i) {
        const EvalPair& pair = pairs[i];
        PairResult row;
        row.id = pair.id;
        row.tag = pair.tag;
        try {
            ConversionRequest req;
            req.source = load_waveform(pair.source_path);
            req.target = load_waveform(pair.target_path);
            req.sampler = sampler;
            req.seed = seed + i; // per-pair stream, reproducible across runs

            const ConversionResult res = convert(req, model, cb, enc, voc);

            const SpeakerEmbedding out_emb = proxy_speaker_embedding(res.audio);
            const SpeakerEmbedding tgt_emb = proxy_speaker_embedding(req.target);
            row.cosine = cosine_similarity(out_emb, tgt_emb);
            row.overlap =
                unit_overlap(encode_to_units(res.audio, enc, cb), res.source_units);
            row.duration_ratio =
                res.audio.duration() / normalize_input(req.source).duration();
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
            if (log) *log << "pair " << pair.id << " failed: " << e.what() << '\n';
        }
        report.rows.push_back(std::move(row));
    }

    for (const auto& row : report.rows) {
        if (!row.ok) continue;
        ++report.ok_count;
        report.mean_cosine += row.cosine;
        report.mean_overlap += row.overlap;
        report.mean_duration_ratio += row.duration_ratio;
    }
    if (report.ok_count > 0) {
        report.mean_cosine /= report.ok_count;
        report.mean_overlap /= report.ok_count;
        report.mean_duration_ratio /= report.ok_count;
    }
    return report;
}

void write_report(const std::string& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (const auto& row : report.rows) {
        json rec;
        rec["pair"] = row.id;
        if (!row.tag.empty()) rec["tag"] = row.tag;
        if (row.ok) {
            rec["status"] = "ok";
            rec["cosine"] = row.cosine;
            rec["unit_overlap"] = row.overlap;
            rec["duration_ratio"] = row.duration_ratio;
        } else {
            rec["status"] = "error";
            rec["error"] = row.error;
        }
        out << rec.dump() << '\n';
    }
    const json agg = {{"pair", "__aggregate__"},
                      {"status", "ok"},
                      {"pairs_ok", report.ok_count},
                      {"pairs_failed", int(report.rows.size()) - report.ok_count},
                      {"cosine", report.mean_cosine},
                      {"unit_overlap", report.mean_overlap},
                      {"duration_ratio", report.mean_duration_ratio}};
    out << agg.dump() << '\n';
    if (!out) throw IoError("write failure on " + path);
}

std::string render_report_table(const EvalReport& report) {
    std::ostringstream os;
    os << std::left << std::setw(20) << "pair" << std::setw(16) << "tag" << std::right
       << std::setw(10) << "cosine" << std::setw(14) << "unit_ovl" << std::setw(12)
       << "dur_ratio" << '\n';
    os << std::string(72, '-') << '\n';
    os << std::fixed << std::setprecision(4);
    for (const auto& row : report.rows) {
        os << std::left << std::setw(20) << row.id << std::setw(16) << row.tag;
        if (row.ok)
            os << std::right << std::setw(10) << row.cosine << std::setw(14)
               << row.overlap << std::setw(12) << row.duration_ratio << '\n';
        else
            os << std::right << "  ERROR: " << row.error << '\n';
    }
    os << std::string(72, '-') << '\n';
    os << std::left << std::setw(36) << "mean" << std::right << std::setw(10)
       << report.mean_cosine << std::setw(14) << report.mean_overlap << std::setw(12)
       << report.mean_duration_ratio << '\n';
    return os.str();
}

} // namespace ezvc
