#include "ezvc/encoder.hpp"

#include "ezvc/errors.hpp"
#include "ezvc/io.hpp"
#include "ezvc/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <sstream>

namespace ezvc {

SurrogateEncoder::SurrogateEncoder(const EncoderSpec& spec, const MelConfig& mel_cfg)
    : spec_(spec), mel_cfg_(mel_cfg) {
    if (spec.kind != EncoderSpec::Kind::surrogate)
        throw ContractError("SurrogateEncoder: spec.kind must be surrogate");
    if (spec.dim < 1 || spec.dim > stacked_dim)
        throw ContractError("SurrogateEncoder: dim must be in [1, " +
                            std::to_string(stacked_dim) + "]");
    if (mel_cfg.channels * 5 != stacked_dim)
        throw ContractError("SurrogateEncoder: mel channels must be 80");

    // Seeded Gaussian matrix -> QR; sign-canonicalized so the projection is a
    // pure function of the seed.
    Rng rng(spec.seed);
    Eigen::MatrixXd g(stacked_dim, stacked_dim);
    for (int r = 0; r < stacked_dim; ++r)
        for (int c = 0; c < stacked_dim; ++c) g(r, c) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < stacked_dim; ++c)
        if (r(c, c) < 0.0) q.col(c) = -q.col(c);
    proj_ = q.leftCols(spec.dim);
}

FrameEmbeddings SurrogateEncoder::embed(const Waveform& w) const {
    if (std::int64_t(w.samples.size()) < mel_cfg_.win_length)
        throw DomainError("surrogate_embed: waveform shorter than one analysis window");

    const MelSpectrogram mel = log_mel(w, mel_cfg_);
    const int t_mel = mel.frames;
    const int t_out = (t_mel + 1) / 2; // every 2nd frame: 100 Hz -> 50 Hz

    FrameEmbeddings emb;
    emb.frames = t_out;
    emb.dim = spec_.dim;
    emb.frame_rate_hz = 50.0;
    emb.source_tag = surrogate_source_tag(spec_);
    emb.data.resize(size_t(t_out) * spec_.dim);

    const int ch = mel.channels;
    Eigen::VectorXd stacked(stacked_dim);
    for (int j = 0; j < t_out; ++j) {
        for (int off = -2; off <= 2; ++off) {
            // context in the decimated 50 Hz stream, edge frames replicated
            int src = std::clamp(j + off, 0, t_out - 1) * 2;
            src = std::min(src, t_mel - 1);
            for (int c = 0; c < ch; ++c)
                stacked((off + 2) * ch + c) = double(mel.at(src, c));
        }
        const Eigen::VectorXd projected = proj_.transpose() * stacked;
        for (int d = 0; d < spec_.dim; ++d)
            emb.row(j)[d] = float(projected(d));
    }
    return emb;
}

FrameEmbeddings surrogate_embed(const Waveform& w, const EncoderSpec& spec) {
    return SurrogateEncoder(spec).embed(w);
}

FrameEmbeddings import_embeddings(const std::string& path, int expected_dim) {
    FrameEmbeddings emb = io::read_embeddings(path);
    if (expected_dim >= 0 && emb.dim != expected_dim)
        throw ContractError("import_embeddings: file declares dim " +
                            std::to_string(emb.dim) + ", expected " +
                            std::to_string(expected_dim));
    if (emb.frame_rate_hz != 50.0)
        throw ContractError("import_embeddings: frame rate must be 50 Hz, got " +
                            std::to_string(emb.frame_rate_hz));
    if (emb.frames == 0) throw DomainError("import_embeddings: empty container");
    return emb;
}

void export_embeddings(const std::string& path, const FrameEmbeddings& emb) {
    io::write_embeddings(path, emb);
}

std::string surrogate_source_tag(const EncoderSpec& spec) {
    std::ostringstream os;
    os << "surrogate:v1:layer=" << spec.layer_index << ":dim=" << spec.dim
       << ":seed=" << spec.seed;
    return os.str();
}

std::optional<EncoderSpec> parse_surrogate_tag(const std::string& tag) {
    if (tag.rfind("surrogate:v1:", 0) != 0) return std::nullopt;
    EncoderSpec spec;
    spec.kind = EncoderSpec::Kind::surrogate;
    std::stringstream ss(tag);
    std::string field;
    while (std::getline(ss, field, ':')) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = field.substr(0, eq);
        const std::string val = field.substr(eq + 1);
        try {
            if (key == "layer") spec.layer_index = std::stoi(val);
            else if (key == "dim") spec.dim = std::stoi(val);
            else if (key == "seed") spec.seed = std::stoull(val);
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }
    return spec;
}

} // namespace ezvc
