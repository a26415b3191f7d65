#include "ezvc/io.hpp"

#include "ezvc/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <fstream>

namespace ezvc::io {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

constexpr const char* kMelMagic = "EZVCMEL1";
constexpr const char* kEmbMagic = "EZVCEMB1";
constexpr const char* kKmMagic = "EZVCKM1";

void write_container(const std::string& path, const char* magic, const json& header,
                     const float* data, size_t count) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << magic << '\n' << header.dump() << '\n';
    out.write(reinterpret_cast<const char*>(data),
              std::streamsize(count * sizeof(float)));
    if (!out) throw IoError("write failure on " + path);
}

json read_header(std::ifstream& in, const std::string& path, const char* magic) {
    std::string line;
    if (!std::getline(in, line) || line != magic)
        throw FormatError(path + ": bad magic, expected " + std::string(magic));
    if (!std::getline(in, line)) throw FormatError(path + ": missing header line");
    json header = json::parse(line, nullptr, false);
    if (header.is_discarded() || !header.is_object())
        throw FormatError(path + ": malformed header");
    return header;
}

void read_payload(std::ifstream& in, const std::string& path, float* data, size_t count) {
    in.read(reinterpret_cast<char*>(data), std::streamsize(count * sizeof(float)));
    if (size_t(in.gcount()) != count * sizeof(float))
        throw FormatError(path + ": truncated payload");
    if (in.peek() != std::ifstream::traits_type::eof())
        throw FormatError(path + ": trailing bytes after payload");
    for (size_t i = 0; i < count; ++i)
        if (!std::isfinite(data[i])) throw FormatError(path + ": non-finite payload value");
}

template <class T>
T header_field(const json& h, const std::string& path, const char* key) {
    if (!h.contains(key))
        throw FormatError(path + ": header missing field '" + std::string(key) + "'");
    try {
        return h.at(key).get<T>();
    } catch (const json::exception&) {
        throw FormatError(path + ": header field '" + std::string(key) + "' has wrong type");
    }
}

} // namespace

void write_mel(const std::string& path, const MelSpectrogram& mel) {
    const json header = {{"version", 1},
                         {"frames", mel.frames},
                         {"channels", mel.channels},
                         {"hop", mel.hop_samples},
                         {"sample_rate", mel.sample_rate}};
    write_container(path, kMelMagic, header, mel.data.data(), mel.data.size());
}

MelSpectrogram read_mel(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    const json h = read_header(in, path, kMelMagic);

    MelSpectrogram mel;
    mel.frames = header_field<int>(h, path, "frames");
    mel.channels = header_field<int>(h, path, "channels");
    mel.hop_samples = header_field<int>(h, path, "hop");
    mel.sample_rate = header_field<int>(h, path, "sample_rate");
    if (mel.frames < 0 || mel.channels <= 0)
        throw FormatError(path + ": invalid mel dimensions");
    mel.data.resize(size_t(mel.frames) * mel.channels);
    read_payload(in, path, mel.data.data(), mel.data.size());
    return mel;
}

void write_embeddings(const std::string& path, const FrameEmbeddings& emb) {
    const json header = {{"version", 1},
                         {"frames", emb.frames},
                         {"dim", emb.dim},
                         {"frame_rate_hz", emb.frame_rate_hz},
                         {"source_tag", emb.source_tag}};
    write_container(path, kEmbMagic, header, emb.data.data(), emb.data.size());
}

FrameEmbeddings read_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    const json h = read_header(in, path, kEmbMagic);

    FrameEmbeddings emb;
    emb.frames = header_field<int>(h, path, "frames");
    emb.dim = header_field<int>(h, path, "dim");
    emb.frame_rate_hz = header_field<double>(h, path, "frame_rate_hz");
    emb.source_tag = header_field<std::string>(h, path, "source_tag");
    if (emb.frames < 0 || emb.dim <= 0)
        throw FormatError(path + ": invalid embedding dimensions");
    emb.data.resize(size_t(emb.frames) * emb.dim);
    read_payload(in, path, emb.data.data(), emb.data.size());
    return emb;
}

void save_codebook(const std::string& path, const Codebook& cb) {
    const json header = {{"version", 1},
                         {"k", cb.k},
                         {"dim", cb.dim},
                         {"inertia", cb.inertia},
                         {"trained_on", cb.trained_on}};
    write_container(path, kKmMagic, header, cb.centroids.data(), cb.centroids.size());
}

Codebook load_codebook(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    const json h = read_header(in, path, kKmMagic);

    Codebook cb;
    cb.k = header_field<int>(h, path, "k");
    cb.dim = header_field<int>(h, path, "dim");
    cb.inertia = header_field<double>(h, path, "inertia");
    cb.trained_on = header_field<std::string>(h, path, "trained_on");
    if (cb.k <= 0 || cb.dim <= 0) throw FormatError(path + ": invalid codebook dimensions");
    cb.centroids.resize(size_t(cb.k) * cb.dim);
    read_payload(in, path, cb.centroids.data(), cb.centroids.size());
    return cb;
}

} // namespace ezvc::io
