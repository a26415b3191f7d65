#include "ezvc/wav.hpp"

#include "ezvc/errors.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace ezvc {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
           std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

std::uint16_t read_u16(const std::uint8_t* p) {
    return std::uint16_t(p[0]) | std::uint16_t(p[1]) << 8;
}

} // namespace

Waveform load_waveform(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure on " + path);

    if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw FormatError(path + " is not a RIFF/WAVE file");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    const std::uint8_t* data = nullptr;
    std::uint32_t data_size = 0;
    bool have_fmt = false;

    size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t size = read_u32(bytes.data() + pos + 4);
        const size_t body = pos + 8;
        if (body + size > bytes.size())
            throw FormatError(path + ": truncated chunk '" + std::string(id, 4) + "'");
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (size < 16) throw FormatError(path + ": fmt chunk too small");
            format = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            sample_rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            if (format == kFormatExtensible) {
                if (size < 40) throw FormatError(path + ": extensible fmt chunk too small");
                format = read_u16(bytes.data() + body + 24); // subformat GUID head
            }
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = bytes.data() + body;
            data_size = size;
        }
        pos = body + size + (size & 1); // chunks are word-aligned
    }

    if (!have_fmt || data == nullptr)
        throw FormatError(path + ": missing fmt or data chunk");
    if (channels == 0 || sample_rate == 0)
        throw FormatError(path + ": invalid fmt fields");

    const bool pcm_ok = format == kFormatPcm && (bits == 8 || bits == 16 || bits == 24);
    const bool float_ok = format == kFormatFloat && bits == 32;
    if (!pcm_ok && !float_ok)
        throw FormatError(path + ": unsupported encoding (format " +
                          std::to_string(format) + ", " + std::to_string(bits) + " bits)");

    const size_t bytes_per_sample = bits / 8;
    const size_t frame_bytes = bytes_per_sample * channels;
    const size_t num_frames = data_size / frame_bytes;

    Waveform w;
    w.sample_rate = int(sample_rate);
    w.samples.resize(num_frames);

    const double inv_channels = 1.0 / double(channels);
    for (size_t f = 0; f < num_frames; ++f) {
        double acc = 0.0;
        const std::uint8_t* p = data + f * frame_bytes;
        for (unsigned c = 0; c < channels; ++c, p += bytes_per_sample) {
            double v = 0.0;
            switch (bits) {
                case 8: // unsigned, midpoint 128
                    v = (double(p[0]) - 128.0) / 128.0;
                    break;
                case 16: {
                    const std::int16_t s = std::int16_t(read_u16(p));
                    v = double(s) / 32768.0;
                    break;
                }
                case 24: {
                    std::int32_t s = std::int32_t(p[0]) | std::int32_t(p[1]) << 8 |
                                     std::int32_t(p[2]) << 16;
                    if (s & 0x800000) s |= ~0xFFFFFF; // sign-extend
                    v = double(s) / 8388608.0;
                    break;
                }
                case 32: {
                    float fv;
                    std::uint32_t u = read_u32(p);
                    std::memcpy(&fv, &u, 4);
                    v = fv;
                    break;
                }
            }
            acc += v;
        }
        w.samples[f] = float(acc * inv_channels);
    }
    return w;
}

void save_waveform(const std::string& path, const Waveform& w) {
    if (w.sample_rate <= 0) throw ContractError("save_waveform: sample_rate must be > 0");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");

    const std::uint32_t n = std::uint32_t(w.samples.size());
    const std::uint32_t data_size = n * 2;
    const std::uint32_t riff_size = 36 + data_size;

    auto put_u32 = [&](std::uint32_t v) {
        const char b[4] = {char(v), char(v >> 8), char(v >> 16), char(v >> 24)};
        out.write(b, 4);
    };
    auto put_u16 = [&](std::uint16_t v) {
        const char b[2] = {char(v), char(v >> 8)};
        out.write(b, 2);
    };

    out.write("RIFF", 4);
    put_u32(riff_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(16);
    put_u16(kFormatPcm);
    put_u16(1); // mono
    put_u32(std::uint32_t(w.sample_rate));
    put_u32(std::uint32_t(w.sample_rate) * 2); // byte rate
    put_u16(2);                                // block align
    put_u16(16);
    out.write("data", 4);
    put_u32(data_size);

    for (float s : w.samples) {
        double v = std::max(-1.0, std::min(1.0, double(s)));
        const std::int16_t q = std::int16_t(std::lrint(v * 32767.0));
        put_u16(std::uint16_t(q));
    }
    if (!out) throw IoError("write failure on " + path);
}

} // namespace ezvc
