#include <doctest.h>

#include "ezvc/errors.hpp"
#include "ezvc/resample.hpp"
#include "ezvc/synth.hpp"
#include "ezvc/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

using namespace ezvc;

namespace {

std::string temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "ezvc-tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

// Minimal WAV writer independent of the library's save path, so load tests
// do not depend on the code they check.
void write_wav_raw(const std::string& path, const std::vector<std::int16_t>& interleaved,
                   int channels, int sample_rate) {
    std::ofstream out(path, std::ios::binary);
    auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<char*>(&v), 4); };
    auto u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<char*>(&v), 2); };
    const std::uint32_t data_size = std::uint32_t(interleaved.size() * 2);
    out.write("RIFF", 4);
    u32(36 + data_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    u32(16);
    u16(1);
    u16(std::uint16_t(channels));
    u32(std::uint32_t(sample_rate));
    u32(std::uint32_t(sample_rate * channels * 2));
    u16(std::uint16_t(channels * 2));
    u16(16);
    out.write("data", 4);
    u32(data_size);
    out.write(reinterpret_cast<const char*>(interleaved.data()), data_size);
}

} // namespace

TEST_CASE("load_waveform reads 16-bit mono as-is") {
    const std::string path = temp_path("mono16.wav");
    std::vector<std::int16_t> samples(16000);
    for (size_t i = 0; i < samples.size(); ++i)
        samples[i] = std::int16_t(8000.0 * std::sin(2.0 * 3.14159265 * 440.0 * i / 16000.0));
    write_wav_raw(path, samples, 1, 16000);

    const Waveform w = load_waveform(path);
    CHECK(w.sample_rate == 16000);
    CHECK(w.samples.size() == 16000);
    CHECK(w.samples[10] == doctest::Approx(samples[10] / 32768.0).epsilon(1e-6));
}

TEST_CASE("load_waveform mixes opposite channels to silence") {
    const std::string path = temp_path("stereo_cancel.wav");
    std::vector<std::int16_t> inter(2000);
    for (size_t i = 0; i < inter.size(); i += 2) {
        inter[i] = std::int16_t(1000 + int(i));
        inter[i + 1] = std::int16_t(-inter[i]);
    }
    write_wav_raw(path, inter, 2, 16000);

    const Waveform w = load_waveform(path);
    CHECK(w.samples.size() == 1000);
    for (float s : w.samples) CHECK(s == 0.0f);
}

TEST_CASE("load_waveform decodes 8-bit, 24-bit and float32 PCM") {
    // raw writers per format, independent of the library
    auto write_header = [](std::ofstream& out, std::uint16_t format, int channels,
                           int sample_rate, int bits, std::uint32_t data_size) {
        auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<char*>(&v), 4); };
        auto u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<char*>(&v), 2); };
        out.write("RIFF", 4);
        u32(36 + data_size);
        out.write("WAVE", 4);
        out.write("fmt ", 4);
        u32(16);
        u16(format);
        u16(std::uint16_t(channels));
        u32(std::uint32_t(sample_rate));
        u32(std::uint32_t(sample_rate * channels * bits / 8));
        u16(std::uint16_t(channels * bits / 8));
        u16(std::uint16_t(bits));
        out.write("data", 4);
        u32(data_size);
    };

    SUBCASE("8-bit unsigned, midpoint 128") {
        const std::string path = temp_path("u8.wav");
        std::ofstream out(path, std::ios::binary);
        write_header(out, 1, 1, 16000, 8, 4);
        const std::uint8_t bytes[4] = {128, 255, 0, 192};
        out.write(reinterpret_cast<const char*>(bytes), 4);
        out.close();
        const Waveform w = load_waveform(path);
        REQUIRE(w.samples.size() == 4);
        CHECK(w.samples[0] == doctest::Approx(0.0f));
        CHECK(w.samples[1] == doctest::Approx(127.0 / 128.0));
        CHECK(w.samples[2] == doctest::Approx(-1.0f));
        CHECK(w.samples[3] == doctest::Approx(0.5f));
    }

    SUBCASE("24-bit signed little-endian") {
        const std::string path = temp_path("s24.wav");
        std::ofstream out(path, std::ios::binary);
        write_header(out, 1, 1, 16000, 24, 9);
        // +4194304 (2^22), -4194304, -1
        const std::uint8_t bytes[9] = {0x00, 0x00, 0x40, 0x00, 0x00, 0xC0,
                                       0xFF, 0xFF, 0xFF};
        out.write(reinterpret_cast<const char*>(bytes), 9);
        out.close();
        const Waveform w = load_waveform(path);
        REQUIRE(w.samples.size() == 3);
        CHECK(w.samples[0] == doctest::Approx(0.5f));
        CHECK(w.samples[1] == doctest::Approx(-0.5f));
        CHECK(w.samples[2] == doctest::Approx(-1.0 / 8388608.0));
    }

    SUBCASE("32-bit IEEE float passes through") {
        const std::string path = temp_path("f32.wav");
        std::ofstream out(path, std::ios::binary);
        write_header(out, 3, 1, 16000, 32, 8);
        const float vals[2] = {0.25f, -0.75f};
        out.write(reinterpret_cast<const char*>(vals), 8);
        out.close();
        const Waveform w = load_waveform(path);
        REQUIRE(w.samples.size() == 2);
        CHECK(w.samples[0] == 0.25f);
        CHECK(w.samples[1] == -0.75f);
    }

    SUBCASE("unsupported bit depth is a format error") {
        const std::string path = temp_path("s12.wav");
        std::ofstream out(path, std::ios::binary);
        write_header(out, 1, 1, 16000, 12, 12);
        out.write("000000000000", 12);
        out.close();
        CHECK_THROWS_AS(load_waveform(path), FormatError);
    }
}

TEST_CASE("load_waveform keeps the original sample rate") {
    const std::string path = temp_path("sr24k.wav");
    write_wav_raw(path, std::vector<std::int16_t>(2400, 100), 1, 24000);
    CHECK(load_waveform(path).sample_rate == 24000);
}

TEST_CASE("load_waveform error paths") {
    CHECK_THROWS_AS(load_waveform(temp_path("missing_file.wav")), IoError);

    const std::string bad = temp_path("not_a_wav.wav");
    std::ofstream(bad) << "definitely not riff data, long enough to pass size checks......";
    CHECK_THROWS_AS(load_waveform(bad), FormatError);
}

TEST_CASE("save/load round-trip at 16-bit precision") {
    const std::string path = temp_path("roundtrip.wav");
    const Waveform w = synth::sine(440.0, 0.25, 16000, 0.5);
    save_waveform(path, w);
    const Waveform r = load_waveform(path);
    REQUIRE(r.samples.size() == w.samples.size());
    for (size_t i = 0; i < w.samples.size(); i += 97)
        CHECK(r.samples[i] == doctest::Approx(w.samples[i]).epsilon(2e-4));
}

TEST_CASE("resample at the same rate is bitwise identity") {
    const Waveform w = synth::sine(250.0, 0.3, 16000);
    const Waveform r = resample(w, 16000);
    REQUIRE(r.samples.size() == w.samples.size());
    CHECK(std::equal(r.samples.begin(), r.samples.end(), w.samples.begin()));
}

TEST_CASE("resample conserves duration") {
    const Waveform w = synth::sine(250.0, 1.0, 48000);
    const Waveform r = resample(w, 16000);
    CHECK(r.sample_rate == 16000);
    CHECK(std::abs(int(r.samples.size()) - 16000) <= 1);
}

TEST_CASE("resampled sine matches the analytic signal") {
    // oracle: generate the same 100 Hz tone directly at the target rate
    const Waveform src = synth::sine(100.0, 1.0, 48000, 0.5);
    const Waveform got = resample(src, 16000);
    const Waveform ref = synth::sine(100.0, 1.0, 16000, 0.5);

    const size_t n = std::min(got.samples.size(), ref.samples.size());
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        dot += double(got.samples[i]) * ref.samples[i];
        na += double(got.samples[i]) * got.samples[i];
        nb += double(ref.samples[i]) * ref.samples[i];
    }
    const double corr = dot / std::sqrt(na * nb);
    CHECK(corr > 0.999);
}

TEST_CASE("resample round-trip keeps duration within two periods") {
    const Waveform w = synth::sine(300.0, 0.7, 16000);
    for (int rate : {8000, 22050, 24000, 44100, 48000}) {
        const Waveform down = resample(w, rate);
        const Waveform back = resample(down, 16000);
        CHECK(std::abs(int(back.samples.size()) - int(w.samples.size())) <= 2);
    }
}

TEST_CASE("resample rejects nonpositive target rates") {
    CHECK_THROWS_AS(resample(synth::sine(100.0, 0.1, 16000), 0), ContractError);
}
