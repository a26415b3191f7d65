#include <doctest.h>

#include "ezvc/encoder.hpp"
#include "ezvc/errors.hpp"
#include "ezvc/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace ezvc;

namespace {
std::string temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "ezvc-tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}
} // namespace

TEST_CASE("surrogate produces 50 embeddings per second") {
    EncoderSpec spec;
    spec.seed = 11;
    const Waveform w = synth::sine(220.0, 1.0, 16000, 0.3);
    const FrameEmbeddings emb = surrogate_embed(w, spec);
    CHECK(std::abs(emb.frames - 50) <= 1);
    CHECK(emb.dim == 400);
    CHECK(emb.frame_rate_hz == 50.0);
}

TEST_CASE("surrogate is deterministic") {
    EncoderSpec spec;
    spec.seed = 3;
    const Waveform w = synth::make_utterance(synth::voice_for_speaker(0), {0, 2, 4});
    const FrameEmbeddings a = surrogate_embed(w, spec);
    const FrameEmbeddings b = surrogate_embed(w, spec);
    REQUIRE(a.data.size() == b.data.size());
    CHECK(std::equal(a.data.begin(), a.data.end(), b.data.begin()));
}

TEST_CASE("seed changes rotate embeddings but preserve pairwise distances") {
    EncoderSpec spec_a, spec_b;
    spec_a.seed = 1;
    spec_b.seed = 2;
    const Waveform w = synth::make_utterance(synth::voice_for_speaker(3), {1, 5, 2});
    const FrameEmbeddings a = surrogate_embed(w, spec_a);
    const FrameEmbeddings b = surrogate_embed(w, spec_b);
    REQUIRE(a.frames == b.frames);

    bool any_diff = false;
    for (size_t i = 0; i < a.data.size(); ++i)
        if (a.data[i] != b.data[i]) any_diff = true;
    CHECK(any_diff);

    // distance matrices agree to 1e-4 relative (orthonormal projection at
    // full rank is an isometry of the stacked features)
    auto dist = [](const FrameEmbeddings& e, int i, int j) {
        double acc = 0.0;
        for (int d = 0; d < e.dim; ++d) {
            const double diff = double(e.row(i)[d]) - e.row(j)[d];
            acc += diff * diff;
        }
        return std::sqrt(acc);
    };
    for (int i = 0; i < a.frames; i += 7)
        for (int j = i + 1; j < a.frames; j += 5) {
            const double da = dist(a, i, j), db = dist(b, i, j);
            if (da > 1e-9) CHECK(std::abs(da - db) / da < 1e-4);
        }
}

TEST_CASE("embedding frame count follows the mel decimation law exactly") {
    EncoderSpec spec;
    spec.dim = 32;
    spec.seed = 2;
    const SurrogateEncoder enc(spec);
    for (double seconds : {0.25, 0.4, 1.0, 1.33}) {
        const Waveform w = synth::sine(180.0, seconds, 16000, 0.3);
        const MelSpectrogram mel = log_mel(w);
        const FrameEmbeddings emb = enc.embed(w);
        CHECK(emb.frames == (mel.frames + 1) / 2); // every 2nd frame of 100 Hz
    }
}

TEST_CASE("surrogate rejects too-short audio") {
    EncoderSpec spec;
    Waveform w;
    w.sample_rate = 16000;
    w.samples.assign(500, 0.1f); // under one analysis window
    CHECK_THROWS_AS(surrogate_embed(w, spec), DomainError);
}

TEST_CASE("embedding container round-trips bitwise") {
    EncoderSpec spec;
    spec.seed = 5;
    spec.dim = 64;
    const FrameEmbeddings emb =
        surrogate_embed(synth::sine(300.0, 0.5, 16000, 0.3), spec);

    const std::string path = temp_path("emb_roundtrip.ezemb");
    export_embeddings(path, emb);
    const FrameEmbeddings back = import_embeddings(path, 64);
    CHECK(back.frames == emb.frames);
    CHECK(back.dim == emb.dim);
    CHECK(back.source_tag == emb.source_tag);
    CHECK(std::equal(back.data.begin(), back.data.end(), emb.data.begin()));
}

TEST_CASE("import_embeddings validates the declared dim") {
    EncoderSpec spec;
    spec.dim = 32;
    const FrameEmbeddings emb =
        surrogate_embed(synth::sine(300.0, 0.3, 16000, 0.3), spec);
    const std::string path = temp_path("emb_dim.ezemb");
    export_embeddings(path, emb);
    CHECK_THROWS_AS(import_embeddings(path, 1024), ContractError);
}

TEST_CASE("import_embeddings rejects an empty container") {
    FrameEmbeddings empty;
    empty.frames = 0;
    empty.dim = 16;
    empty.source_tag = "test";
    const std::string path = temp_path("emb_empty.ezemb");
    export_embeddings(path, empty);
    CHECK_THROWS_AS(import_embeddings(path, 16), DomainError);
}

TEST_CASE("import_embeddings rejects truncation") {
    EncoderSpec spec;
    spec.dim = 16;
    const FrameEmbeddings emb =
        surrogate_embed(synth::sine(300.0, 0.3, 16000, 0.3), spec);
    const std::string path = temp_path("emb_trunc.ezemb");
    export_embeddings(path, emb);

    // chop the last 8 bytes
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    in.close();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), std::streamsize(bytes.size() - 8));
    out.close();
    CHECK_THROWS_AS(import_embeddings(path, 16), FormatError);
}

TEST_CASE("source tag round-trips the surrogate spec") {
    EncoderSpec spec;
    spec.layer_index = 14;
    spec.dim = 400;
    spec.seed = 42;
    const auto parsed = parse_surrogate_tag(surrogate_source_tag(spec));
    REQUIRE(parsed.has_value());
    CHECK(parsed->layer_index == 14);
    CHECK(parsed->dim == 400);
    CHECK(parsed->seed == 42);
    CHECK_FALSE(parse_surrogate_tag("imported:xeus:dim=1024").has_value());
}
