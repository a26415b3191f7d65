#include <doctest.h>

#include "ezvc/decoder/checkpoint.hpp"
#include "ezvc/errors.hpp"
#include "ezvc/io.hpp"
#include "ezvc/mel.hpp"
#include "ezvc/rng.hpp"
#include "ezvc/synth.hpp"

#include <filesystem>
#include <fstream>

using namespace ezvc;

namespace {

std::string temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "ezvc-tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

void truncate_file(const std::string& path, size_t drop_bytes) {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    in.close();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), std::streamsize(bytes.size() - drop_bytes));
}

void corrupt_magic(const std::string& path) {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(0);
    f.write("XXXX", 4);
}

} // namespace

TEST_CASE("mel container round-trips bitwise") {
    const MelSpectrogram mel = log_mel(synth::sine(440.0, 0.5, 16000, 0.4));
    const std::string path = temp_path("mel.ezmel");
    io::write_mel(path, mel);
    const MelSpectrogram r = io::read_mel(path);
    CHECK(r.frames == mel.frames);
    CHECK(r.channels == mel.channels);
    CHECK(r.hop_samples == mel.hop_samples);
    CHECK(r.sample_rate == mel.sample_rate);
    CHECK(std::equal(r.data.begin(), r.data.end(), mel.data.begin()));
}

TEST_CASE("mel container rejects corruption") {
    const MelSpectrogram mel = log_mel(synth::sine(440.0, 0.2, 16000, 0.4));
    const std::string path = temp_path("mel_bad.ezmel");

    io::write_mel(path, mel);
    corrupt_magic(path);
    CHECK_THROWS_AS(io::read_mel(path), FormatError);

    io::write_mel(path, mel);
    truncate_file(path, 16);
    CHECK_THROWS_AS(io::read_mel(path), FormatError);

    io::write_mel(path, mel);
    std::ofstream(path, std::ios::binary | std::ios::app) << "junk";
    CHECK_THROWS_AS(io::read_mel(path), FormatError);
}

TEST_CASE("codebook round-trips bitwise") {
    Rng rng(7);
    Codebook cb;
    cb.k = 12;
    cb.dim = 9;
    cb.inertia = 0.125;
    cb.trained_on = "surrogate:v1:layer=14:dim=400:seed=7";
    cb.centroids.resize(size_t(cb.k) * cb.dim);
    for (auto& v : cb.centroids) v = rng.normal_f();

    const std::string path = temp_path("cb.ezkm");
    io::save_codebook(path, cb);
    const Codebook r = io::load_codebook(path);
    CHECK(r.k == cb.k);
    CHECK(r.dim == cb.dim);
    CHECK(r.inertia == cb.inertia);
    CHECK(r.trained_on == cb.trained_on);
    CHECK(std::equal(r.centroids.begin(), r.centroids.end(), cb.centroids.begin()));
}

TEST_CASE("codebook rejects wrong magic and truncation") {
    Codebook cb;
    cb.k = 2;
    cb.dim = 2;
    cb.centroids = {1.0f, 2.0f, 3.0f, 4.0f};
    const std::string path = temp_path("cb_bad.ezkm");

    io::save_codebook(path, cb);
    corrupt_magic(path);
    CHECK_THROWS_AS(io::load_codebook(path), FormatError);

    io::save_codebook(path, cb);
    truncate_file(path, 4);
    CHECK_THROWS_AS(io::load_codebook(path), FormatError);
}

TEST_CASE("checkpoint round-trips parameters and optimizer state bitwise") {
    cfm::DecoderConfig cfg;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.model_dim = 32;
    cfg.mel_dim = 8;
    cfg.vocab_size = 12;
    cfg.conv_kernel = 3;
    cfg.conv_groups = 4;
    cfm::Model<float> model(cfg, 42);

    // give the optimizer state some non-trivial content
    cfm::AdamW opt(cfm::AdamWOptions{1e-3f, 10, 0.9f, 0.999f, 1e-8f, 0.01f});
    for (auto* p : model.params()) p->grad.setConstant(0.25f);
    opt.step(model);

    const std::string path = temp_path("model.ezckpt");
    cfm::save_checkpoint(path, model, 17, &opt);

    auto loaded = cfm::load_checkpoint(path);
    CHECK(loaded.step == 17);
    REQUIRE(loaded.has_optimizer);
    CHECK(loaded.optimizer.step_count() == 1);
    CHECK(loaded.optimizer.options().lr == 1e-3f);

    auto orig = model.params();
    auto back = loaded.model.params();
    REQUIRE(orig.size() == back.size());
    for (size_t i = 0; i < orig.size(); ++i) {
        CHECK(orig[i]->name == back[i]->name);
        CHECK(orig[i]->value == back[i]->value);
    }
    for (size_t i = 0; i < orig.size(); ++i) {
        CHECK(loaded.optimizer.moment1()[i] == opt.moment1()[i]);
        CHECK(loaded.optimizer.moment2()[i] == opt.moment2()[i]);
    }
}

TEST_CASE("checkpoint without optimizer state") {
    cfm::DecoderConfig cfg;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.model_dim = 16;
    cfg.mel_dim = 8;
    cfg.vocab_size = 6;
    cfg.conv_kernel = 3;
    cfg.conv_groups = 2;
    cfm::Model<float> model(cfg, 1);

    const std::string path = temp_path("model_noopt.ezckpt");
    cfm::save_checkpoint(path, model, 3);
    auto loaded = cfm::load_checkpoint(path);
    CHECK(loaded.step == 3);
    CHECK_FALSE(loaded.has_optimizer);
}

TEST_CASE("checkpoint rejects corruption") {
    cfm::DecoderConfig cfg;
    cfg.layers = 1;
    cfg.heads = 2;
    cfg.model_dim = 16;
    cfg.mel_dim = 8;
    cfg.vocab_size = 6;
    cfg.conv_kernel = 3;
    cfg.conv_groups = 2;
    cfm::Model<float> model(cfg, 1);
    const std::string path = temp_path("model_bad.ezckpt");

    cfm::save_checkpoint(path, model, 1);
    corrupt_magic(path);
    CHECK_THROWS_AS(cfm::load_checkpoint(path), FormatError);

    cfm::save_checkpoint(path, model, 1);
    truncate_file(path, 64);
    CHECK_THROWS_AS(cfm::load_checkpoint(path), FormatError);
}
