#include <doctest.h>

#include "ezvc/config.hpp"
#include "ezvc/errors.hpp"

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

TEST_CASE("paper preset records the published recipe") {
    const RunConfig cfg = RunConfig::paper();
    CHECK(cfg.audio.sample_rate == 16000);
    CHECK(cfg.audio.mel_channels == 80);
    CHECK(cfg.audio.hop == 160);
    CHECK(cfg.kmeans.k == 500);
    CHECK(cfg.decoder.layers == 22);
    CHECK(cfg.decoder.heads == 16);
    CHECK(cfg.training.lr == 5e-5);
    CHECK(cfg.training.warmup_steps == 100000);
    CHECK(cfg.training.batch_size == 64);
    CHECK(cfg.training.updates == 1350000);
    CHECK(cfg.decoder_config().vocab_size == 502);
}

TEST_CASE("desk preset stays tractable") {
    const RunConfig cfg = RunConfig::desk();
    CHECK(cfg.decoder.layers == 4);
    CHECK(cfg.decoder.heads == 4);
    CHECK(cfg.decoder.model_dim == 256);
    CHECK(cfg.training.updates <= 5000);
    CHECK_NOTHROW(cfg.decoder_config().validate());
}

TEST_CASE("config file overrides a preset") {
    const std::string path = temp_path("override.json");
    std::ofstream(path) << R"({"preset":"desk","kmeans":{"k":24},"sampler":{"steps":8}})";
    const RunConfig cfg = RunConfig::load(path);
    CHECK(cfg.kmeans.k == 24);
    CHECK(cfg.sampler.steps == 8);
    CHECK(cfg.decoder.layers == 4); // untouched desk default
}

TEST_CASE("unknown keys are rejected") {
    const std::string path = temp_path("unknown_key.json");
    std::ofstream(path) << R"({"kmeans":{"clusters":10}})";
    CHECK_THROWS_AS(RunConfig::load(path), ContractError);

    std::ofstream(path, std::ios::trunc) << R"({"quantizer":{"k":10}})";
    CHECK_THROWS_AS(RunConfig::load(path), ContractError);

    std::ofstream(path, std::ios::trunc) << R"({"kmeans":{"k":"ten"}})";
    CHECK_THROWS_AS(RunConfig::load(path), ContractError);
}

TEST_CASE("config save/load round-trip") {
    RunConfig cfg = RunConfig::desk();
    cfg.sampler.guidance_w = 1.5;
    cfg.kmeans.k = 32;
    const std::string path = temp_path("saved.json");
    cfg.save(path);
    const RunConfig back = RunConfig::load(path);
    CHECK(back.sampler.guidance_w == 1.5);
    CHECK(back.kmeans.k == 32);
    CHECK(back.decoder.model_dim == cfg.decoder.model_dim);
}

TEST_CASE("unknown preset name is rejected") {
    CHECK_THROWS_AS(RunConfig::from_preset("huge"), ContractError);
}
