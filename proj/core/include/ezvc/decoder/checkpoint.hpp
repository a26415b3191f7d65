#pragma once

#include "ezvc/decoder/model.hpp"
#include "ezvc/decoder/optimizer.hpp"

#include <cstdint>
#include <string>

namespace ezvc::cfm {

// "EZVCCKPT1" container: config + named float32 parameter tensors + optional
// AdamW state + step counter. Round-trips are bitwise on all tensor data.
void save_checkpoint(const std::string& path, const Model<float>& model,
                     std::int64_t step, const AdamW* opt = nullptr);

struct LoadedCheckpoint {
    Model<float> model;
    AdamW optimizer;
    std::int64_t step = 0;
    bool has_optimizer = false;

    explicit LoadedCheckpoint(Model<float> m) : model(std::move(m)) {}
};

LoadedCheckpoint load_checkpoint(const std::string& path);

} // namespace ezvc::cfm
