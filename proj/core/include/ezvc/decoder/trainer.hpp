#pragma once

#include "ezvc/decoder/loss.hpp"
#include "ezvc/decoder/model.hpp"
#include "ezvc/decoder/optimizer.hpp"
#include "ezvc/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ezvc::cfm {

// One utterance of prepared training data.
struct TrainItem {
    std::string id;
    MelSpectrogram mel;
    UnitSequence units; // deduped
};

// Samples items, masks and lengths into a padded TrainingBatch. Draw order is
// fixed (per item: mask), so a run is reproducible from the rng state.
TrainingBatch make_training_batch(const std::vector<const TrainItem*>& items,
                                  const DecoderConfig& cfg, ezvc::Rng& rng);

// One optimization-free training step: per item draw t ~ U[0,1] and x0 from
// the rng, build the OT flow point, zero the condition over the mask, drop
// conditioning entirely with probability cond_drop_prob, and accumulate
// gradients of the masked velocity MSE. Returns the batch loss.
float training_step(Model<float>& model, const TrainingBatch& batch, ezvc::Rng& rng);

struct TrainOptions {
    int steps = 2000;
    int batch_size = 4;
    std::uint64_t seed = 0;
    AdamWOptions optimizer;
    int log_every = 50;
    int checkpoint_every = 0;   // 0: only the final checkpoint
    std::string checkpoint_dir; // empty: never write checkpoints
    std::function<void(int step, float loss, float lr)> on_log;
};

struct TrainResult {
    std::vector<float> loss_history; // one entry per step
};

TrainResult train(Model<float>& model, AdamW& opt, const std::vector<TrainItem>& data,
                  const TrainOptions& options);

} // namespace ezvc::cfm
