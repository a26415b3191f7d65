#include "ezvc/decoder/trainer.hpp"

#include "ezvc/decoder/checkpoint.hpp"
#include "ezvc/units.hpp"

#include <Eigen/Core>

#include <algorithm>

namespace ezvc::cfm {

TrainingBatch make_training_batch(const std::vector<const TrainItem*>& items,
                                  const DecoderConfig& cfg, ezvc::Rng& rng) {
    if (items.empty()) throw ContractError("make_training_batch: empty batch");
    const UnitVocabulary vocab{cfg.vocab_size - 2};

    int max_frames = 0;
    for (const auto* it : items) {
        if (it->mel.channels != cfg.mel_dim)
            throw ContractError("make_training_batch: mel channel mismatch");
        if (it->mel.frames < 1)
            throw ContractError("make_training_batch: empty mel for " + it->id);
        max_frames = std::max(max_frames, it->mel.frames);
    }

    TrainingBatch batch;
    batch.batch = int(items.size());
    batch.frames = max_frames;
    batch.mel_dim = cfg.mel_dim;
    batch.mel.assign(size_t(batch.batch) * max_frames * cfg.mel_dim, 0.0f);
    batch.token_ids.assign(size_t(batch.batch) * max_frames, vocab.pad_id());
    batch.mask.assign(size_t(batch.batch) * max_frames, 0);
    batch.lengths.resize(size_t(batch.batch));

    for (int b = 0; b < batch.batch; ++b) {
        const TrainItem& it = *items[size_t(b)];
        const int len = it.mel.frames;
        batch.lengths[size_t(b)] = len;
        for (int t = 0; t < len; ++t)
            std::copy(it.mel.row(t), it.mel.row(t) + cfg.mel_dim, batch.mel_row(b, t));

        const auto tokens = to_tokens(it.units, vocab, len);
        std::copy(tokens.begin(), tokens.end(),
                  batch.token_ids.begin() + size_t(b) * max_frames);

        const auto mask = sample_mask(len, cfg.mask_frac_lo, cfg.mask_frac_hi, rng);
        std::copy(mask.begin(), mask.end(), batch.mask.begin() + size_t(b) * max_frames);
    }
    return batch;
}

float training_step(Model<float>& model, const TrainingBatch& batch, ezvc::Rng& rng) {
    const DecoderConfig& cfg = model.config();
    batch.validate(cfg);
    model.zero_grads();

    // total masked cells, known up front so per-item backward can be scaled
    std::int64_t total_cells = 0;
    for (int b = 0; b < batch.batch; ++b) {
        const std::uint8_t* msk = batch.mask_for(b);
        for (int t = 0; t < batch.lengths[size_t(b)]; ++t)
            if (msk[t]) total_cells += cfg.mel_dim;
    }

    const float scale = 1.0f / float(total_cells);
    double sse = 0.0;
    for (int b = 0; b < batch.batch; ++b) {
        const int len = batch.lengths[size_t(b)];

        FlowItem<float> item;
        item.t = float(rng.uniform());
        MatF x1(len, cfg.mel_dim);
        for (int t = 0; t < len; ++t)
            for (int c = 0; c < cfg.mel_dim; ++c) x1(t, c) = batch.mel_row(b, t)[c];
        MatF x0(len, cfg.mel_dim);
        for (int t = 0; t < len; ++t)
            for (int c = 0; c < cfg.mel_dim; ++c) x0(t, c) = rng.normal_f();

        item.xt = (1.0f - item.t) * x0 + item.t * x1;
        item.v_target = x1 - x0;
        item.mask.assign(batch.mask_for(b), batch.mask_for(b) + len);
        item.tokens.assign(batch.tokens_for(b), batch.tokens_for(b) + len);

        item.cond = x1;
        for (int t = 0; t < len; ++t)
            if (item.mask[size_t(t)]) item.cond.row(t).setZero();

        if (rng.bernoulli(double(cfg.cond_drop_prob))) {
            item.cond.setZero();
            std::fill(item.tokens.begin(), item.tokens.end(), cfg.filler_id());
        }

        sse += double(flow_item_sse_grad(model, item, scale));
    }
    const float loss = float(sse / double(total_cells));
    if (!std::isfinite(loss)) throw DataError("training_step: non-finite loss");
    return loss;
}

TrainResult train(Model<float>& model, AdamW& opt, const std::vector<TrainItem>& data,
                  const TrainOptions& options) {
    if (data.empty()) throw DomainError("train: empty dataset");
    if (options.batch_size < 1) throw ContractError("train: batch_size must be >= 1");

    ezvc::Rng rng(options.seed);
    TrainResult result;
    result.loss_history.reserve(size_t(options.steps));

    for (int step = 1; step <= options.steps; ++step) {
        std::vector<const TrainItem*> picks(size_t(options.batch_size));
        for (auto& p : picks)
            p = &data[size_t(rng.uniform_int(0, std::int64_t(data.size()) - 1))];

        const TrainingBatch batch = make_training_batch(picks, model.config(), rng);
        const float loss = training_step(model, batch, rng);
        opt.step(model);
        result.loss_history.push_back(loss);

        if (options.on_log && options.log_every > 0 &&
            (step % options.log_every == 0 || step == 1 || step == options.steps))
            options.on_log(step, loss, opt.lr_at(opt.step_count()));

        if (!options.checkpoint_dir.empty() && options.checkpoint_every > 0 &&
            step % options.checkpoint_every == 0 && step != options.steps)
            save_checkpoint(options.checkpoint_dir + "/step" + std::to_string(step) +
                                ".ezckpt",
                            model, step, &opt);
    }
    if (!options.checkpoint_dir.empty())
        save_checkpoint(options.checkpoint_dir + "/final.ezckpt", model, options.steps,
                        &opt);
    return result;
}

} // namespace ezvc::cfm
