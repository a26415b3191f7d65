#include <doctest.h>

#include "ezvc/decoder/loss.hpp"
#include "ezvc/decoder/model.hpp"
#include "ezvc/decoder/optimizer.hpp"
#include "ezvc/decoder/trainer.hpp"
#include "ezvc/rng.hpp"

#include <algorithm>
#include <cmath>

using namespace ezvc;
using namespace ezvc::cfm;

namespace {

DecoderConfig tiny_config() {
    DecoderConfig cfg;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.model_dim = 16;
    cfg.mel_dim = 80;
    cfg.vocab_size = 12;
    cfg.ffn_mult = 2;
    cfg.conv_kernel = 3;
    cfg.conv_groups = 4;
    return cfg;
}

template <class S>
void randomize_params(Model<S>& model, std::uint64_t seed, double scale) {
    Rng rng(seed);
    for (auto* p : model.params())
        for (Eigen::Index i = 0; i < p->value.rows(); ++i)
            for (Eigen::Index j = 0; j < p->value.cols(); ++j)
                p->value(i, j) = S(rng.normal() * scale);
}

template <class S>
FlowItem<S> random_item(const DecoderConfig& cfg, int frames, std::uint64_t seed) {
    Rng rng(seed);
    FlowItem<S> item;
    item.xt.resize(frames, cfg.mel_dim);
    item.v_target.resize(frames, cfg.mel_dim);
    item.cond.resize(frames, cfg.mel_dim);
    for (int r = 0; r < frames; ++r)
        for (int c = 0; c < cfg.mel_dim; ++c) {
            item.xt(r, c) = S(rng.normal());
            item.v_target(r, c) = S(rng.normal());
            item.cond(r, c) = S(rng.normal());
        }
    item.tokens.resize(size_t(frames));
    for (auto& t : item.tokens)
        t = std::int32_t(rng.uniform_int(0, cfg.vocab_size - 1));
    item.mask.assign(size_t(frames), 0);
    for (int r = 1; r < frames - 2; ++r) item.mask[size_t(r)] = 1; // contiguous span
    for (int r = 0; r < frames; ++r)
        if (item.mask[size_t(r)]) item.cond.row(r).setZero();
    item.t = S(0.37);
    return item;
}

} // namespace

TEST_CASE("forward output shape matches the input mel shape") {
    const DecoderConfig cfg = tiny_config();
    const Model<float> model(cfg, 3);
    Rng rng(4);
    for (int frames : {1, 5, 23}) {
        MatF xt(frames, cfg.mel_dim), cond = MatF::Zero(frames, cfg.mel_dim);
        for (int r = 0; r < frames; ++r)
            for (int c = 0; c < cfg.mel_dim; ++c) xt(r, c) = rng.normal_f();
        std::vector<std::int32_t> tokens(size_t(frames), 1);
        const MatF out = model.forward(xt, cond, tokens, 0.5f);
        CHECK(out.rows() == frames);
        CHECK(out.cols() == cfg.mel_dim);
    }
}

TEST_CASE("forward is deterministic") {
    const DecoderConfig cfg = tiny_config();
    Model<float> model(cfg, 3);
    randomize_params(model, 10, 0.3);
    const auto item = random_item<float>(cfg, 9, 20);
    const MatF a = model.forward(item.xt, item.cond, item.tokens, item.t);
    const MatF b = model.forward(item.xt, item.cond, item.tokens, item.t);
    CHECK(a == b);
}

TEST_CASE("a fresh model predicts exactly zero velocity") {
    const DecoderConfig cfg = tiny_config();
    const Model<float> model(cfg, 99);
    const auto item = random_item<float>(cfg, 8, 21);
    const MatF out = model.forward(item.xt, item.cond, item.tokens, item.t);
    CHECK(out == MatF::Zero(8, cfg.mel_dim));
}

TEST_CASE("permuting batch items permutes outputs identically") {
    const DecoderConfig cfg = tiny_config();
    Model<float> model(cfg, 5);
    randomize_params(model, 11, 0.3);

    std::vector<MatF> xt, cond;
    std::vector<std::vector<std::int32_t>> tokens;
    std::vector<float> t;
    for (int i = 0; i < 3; ++i) {
        const auto item = random_item<float>(cfg, 6 + i, 30 + std::uint64_t(i));
        xt.push_back(item.xt);
        cond.push_back(item.cond);
        tokens.push_back(item.tokens);
        t.push_back(item.t);
    }
    const auto fwd = forward_batch(model, xt, cond, tokens, t);

    std::vector<MatF> xt_r = {xt[2], xt[0], xt[1]};
    std::vector<MatF> cond_r = {cond[2], cond[0], cond[1]};
    std::vector<std::vector<std::int32_t>> tokens_r = {tokens[2], tokens[0], tokens[1]};
    std::vector<float> t_r = {t[2], t[0], t[1]};
    const auto rev = forward_batch(model, xt_r, cond_r, tokens_r, t_r);

    CHECK(rev[0] == fwd[2]);
    CHECK(rev[1] == fwd[0]);
    CHECK(rev[2] == fwd[1]);
}

TEST_CASE("forward contract errors") {
    const DecoderConfig cfg = tiny_config();
    const Model<float> model(cfg, 1);
    MatF xt = MatF::Zero(4, cfg.mel_dim), cond = MatF::Zero(3, cfg.mel_dim);
    std::vector<std::int32_t> tokens(4, 0);
    CHECK_THROWS_AS(model.forward(xt, cond, tokens, 0.5f), ContractError);

    cond = MatF::Zero(4, cfg.mel_dim);
    tokens[2] = cfg.vocab_size; // out of range
    CHECK_THROWS_AS(model.forward(xt, cond, tokens, 0.5f), ContractError);
}

TEST_CASE("zero-output model on unit velocity target has loss exactly 1") {
    // x0 = 0 and x1 = all-ones: v_target = 1 everywhere; a fresh (zero-output)
    // model gives masked MSE 1.0
    const DecoderConfig cfg = tiny_config();
    const Model<float> model(cfg, 0);
    const int frames = 8;

    const MatF x0 = MatF::Zero(frames, cfg.mel_dim);
    const MatF x1 = MatF::Ones(frames, cfg.mel_dim);
    const auto flow = ot_path(x0, x1, 0.3f);

    FlowItem<float> item;
    item.xt = flow.xt;
    item.v_target = flow.v_target;
    item.cond = MatF::Zero(frames, cfg.mel_dim); // fully masked
    item.tokens.assign(size_t(frames), 2);
    item.mask.assign(size_t(frames), 1);
    item.t = flow.t;

    std::int64_t cells = 0;
    const float sse = flow_item_sse(model, item, &cells);
    CHECK(cells == frames * cfg.mel_dim);
    CHECK(sse / float(cells) == doctest::Approx(1.0f));
}

TEST_CASE("loss ignores velocity targets outside the mask") {
    const DecoderConfig cfg = tiny_config();
    Model<float> model(cfg, 6);
    randomize_params(model, 12, 0.3);

    auto item_a = random_item<float>(cfg, 10, 40);
    auto item_b = item_a;
    // change v_target only at unmasked rows; model inputs stay identical
    for (int r = 0; r < 10; ++r)
        if (!item_a.mask[size_t(r)])
            item_b.v_target.row(r).array() += 3.5f;

    const float sse_a = flow_item_sse(model, item_a);
    const float sse_b = flow_item_sse(model, item_b);
    CHECK(sse_a == sse_b);
}

TEST_CASE("analytic gradients match central finite differences (64-bit)") {
    // tiny config: 2 layers, dim 16, T=8
    const DecoderConfig cfg = tiny_config();
    Model<double> model(cfg, 7);
    randomize_params(model, 101, 0.3);

    const auto item = random_item<double>(cfg, 8, 50);

    const std::int64_t cells =
        std::count(item.mask.begin(), item.mask.end(), 1) * cfg.mel_dim;
    REQUIRE(cells > 0);
    const double inv_n = 1.0 / double(cells);

    model.zero_grads();
    flow_item_sse_grad(model, item, inv_n);

    std::int64_t checked = 0, failures = 0;
    double worst_rel = 0.0;
    std::string worst_name;
    for (auto* p : model.params()) {
        for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
            for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
                const double orig = p->value(i, j);
                const double eps = 1e-5 * std::max(1.0, std::abs(orig));
                p->value(i, j) = orig + eps;
                const double lp = flow_item_sse(model, item) * inv_n;
                p->value(i, j) = orig - eps;
                const double lm = flow_item_sse(model, item) * inv_n;
                p->value(i, j) = orig;

                const double fd = (lp - lm) / (2.0 * eps);
                const double an = p->grad(i, j);
                const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
                const double rel = std::abs(fd - an) / denom;
                ++checked;
                if (rel > 1e-3) ++failures;
                if (rel > worst_rel) {
                    worst_rel = rel;
                    worst_name = p->name;
                }
            }
        }
    }
    INFO("checked " << checked << " params, worst rel err " << worst_rel << " at "
                    << worst_name);
    CHECK(checked > 10000);
    CHECK(failures == 0);
}

TEST_CASE("training on a fixed batch strictly decreases smoothed loss") {
    DecoderConfig cfg;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.model_dim = 32;
    cfg.mel_dim = 16;
    cfg.vocab_size = 10;
    cfg.conv_kernel = 3;
    cfg.conv_groups = 4;
    cfg.cond_drop_prob = 0.2f;
    Model<float> model(cfg, 13);

    // two fixed items
    Rng data_rng(77);
    std::vector<TrainItem> items(2);
    for (int i = 0; i < 2; ++i) {
        items[size_t(i)].id = "it" + std::to_string(i);
        auto& mel = items[size_t(i)].mel;
        mel.frames = 16;
        mel.channels = cfg.mel_dim;
        mel.data.resize(16 * size_t(cfg.mel_dim));
        for (auto& v : mel.data) v = data_rng.normal_f();
        items[size_t(i)].units.deduped = true;
        items[size_t(i)].units.units = {1, 3, 2, 5, 4};
    }
    std::vector<const TrainItem*> picks = {&items[0], &items[1]};

    AdamW opt(AdamWOptions{1e-3f, 0, 0.9f, 0.999f, 1e-8f, 0.0f});
    Rng rng(55);
    std::vector<float> losses;
    for (int step = 0; step < 200; ++step) {
        const TrainingBatch batch = make_training_batch(picks, cfg, rng);
        losses.push_back(training_step(model, batch, rng));
        opt.step(model);
    }

    auto median = [](std::vector<float> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    const std::vector<float> first(losses.begin(), losses.begin() + 20);
    const std::vector<float> last(losses.end() - 20, losses.end());
    CHECK(median(last) < median(first));
}

TEST_CASE("training_step rejects an all-false mask") {
    DecoderConfig cfg = tiny_config();
    Model<float> model(cfg, 1);
    TrainingBatch batch;
    batch.batch = 1;
    batch.frames = 4;
    batch.mel_dim = cfg.mel_dim;
    batch.mel.assign(size_t(4) * cfg.mel_dim, 0.0f);
    batch.token_ids.assign(4, 1);
    batch.mask.assign(4, 0);
    batch.lengths = {4};
    Rng rng(1);
    CHECK_THROWS_AS(training_step(model, batch, rng), ContractError);
}

TEST_CASE("AdamW warmup ramps linearly to the peak rate") {
    AdamW opt(AdamWOptions{2e-4f, 100, 0.9f, 0.999f, 1e-8f, 0.0f});
    CHECK(opt.lr_at(0) == 0.0f);
    CHECK(opt.lr_at(50) == doctest::Approx(1e-4f));
    CHECK(opt.lr_at(100) == doctest::Approx(2e-4f));
    CHECK(opt.lr_at(5000) == doctest::Approx(2e-4f));
}
