#pragma once

#include "ezvc/decoder/config.hpp"
#include "ezvc/decoder/flow.hpp"
#include "ezvc/errors.hpp"
#include "ezvc/rng.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace ezvc::cfm {

// Velocity-field transformer over the per-frame channel concatenation of
// (noisy mel, condition mel, token embedding). The flow time enters through a
// sinusoidal embedding feeding adaptive layer norms (zero-initialized, so a
// fresh model is the identity network and predicts zero velocity). Forward
// and backward are written out by hand; backward is validated against central
// finite differences in the test suite.
//
// Templated on the scalar: training runs in float, gradient checks in double.

template <class S>
struct Param {
    std::string name;
    Mat<S> value;
    Mat<S> grad;

    void setup(std::string n, Eigen::Index rows, Eigen::Index cols) {
        name = std::move(n);
        value = Mat<S>::Zero(rows, cols);
        grad = Mat<S>::Zero(rows, cols);
    }
};

template <class S>
struct BlockParams {
    Param<S> mod_w, mod_b; // D x 6D: shift1|scale1|gate1|shift2|scale2|gate2
    Param<S> wq, bq, wk, bk, wv, bv, wo, bo;
    Param<S> ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

template <class S>
struct BlockTape {
    Mat<S> y1; // LN1 output, pre-modulation
    Eigen::Matrix<S, Eigen::Dynamic, 1> ln1_inv_std;
    Mat<S> y1m;
    Mat<S> q, k, v; // q, k post-rotary
    std::vector<Mat<S>> probs; // per-head softmax, T x T
    Mat<S> att_cat; // heads merged, pre-output-projection
    Mat<S> att_out;
    Mat<S> y2;
    Eigen::Matrix<S, Eigen::Dynamic, 1> ln2_inv_std;
    Mat<S> y2m;
    Mat<S> ffn_pre, ffn_act, ffn_out;
    Mat<S> m6; // 1 x 6D modulation
};

template <class S>
struct Tape {
    std::vector<std::int32_t> tokens;
    Mat<S> x_concat; // T x 3*mel
    Mat<S> h0;
    Mat<S> conv1_pre, conv1_act, conv2_pre;
    Mat<S> t_feat;                       // 1 x D, fixed sinusoid
    Mat<S> mlp_pre, mlp_act, cvec, avec; // 1 x D each
    std::vector<BlockTape<S>> blocks;
    Mat<S> yf;
    Eigen::Matrix<S, Eigen::Dynamic, 1> lnf_inv_std;
    Mat<S> yfm;
    Mat<S> mf; // 1 x 2D
};

namespace detail {

template <class S>
S gelu(S x) {
    return S(0.5) * x * (S(1) + S(std::erf(double(x) / 1.4142135623730951)));
}

template <class S>
S gelu_grad(S x) {
    const double xd = double(x);
    const double cdf = 0.5 * (1.0 + std::erf(xd / 1.4142135623730951));
    const double pdf = std::exp(-0.5 * xd * xd) / 2.5066282746310002; // sqrt(2*pi)
    return S(cdf + xd * pdf);
}

template <class S>
S silu(S x) {
    const double sig = 1.0 / (1.0 + std::exp(-double(x)));
    return S(double(x) * sig);
}

template <class S>
S silu_grad(S x) {
    const double sig = 1.0 / (1.0 + std::exp(-double(x)));
    return S(sig * (1.0 + double(x) * (1.0 - sig)));
}

} // namespace detail

template <class S>
class Model {
public:
    explicit Model(const DecoderConfig& cfg, std::uint64_t init_seed = 0) : cfg_(cfg) {
        cfg.validate();
        const int d = cfg.model_dim;
        const int mel = cfg.mel_dim;
        const int hidden = cfg.ffn_hidden();
        const int cg = d / cfg.conv_groups;

        tok_emb_.setup("tok_emb", cfg.vocab_size, mel);
        in_w_.setup("in_proj.w", 3 * mel, d);
        in_b_.setup("in_proj.b", 1, d);
        conv1_w_.setup("conv_pos.0.w", d, cg * cfg.conv_kernel);
        conv1_b_.setup("conv_pos.0.b", 1, d);
        conv2_w_.setup("conv_pos.1.w", d, cg * cfg.conv_kernel);
        conv2_b_.setup("conv_pos.1.b", 1, d);
        time_w1_.setup("time_mlp.0.w", d, d);
        time_b1_.setup("time_mlp.0.b", 1, d);
        time_w2_.setup("time_mlp.1.w", d, d);
        time_b2_.setup("time_mlp.1.b", 1, d);

        blocks_.resize(size_t(cfg.layers));
        for (int i = 0; i < cfg.layers; ++i) {
            auto& blk = blocks_[size_t(i)];
            const std::string p = "block" + std::to_string(i) + ".";
            blk.mod_w.setup(p + "mod.w", d, 6 * d);
            blk.mod_b.setup(p + "mod.b", 1, 6 * d);
            blk.wq.setup(p + "attn.wq", d, d);
            blk.bq.setup(p + "attn.bq", 1, d);
            blk.wk.setup(p + "attn.wk", d, d);
            blk.bk.setup(p + "attn.bk", 1, d);
            blk.wv.setup(p + "attn.wv", d, d);
            blk.bv.setup(p + "attn.bv", 1, d);
            blk.wo.setup(p + "attn.wo", d, d);
            blk.bo.setup(p + "attn.bo", 1, d);
            blk.ffn_w1.setup(p + "ffn.w1", d, hidden);
            blk.ffn_b1.setup(p + "ffn.b1", 1, hidden);
            blk.ffn_w2.setup(p + "ffn.w2", hidden, d);
            blk.ffn_b2.setup(p + "ffn.b2", 1, d);
        }
        mod_f_w_.setup("final.mod.w", d, 2 * d);
        mod_f_b_.setup("final.mod.b", 1, 2 * d);
        out_w_.setup("final.out.w", d, mel);
        out_b_.setup("final.out.b", 1, mel);

        init_weights(init_seed);
    }

    const DecoderConfig& config() const { return cfg_; }

    std::vector<Param<S>*> params() {
        std::vector<Param<S>*> ps = {&tok_emb_,  &in_w_,    &in_b_,    &conv1_w_,
                                     &conv1_b_,  &conv2_w_, &conv2_b_, &time_w1_,
                                     &time_b1_,  &time_w2_, &time_b2_};
        for (auto& blk : blocks_) {
            for (Param<S>* p : {&blk.mod_w, &blk.mod_b, &blk.wq, &blk.bq, &blk.wk,
                                &blk.bk, &blk.wv, &blk.bv, &blk.wo, &blk.bo,
                                &blk.ffn_w1, &blk.ffn_b1, &blk.ffn_w2, &blk.ffn_b2})
                ps.push_back(p);
        }
        ps.push_back(&mod_f_w_);
        ps.push_back(&mod_f_b_);
        ps.push_back(&out_w_);
        ps.push_back(&out_b_);
        return ps;
    }

    std::vector<const Param<S>*> params() const {
        auto ps = const_cast<Model*>(this)->params();
        return {ps.begin(), ps.end()};
    }

    void zero_grads() {
        for (auto* p : params()) p->grad.setZero();
    }

    std::int64_t param_count() const {
        std::int64_t n = 0;
        for (const auto* p : params()) n += p->value.size();
        return n;
    }

    // Per-frame velocity prediction for one sequence; `tokens` carries one id
    // per frame. Deterministic. Pass a tape to enable backward().
    Mat<S> forward(const Mat<S>& xt, const Mat<S>& cond,
                   const std::vector<std::int32_t>& tokens, S t,
                   Tape<S>* tape = nullptr) const {
        const int frames = int(xt.rows());
        const int mel = cfg_.mel_dim;
        if (frames < 1) throw ContractError("forward: empty sequence");
        if (xt.cols() != mel || cond.cols() != mel)
            throw ContractError("forward: mel channel mismatch");
        if (cond.rows() != frames || std::int64_t(tokens.size()) != frames)
            throw ContractError("forward: stream length mismatch");
        for (const std::int32_t id : tokens)
            if (id < 0 || id >= cfg_.vocab_size)
                throw ContractError("forward: token id out of range");

        Tape<S> local;
        Tape<S>& tp = tape ? *tape : local;
        tp.tokens = tokens;
        tp.blocks.resize(size_t(cfg_.layers));

        // [xt | cond | token embedding]
        tp.x_concat.resize(frames, 3 * mel);
        tp.x_concat.leftCols(mel) = xt;
        tp.x_concat.middleCols(mel, mel) = cond;
        for (int r = 0; r < frames; ++r)
            tp.x_concat.row(r).tail(mel) = tok_emb_.value.row(tokens[size_t(r)]);

        tp.h0.noalias() = tp.x_concat * in_w_.value;
        tp.h0.rowwise() += in_b_.value.row(0);

        // convolutional position mixing, residual
        tp.conv1_pre = grouped_conv(tp.h0, conv1_w_.value, conv1_b_.value);
        tp.conv1_act = tp.conv1_pre.unaryExpr([](S x) { return detail::gelu(x); });
        tp.conv2_pre = grouped_conv(tp.conv1_act, conv2_w_.value, conv2_b_.value);
        Mat<S> h = tp.h0 + tp.conv2_pre.unaryExpr([](S x) { return detail::gelu(x); });

        if (cfg_.position == DecoderConfig::Position::sinusoidal)
            add_abs_positions(h);

        // time conditioning vector
        tp.t_feat = time_features(t);
        tp.mlp_pre.noalias() = tp.t_feat * time_w1_.value;
        tp.mlp_pre += time_b1_.value;
        tp.mlp_act = tp.mlp_pre.unaryExpr([](S x) { return detail::silu(x); });
        tp.cvec.noalias() = tp.mlp_act * time_w2_.value;
        tp.cvec += time_b2_.value;
        tp.avec = tp.cvec.unaryExpr([](S x) { return detail::silu(x); });

        for (int i = 0; i < cfg_.layers; ++i)
            h = block_forward(h, blocks_[size_t(i)], tp.blocks[size_t(i)], tp.avec);

        // final adaLN + projection
        tp.mf.noalias() = tp.avec * mod_f_w_.value;
        tp.mf += mod_f_b_.value;
        layer_norm(h, tp.yf, tp.lnf_inv_std);
        tp.yfm = tp.yf;
        const int d = cfg_.model_dim;
        modulate(tp.yfm, tp.mf.row(0).segment(d, d), tp.mf.row(0).segment(0, d));

        Mat<S> out;
        out.noalias() = tp.yfm * out_w_.value;
        out.rowwise() += out_b_.value.row(0);
        return out;
    }

    // Accumulates parameter gradients for the forward pass recorded in tape.
    void backward(const Tape<S>& tp, const Mat<S>& dout) {
        const int d = cfg_.model_dim;
        const int mel = cfg_.mel_dim;
        const int frames = int(dout.rows());

        out_w_.grad.noalias() += tp.yfm.transpose() * dout;
        out_b_.grad.row(0) += dout.colwise().sum();
        Mat<S> dyfm;
        dyfm.noalias() = dout * out_w_.value.transpose();

        Mat<S> dmf = Mat<S>::Zero(1, 2 * d);
        Mat<S> dyf;
        modulate_backward(dyfm, tp.yf, tp.mf.row(0).segment(d, d), dyf,
                          dmf.row(0).segment(d, d), dmf.row(0).segment(0, d));
        Mat<S> da = Mat<S>::Zero(1, d);
        mod_f_w_.grad.noalias() += tp.avec.transpose() * dmf;
        mod_f_b_.grad += dmf;
        da.noalias() += dmf * mod_f_w_.value.transpose();

        Mat<S> dh;
        layer_norm_backward(dyf, tp.yf, tp.lnf_inv_std, dh);

        for (int i = cfg_.layers - 1; i >= 0; --i)
            block_backward(dh, blocks_[size_t(i)], tp.blocks[size_t(i)], tp.avec, da);

        // time MLP
        Mat<S> dc = da;
        for (int j = 0; j < d; ++j) dc(0, j) *= detail::silu_grad(tp.cvec(0, j));
        time_w2_.grad.noalias() += tp.mlp_act.transpose() * dc;
        time_b2_.grad += dc;
        Mat<S> ds1;
        ds1.noalias() = dc * time_w2_.value.transpose();
        for (int j = 0; j < d; ++j) ds1(0, j) *= detail::silu_grad(tp.mlp_pre(0, j));
        time_w1_.grad.noalias() += tp.t_feat.transpose() * ds1;
        time_b1_.grad += ds1;

        // conv position block; dh holds the grad at h0 + gelu(conv2_pre)
        Mat<S> dconv2_pre = dh;
        for (int r = 0; r < frames; ++r)
            for (int j = 0; j < d; ++j)
                dconv2_pre(r, j) *= detail::gelu_grad(tp.conv2_pre(r, j));
        Mat<S> dconv1_act;
        grouped_conv_backward(tp.conv1_act, dconv2_pre, conv2_w_.value, conv2_w_.grad,
                              conv2_b_.grad, dconv1_act);
        for (int r = 0; r < frames; ++r)
            for (int j = 0; j < d; ++j)
                dconv1_act(r, j) *= detail::gelu_grad(tp.conv1_pre(r, j));
        Mat<S> dh0_conv;
        grouped_conv_backward(tp.h0, dconv1_act, conv1_w_.value, conv1_w_.grad,
                              conv1_b_.grad, dh0_conv);
        Mat<S> dh0 = dh + dh0_conv;

        in_w_.grad.noalias() += tp.x_concat.transpose() * dh0;
        in_b_.grad.row(0) += dh0.colwise().sum();

        // only the token-embedding slice of the input needs a gradient
        Mat<S> de;
        de.noalias() = dh0 * in_w_.value.bottomRows(mel).transpose();
        for (int r = 0; r < frames; ++r)
            tok_emb_.grad.row(tp.tokens[size_t(r)]) += de.row(r);
    }

private:
    void init_weights(std::uint64_t seed) {
        ezvc::Rng rng(seed);
        auto fill = [&rng](Param<S>& p, double scale) {
            for (Eigen::Index i = 0; i < p.value.rows(); ++i)
                for (Eigen::Index j = 0; j < p.value.cols(); ++j)
                    p.value(i, j) = S(rng.normal() * scale);
        };
        const int d = cfg_.model_dim;
        fill(tok_emb_, 0.02);
        fill(in_w_, 1.0 / std::sqrt(double(3 * cfg_.mel_dim)));
        fill(conv1_w_, 1.0 / std::sqrt(double(conv1_w_.value.cols())));
        fill(conv2_w_, 1.0 / std::sqrt(double(conv2_w_.value.cols())));
        fill(time_w1_, 1.0 / std::sqrt(double(d)));
        fill(time_w2_, 1.0 / std::sqrt(double(d)));
        for (auto& blk : blocks_) {
            fill(blk.wq, 1.0 / std::sqrt(double(d)));
            fill(blk.wk, 1.0 / std::sqrt(double(d)));
            fill(blk.wv, 1.0 / std::sqrt(double(d)));
            fill(blk.wo, 1.0 / std::sqrt(double(d)));
            fill(blk.ffn_w1, 1.0 / std::sqrt(double(d)));
            fill(blk.ffn_w2, 1.0 / std::sqrt(double(cfg_.ffn_hidden())));
            // modulation stays zero: blocks start as identity (adaLN-zero)
        }
        // final modulation/projection stay zero: a fresh model predicts zero
        // velocity everywhere.
    }

    // ---- fixed (non-learned) features ----

    Mat<S> time_features(S t) const {
        const int d = cfg_.model_dim;
        const int half = d / 2;
        Mat<S> f(1, d);
        const double scaled = double(t) * 1000.0;
        for (int i = 0; i < half; ++i) {
            const double freq =
                std::exp(-std::log(10000.0) * double(i) / double(std::max(half - 1, 1)));
            f(0, i) = S(std::cos(scaled * freq));
            f(0, half + i) = S(std::sin(scaled * freq));
        }
        return f;
    }

    void add_abs_positions(Mat<S>& h) const {
        const int d = cfg_.model_dim;
        for (int p = 0; p < int(h.rows()); ++p)
            for (int i = 0; i < d / 2; ++i) {
                const double freq = std::pow(10000.0, -2.0 * i / double(d));
                h(p, 2 * i) += S(std::sin(p * freq));
                h(p, 2 * i + 1) += S(std::cos(p * freq));
            }
    }

    // ---- primitive layers ----

    static void layer_norm(const Mat<S>& x, Mat<S>& y,
                           Eigen::Matrix<S, Eigen::Dynamic, 1>& inv_std) {
        const Eigen::Index n = x.cols();
        y.resize(x.rows(), n);
        inv_std.resize(x.rows());
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            const S mean = x.row(r).mean();
            const S var = (x.row(r).array() - mean).square().sum() / S(n);
            const S r_inv = S(1) / std::sqrt(var + S(1e-6));
            inv_std(r) = r_inv;
            y.row(r) = ((x.row(r).array() - mean) * r_inv).matrix();
        }
    }

    static void layer_norm_backward(const Mat<S>& dy, const Mat<S>& y,
                                    const Eigen::Matrix<S, Eigen::Dynamic, 1>& inv_std,
                                    Mat<S>& dx) {
        const Eigen::Index n = y.cols();
        dx.resize(y.rows(), n);
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
            const S mean_dy = dy.row(r).mean();
            const S mean_dy_y = (dy.row(r).array() * y.row(r).array()).sum() / S(n);
            dx.row(r) = (((dy.row(r).array() - mean_dy) - y.row(r).array() * mean_dy_y) *
                         inv_std(r))
                            .matrix();
        }
    }

    // y = y .* (1 + scale) + shift, broadcast over rows
    template <class SegA, class SegB>
    static void modulate(Mat<S>& y, const SegA& scale, const SegB& shift) {
        for (Eigen::Index r = 0; r < y.rows(); ++r)
            y.row(r).array() = y.row(r).array() * (scale.array() + S(1)) + shift.array();
    }

    template <class SegScale, class SegOutA, class SegOutB>
    static void modulate_backward(const Mat<S>& dym, const Mat<S>& y,
                                  const SegScale& scale, Mat<S>& dy, SegOutA dscale,
                                  SegOutB dshift) {
        dy.resize(y.rows(), y.cols());
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
            dy.row(r).array() = dym.row(r).array() * (scale.array() + S(1));
            dscale.array() += dym.row(r).array() * y.row(r).array();
            dshift += dym.row(r);
        }
    }

    // RoPE, interleaved pairs, shared frequencies across heads.
    void apply_rotary(Mat<S>& x, bool inverse) const {
        const int dh = cfg_.head_dim();
        const int pairs = dh / 2;
        for (Eigen::Index p = 0; p < x.rows(); ++p) {
            for (int i = 0; i < pairs; ++i) {
                const double freq = std::pow(10000.0, -2.0 * i / double(dh));
                const double ang = double(p) * freq;
                const S c = S(std::cos(ang));
                const S sn = S(inverse ? -std::sin(ang) : std::sin(ang));
                for (int h = 0; h < cfg_.heads; ++h) {
                    const int base = h * dh + 2 * i;
                    const S a = x(p, base);
                    const S b = x(p, base + 1);
                    x(p, base) = a * c - b * sn;
                    x(p, base + 1) = a * sn + b * c;
                }
            }
        }
    }

    Mat<S> grouped_conv(const Mat<S>& x, const Mat<S>& w, const Mat<S>& b) const {
        const int frames = int(x.rows());
        const int d = cfg_.model_dim;
        const int k = cfg_.conv_kernel;
        const int cg = d / cfg_.conv_groups;
        const int half = k / 2;
        Mat<S> y(frames, d);
        for (int t = 0; t < frames; ++t) {
            for (int o = 0; o < d; ++o) {
                const int gbase = (o / cg) * cg;
                S acc = b(0, o);
                for (int kk = 0; kk < k; ++kk) {
                    const int src = t + kk - half;
                    if (src < 0 || src >= frames) continue; // zero padding
                    const S* xr = x.row(src).data() + gbase;
                    const S* wr = w.row(o).data() + kk * cg;
                    for (int ci = 0; ci < cg; ++ci) acc += xr[ci] * wr[ci];
                }
                y(t, o) = acc;
            }
        }
        return y;
    }

    void grouped_conv_backward(const Mat<S>& x, const Mat<S>& dy, const Mat<S>& w,
                               Mat<S>& dw, Mat<S>& db, Mat<S>& dx) const {
        const int frames = int(x.rows());
        const int d = cfg_.model_dim;
        const int k = cfg_.conv_kernel;
        const int cg = d / cfg_.conv_groups;
        const int half = k / 2;
        dx = Mat<S>::Zero(frames, d);
        for (int t = 0; t < frames; ++t) {
            for (int o = 0; o < d; ++o) {
                const S g = dy(t, o);
                if (g == S(0)) continue;
                db(0, o) += g;
                const int gbase = (o / cg) * cg;
                for (int kk = 0; kk < k; ++kk) {
                    const int src = t + kk - half;
                    if (src < 0 || src >= frames) continue;
                    const S* xr = x.row(src).data() + gbase;
                    const S* wr = w.row(o).data() + kk * cg;
                    S* dwr = dw.row(o).data() + kk * cg;
                    S* dxr = dx.row(src).data() + gbase;
                    for (int ci = 0; ci < cg; ++ci) {
                        dwr[ci] += g * xr[ci];
                        dxr[ci] += g * wr[ci];
                    }
                }
            }
        }
    }

    Mat<S> block_forward(const Mat<S>& h_in, const BlockParams<S>& bp, BlockTape<S>& bt,
                         const Mat<S>& avec) const {
        const int d = cfg_.model_dim;
        const int dh = cfg_.head_dim();
        const int frames = int(h_in.rows());
        const S inv_sqrt = S(1.0 / std::sqrt(double(dh)));

        bt.m6.noalias() = avec * bp.mod_w.value;
        bt.m6 += bp.mod_b.value;
        const auto sh1 = bt.m6.row(0).segment(0, d);
        const auto sc1 = bt.m6.row(0).segment(d, d);
        const auto g1 = bt.m6.row(0).segment(2 * d, d);
        const auto sh2 = bt.m6.row(0).segment(3 * d, d);
        const auto sc2 = bt.m6.row(0).segment(4 * d, d);
        const auto g2 = bt.m6.row(0).segment(5 * d, d);

        layer_norm(h_in, bt.y1, bt.ln1_inv_std);
        bt.y1m = bt.y1;
        modulate(bt.y1m, sc1, sh1);

        bt.q.noalias() = bt.y1m * bp.wq.value;
        bt.q.rowwise() += bp.bq.value.row(0);
        bt.k.noalias() = bt.y1m * bp.wk.value;
        bt.k.rowwise() += bp.bk.value.row(0);
        bt.v.noalias() = bt.y1m * bp.wv.value;
        bt.v.rowwise() += bp.bv.value.row(0);
        if (cfg_.position == DecoderConfig::Position::rotary) {
            apply_rotary(bt.q, false);
            apply_rotary(bt.k, false);
        }

        bt.probs.assign(size_t(cfg_.heads), Mat<S>());
        bt.att_cat.resize(frames, d);
        for (int h = 0; h < cfg_.heads; ++h) {
            const auto qh = bt.q.middleCols(h * dh, dh);
            const auto kh = bt.k.middleCols(h * dh, dh);
            const auto vh = bt.v.middleCols(h * dh, dh);
            Mat<S> scores;
            scores.noalias() = qh * kh.transpose();
            scores *= inv_sqrt;
            Mat<S>& p = bt.probs[size_t(h)];
            p.resize(frames, frames);
            for (int r = 0; r < frames; ++r) {
                const S mx = scores.row(r).maxCoeff();
                p.row(r) = (scores.row(r).array() - mx).exp().matrix();
                p.row(r) /= p.row(r).sum();
            }
            bt.att_cat.middleCols(h * dh, dh).noalias() = p * vh;
        }
        bt.att_out.noalias() = bt.att_cat * bp.wo.value;
        bt.att_out.rowwise() += bp.bo.value.row(0);

        Mat<S> h_mid = h_in;
        for (int r = 0; r < frames; ++r)
            h_mid.row(r).array() += g1.array() * bt.att_out.row(r).array();

        layer_norm(h_mid, bt.y2, bt.ln2_inv_std);
        bt.y2m = bt.y2;
        modulate(bt.y2m, sc2, sh2);

        bt.ffn_pre.noalias() = bt.y2m * bp.ffn_w1.value;
        bt.ffn_pre.rowwise() += bp.ffn_b1.value.row(0);
        bt.ffn_act = bt.ffn_pre.unaryExpr([](S x) { return detail::gelu(x); });
        bt.ffn_out.noalias() = bt.ffn_act * bp.ffn_w2.value;
        bt.ffn_out.rowwise() += bp.ffn_b2.value.row(0);

        for (int r = 0; r < frames; ++r)
            h_mid.row(r).array() += g2.array() * bt.ffn_out.row(r).array();
        return h_mid;
    }

    // On entry dh = dL/d(block output); on exit dh = dL/d(block input).
    void block_backward(Mat<S>& dh, BlockParams<S>& bp, const BlockTape<S>& bt,
                        const Mat<S>& avec, Mat<S>& da) {
        const int d = cfg_.model_dim;
        const int dh_dim = cfg_.head_dim();
        const int frames = int(dh.rows());
        const S inv_sqrt = S(1.0 / std::sqrt(double(dh_dim)));

        const auto sc1 = bt.m6.row(0).segment(d, d);
        const auto g1 = bt.m6.row(0).segment(2 * d, d);
        const auto sc2 = bt.m6.row(0).segment(4 * d, d);
        const auto g2 = bt.m6.row(0).segment(5 * d, d);
        Mat<S> dm6 = Mat<S>::Zero(1, 6 * d);

        // h_out = h_mid + g2 .* ffn_out
        Mat<S> dffn_out(frames, d);
        for (int r = 0; r < frames; ++r) {
            dffn_out.row(r).array() = dh.row(r).array() * g2.array();
            dm6.row(0).segment(5 * d, d).array() +=
                dh.row(r).array() * bt.ffn_out.row(r).array();
        }

        bp.ffn_w2.grad.noalias() += bt.ffn_act.transpose() * dffn_out;
        bp.ffn_b2.grad.row(0) += dffn_out.colwise().sum();
        Mat<S> dffn_act;
        dffn_act.noalias() = dffn_out * bp.ffn_w2.value.transpose();
        const int hidden = cfg_.ffn_hidden();
        for (int r = 0; r < frames; ++r)
            for (int j = 0; j < hidden; ++j)
                dffn_act(r, j) *= detail::gelu_grad(bt.ffn_pre(r, j));
        bp.ffn_w1.grad.noalias() += bt.y2m.transpose() * dffn_act;
        bp.ffn_b1.grad.row(0) += dffn_act.colwise().sum();
        Mat<S> dy2m;
        dy2m.noalias() = dffn_act * bp.ffn_w1.value.transpose();

        Mat<S> dy2;
        modulate_backward(dy2m, bt.y2, sc2, dy2, dm6.row(0).segment(4 * d, d),
                          dm6.row(0).segment(3 * d, d));
        Mat<S> dh_mid_ln;
        layer_norm_backward(dy2, bt.y2, bt.ln2_inv_std, dh_mid_ln);
        dh += dh_mid_ln; // dh now holds dL/dh_mid

        // h_mid = h_in + g1 .* att_out
        Mat<S> datt_out(frames, d);
        for (int r = 0; r < frames; ++r) {
            datt_out.row(r).array() = dh.row(r).array() * g1.array();
            dm6.row(0).segment(2 * d, d).array() +=
                dh.row(r).array() * bt.att_out.row(r).array();
        }

        bp.wo.grad.noalias() += bt.att_cat.transpose() * datt_out;
        bp.bo.grad.row(0) += datt_out.colwise().sum();
        Mat<S> datt_cat;
        datt_cat.noalias() = datt_out * bp.wo.value.transpose();

        Mat<S> dq(frames, d), dk(frames, d), dv(frames, d);
        for (int h = 0; h < cfg_.heads; ++h) {
            const auto qh = bt.q.middleCols(h * dh_dim, dh_dim);
            const auto kh = bt.k.middleCols(h * dh_dim, dh_dim);
            const auto vh = bt.v.middleCols(h * dh_dim, dh_dim);
            const Mat<S>& p = bt.probs[size_t(h)];
            const auto doh = datt_cat.middleCols(h * dh_dim, dh_dim);

            Mat<S> dp;
            dp.noalias() = doh * vh.transpose();
            dv.middleCols(h * dh_dim, dh_dim).noalias() = p.transpose() * doh;

            Mat<S> ds(frames, frames);
            for (int r = 0; r < frames; ++r) {
                const S dot = dp.row(r).cwiseProduct(p.row(r)).sum();
                ds.row(r) = (p.row(r).array() * (dp.row(r).array() - dot)).matrix();
            }
            dq.middleCols(h * dh_dim, dh_dim).noalias() = ds * kh * inv_sqrt;
            dk.middleCols(h * dh_dim, dh_dim).noalias() = ds.transpose() * qh * inv_sqrt;
        }
        if (cfg_.position == DecoderConfig::Position::rotary) {
            apply_rotary(dq, true);
            apply_rotary(dk, true);
        }

        bp.wq.grad.noalias() += bt.y1m.transpose() * dq;
        bp.bq.grad.row(0) += dq.colwise().sum();
        bp.wk.grad.noalias() += bt.y1m.transpose() * dk;
        bp.bk.grad.row(0) += dk.colwise().sum();
        bp.wv.grad.noalias() += bt.y1m.transpose() * dv;
        bp.bv.grad.row(0) += dv.colwise().sum();

        Mat<S> dy1m;
        dy1m.noalias() = dq * bp.wq.value.transpose();
        dy1m.noalias() += dk * bp.wk.value.transpose();
        dy1m.noalias() += dv * bp.wv.value.transpose();

        Mat<S> dy1;
        modulate_backward(dy1m, bt.y1, sc1, dy1, dm6.row(0).segment(d, d),
                          dm6.row(0).segment(0, d));
        Mat<S> dh_in_ln;
        layer_norm_backward(dy1, bt.y1, bt.ln1_inv_std, dh_in_ln);
        dh += dh_in_ln; // dh now holds dL/dh_in

        bp.mod_w.grad.noalias() += avec.transpose() * dm6;
        bp.mod_b.grad += dm6;
        da.noalias() += dm6 * bp.mod_w.value.transpose();
    }

    DecoderConfig cfg_;
    Param<S> tok_emb_;
    Param<S> in_w_, in_b_;
    Param<S> conv1_w_, conv1_b_, conv2_w_, conv2_b_;
    Param<S> time_w1_, time_b1_, time_w2_, time_b2_;
    std::vector<BlockParams<S>> blocks_;
    Param<S> mod_f_w_, mod_f_b_;
    Param<S> out_w_, out_b_;
};

// Batched forward: items are independent sequences, so permuting the batch
// permutes the outputs identically.
template <class S>
std::vector<Mat<S>> forward_batch(const Model<S>& model, const std::vector<Mat<S>>& xt,
                                  const std::vector<Mat<S>>& cond,
                                  const std::vector<std::vector<std::int32_t>>& tokens,
                                  const std::vector<S>& t) {
    if (xt.size() != cond.size() || xt.size() != tokens.size() || xt.size() != t.size())
        throw ContractError("forward_batch: batch size mismatch");
    std::vector<Mat<S>> out;
    out.reserve(xt.size());
    for (size_t i = 0; i < xt.size(); ++i)
        out.push_back(model.forward(xt[i], cond[i], tokens[i], t[i]));
    return out;
}

} // namespace ezvc::cfm
