#pragma once

#include "ezvc/decoder/config.hpp"
#include "ezvc/errors.hpp"
#include "ezvc/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace ezvc::cfm {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MatF = Mat<float>;

// One point on the optimal-transport interpolation path.
template <class S>
struct FlowPoint {
    Mat<S> x0;       // noise
    Mat<S> x1;       // data
    S t;             // position in [0, 1]
    Mat<S> xt;       // (1-t)*x0 + t*x1
    Mat<S> v_target; // x1 - x0
};

template <class S>
FlowPoint<S> ot_path(const Mat<S>& x0, const Mat<S>& x1, S t) {
    if (x0.rows() != x1.rows() || x0.cols() != x1.cols())
        throw ContractError("ot_path: shape mismatch");
    if (!(t >= S(0) && t <= S(1))) throw ContractError("ot_path: t must be in [0, 1]");
    FlowPoint<S> p;
    p.x0 = x0;
    p.x1 = x1;
    p.t = t;
    p.xt = (S(1) - t) * x0 + t * x1;
    p.v_target = x1 - x0;
    return p;
}

// One contiguous span of length round(f*T), f ~ U[frac_lo, frac_hi], start
// uniform over valid positions; length clamped to [1, T].
std::vector<std::uint8_t> sample_mask(int frames, double frac_lo, double frac_hi,
                                      ezvc::Rng& rng);

// Per-frame mask applied to every channel; returns sum of squared errors over
// masked cells and the cell count.
template <class S>
S masked_sq_error(const Mat<S>& pred, const Mat<S>& target,
                  const std::vector<std::uint8_t>& mask, std::int64_t* cells) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw ContractError("masked_sq_error: shape mismatch");
    if (std::int64_t(mask.size()) != pred.rows())
        throw ContractError("masked_sq_error: mask length mismatch");
    S sse = S(0);
    std::int64_t n = 0;
    for (Eigen::Index r = 0; r < pred.rows(); ++r) {
        if (!mask[size_t(r)]) continue;
        sse += (pred.row(r) - target.row(r)).squaredNorm();
        n += pred.cols();
    }
    if (cells) *cells = n;
    return sse;
}

// Padded batch for decoder training. Rows past an item's length carry PAD
// tokens, zero mel and false mask.
struct TrainingBatch {
    int batch = 0;
    int frames = 0;
    int mel_dim = 80;
    std::vector<float> mel;             // batch * frames * mel_dim
    std::vector<std::int32_t> token_ids; // batch * frames
    std::vector<std::uint8_t> mask;      // batch * frames
    std::vector<std::int32_t> lengths;   // batch

    const float* mel_row(int b, int t) const {
        return mel.data() + (size_t(b) * frames + t) * mel_dim;
    }
    float* mel_row(int b, int t) {
        return mel.data() + (size_t(b) * frames + t) * mel_dim;
    }
    const std::int32_t* tokens_for(int b) const {
        return token_ids.data() + size_t(b) * frames;
    }
    const std::uint8_t* mask_for(int b) const { return mask.data() + size_t(b) * frames; }

    // Throws ContractError on any shape/invariant violation: sizes, lengths,
    // token range, mask contiguity, empty masks, padding discipline.
    void validate(const DecoderConfig& cfg) const;
};

} // namespace ezvc::cfm
