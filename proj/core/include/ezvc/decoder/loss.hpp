#pragma once

#include "ezvc/decoder/model.hpp"

#include <cstdint>
#include <vector>

namespace ezvc::cfm {

// One training item with every stochastic choice (t, noise, mask, cond-drop)
// already made. training_step builds these from a batch; gradient tests build
// them directly so the loss is a deterministic function of the parameters.
template <class S>
struct FlowItem {
    Mat<S> xt;
    Mat<S> v_target;
    Mat<S> cond;
    std::vector<std::int32_t> tokens;
    std::vector<std::uint8_t> mask; // per frame; loss covers masked rows only
    S t{};
};

// Sum of squared velocity errors over masked cells (forward only).
template <class S>
S flow_item_sse(const Model<S>& model, const FlowItem<S>& item,
                std::int64_t* cells = nullptr) {
    const Mat<S> pred = model.forward(item.xt, item.cond, item.tokens, item.t);
    return masked_sq_error(pred, item.v_target, item.mask, cells);
}

// Forward + backward; accumulates dL/dparams for L = grad_scale * SSE.
template <class S>
S flow_item_sse_grad(Model<S>& model, const FlowItem<S>& item, S grad_scale,
                     std::int64_t* cells = nullptr) {
    Tape<S> tape;
    const Mat<S> pred = model.forward(item.xt, item.cond, item.tokens, item.t, &tape);
    const S sse = masked_sq_error(pred, item.v_target, item.mask, cells);

    Mat<S> dout = Mat<S>::Zero(pred.rows(), pred.cols());
    for (Eigen::Index r = 0; r < pred.rows(); ++r)
        if (item.mask[size_t(r)])
            dout.row(r) = S(2) * grad_scale * (pred.row(r) - item.v_target.row(r));
    model.backward(tape, dout);
    return sse;
}

} // namespace ezvc::cfm
