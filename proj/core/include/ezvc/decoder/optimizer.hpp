#pragma once

#include "ezvc/decoder/model.hpp"

#include <cstdint>
#include <vector>

namespace ezvc::cfm {

struct AdamWOptions {
    float lr = 1e-4f; // peak learning rate
    int warmup_steps = 500;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
    float weight_decay = 0.0f;
};

// Adam with decoupled weight decay and linear warmup to the peak rate.
class AdamW {
public:
    explicit AdamW(const AdamWOptions& opts = {}) : opts_(opts) {}

    const AdamWOptions& options() const { return opts_; }
    std::int64_t step_count() const { return step_; }

    float lr_at(std::int64_t step) const {
        if (opts_.warmup_steps <= 0) return opts_.lr;
        if (step >= opts_.warmup_steps) return opts_.lr;
        return opts_.lr * float(step) / float(opts_.warmup_steps);
    }

    void step(Model<float>& model) {
        auto params = model.params();
        if (m_.empty()) {
            m_.reserve(params.size());
            v_.reserve(params.size());
            for (auto* p : params) {
                m_.push_back(MatF::Zero(p->value.rows(), p->value.cols()));
                v_.push_back(MatF::Zero(p->value.rows(), p->value.cols()));
            }
        }
        if (m_.size() != params.size())
            throw ContractError("AdamW: optimizer state does not match model");

        ++step_;
        const float lr = lr_at(step_);
        const float bc1 = 1.0f - std::pow(opts_.beta1, float(step_));
        const float bc2 = 1.0f - std::pow(opts_.beta2, float(step_));

        for (size_t i = 0; i < params.size(); ++i) {
            auto& p = *params[i];
            m_[i] = opts_.beta1 * m_[i] + (1.0f - opts_.beta1) * p.grad;
            v_[i] = opts_.beta2 * v_[i].array() +
                    (1.0f - opts_.beta2) * p.grad.array().square();
            const auto m_hat = m_[i].array() / bc1;
            const auto v_hat = v_[i].array() / bc2;
            p.value.array() -= lr * (m_hat / (v_hat.sqrt() + opts_.eps) +
                                     opts_.weight_decay * p.value.array());
        }
    }

    // Checkpoint access.
    std::vector<MatF>& moment1() { return m_; }
    std::vector<MatF>& moment2() { return v_; }
    const std::vector<MatF>& moment1() const { return m_; }
    const std::vector<MatF>& moment2() const { return v_; }
    void restore(std::vector<MatF> m, std::vector<MatF> v, std::int64_t step) {
        m_ = std::move(m);
        v_ = std::move(v);
        step_ = step;
    }

private:
    AdamWOptions opts_;
    std::int64_t step_ = 0;
    std::vector<MatF> m_, v_;
};

} // namespace ezvc::cfm
