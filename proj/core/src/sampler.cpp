#include "ezvc/decoder/sampler.hpp"

#include <cmath>

namespace ezvc::cfm {

std::vector<double> sway_schedule(int steps, double sway_s) {
    if (steps < 1) throw ContractError("sway_schedule: steps must be >= 1");
    std::vector<double> times(size_t(steps) + 1);
    for (int i = 0; i <= steps; ++i) {
        const double t = double(i) / double(steps);
        times[size_t(i)] =
            t + sway_s * (std::cos(3.14159265358979323846 * t / 2.0) - 1.0 + t);
    }
    return times;
}

MatF integrate_euler(const VelocityFn& velocity, MatF x,
                     const std::vector<double>& times, const MatF& cond,
                     int prompt_frames) {
    if (times.size() < 2) throw ContractError("integrate_euler: need at least one step");
    if (prompt_frames < 0 || prompt_frames > x.rows())
        throw ContractError("integrate_euler: prompt_frames out of range");
    if (prompt_frames > 0 && (cond.rows() != x.rows() || cond.cols() != x.cols()))
        throw ContractError("integrate_euler: cond shape mismatch");

    for (size_t i = 0; i + 1 < times.size(); ++i) {
        const float dt = float(times[i + 1] - times[i]);
        const MatF v = velocity(x, times[i]);
        x += dt * v;
        if (prompt_frames > 0)
            x.topRows(prompt_frames) = cond.topRows(prompt_frames);
    }
    return x;
}

MatF sample(const Model<float>& model, const MatF& cond_mel,
            const std::vector<std::int32_t>& token_ids, int total_frames,
            int prompt_frames, const SamplerOptions& opts, ezvc::Rng& rng) {
    const auto& cfg = model.config();
    if (opts.steps < 1) throw ContractError("sample: steps must be >= 1");
    if (total_frames < 1) throw ContractError("sample: total_frames must be >= 1");
    if (std::int64_t(token_ids.size()) != total_frames)
        throw ContractError("sample: token_ids length must equal total_frames");
    if (cond_mel.rows() != total_frames || cond_mel.cols() != cfg.mel_dim)
        throw ContractError("sample: cond_mel shape mismatch");
    if (prompt_frames < 0 || prompt_frames > total_frames)
        throw ContractError("sample: prompt_frames out of range");

    MatF x(total_frames, cfg.mel_dim);
    for (int r = 0; r < total_frames; ++r)
        for (int c = 0; c < cfg.mel_dim; ++c) x(r, c) = rng.normal_f();

    const MatF zero_cond = MatF::Zero(total_frames, cfg.mel_dim);
    const std::vector<std::int32_t> filler_tokens(size_t(total_frames), cfg.filler_id());

    const VelocityFn velocity = [&](const MatF& xt, double t) {
        const MatF v_cond = model.forward(xt, cond_mel, token_ids, float(t));
        if (opts.guidance_w > 0.0f) {
            const MatF v_uncond = model.forward(xt, zero_cond, filler_tokens, float(t));
            return MatF(v_uncond + opts.guidance_w * (v_cond - v_uncond));
        }
        return v_cond;
    };

    return integrate_euler(velocity, std::move(x), sway_schedule(opts.steps, opts.sway_s),
                           cond_mel, prompt_frames);
}

} // namespace ezvc::cfm
