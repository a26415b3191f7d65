#pragma once

#include "ezvc/decoder/model.hpp"
#include "ezvc/rng.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace ezvc::cfm {

struct SamplerOptions {
    int steps = 32;
    float guidance_w = 2.0f; // 0 disables classifier-free guidance
    float sway_s = -1.0f;    // 0 gives a uniform schedule
};

// steps+1 warped times: t' = t + s*(cos(pi*t/2) - 1 + t) over the uniform
// grid t = i/steps.
std::vector<double> sway_schedule(int steps, double sway_s);

using VelocityFn = std::function<MatF(const MatF& x, double t)>;

// Plain Euler over the given time grid. After every step the leading
// prompt_frames rows are overwritten with cond; pass 0 to integrate freely.
MatF integrate_euler(const VelocityFn& velocity, MatF x,
                     const std::vector<double>& times, const MatF& cond,
                     int prompt_frames);

// Full sampling recipe: x0 ~ N(0, I) from rng, guided velocity
// v_uncond + w*(v_cond - v_uncond) (v_cond alone when w == 0), Euler over the
// sway schedule, prompt rows pinned to cond_mel after every step.
MatF sample(const Model<float>& model, const MatF& cond_mel,
            const std::vector<std::int32_t>& token_ids, int total_frames,
            int prompt_frames, const SamplerOptions& opts, ezvc::Rng& rng);

} // namespace ezvc::cfm
