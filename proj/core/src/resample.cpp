#include "ezvc/resample.hpp"

#include "ezvc/errors.hpp"

#include <cmath>
#include <vector>

namespace ezvc {

namespace {

// Zeroth-order modified Bessel function, power series.
double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    const double half_x = x / 2.0;
    for (int k = 1; k < 64; ++k) {
        term *= (half_x / k) * (half_x / k);
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = 3.14159265358979323846 * x;
    return std::sin(px) / px;
}

} // namespace

Waveform resample(const Waveform& w, int target_sr) {
    if (target_sr <= 0) throw ContractError("resample: target_sr must be > 0");
    if (w.sample_rate <= 0) throw ContractError("resample: input sample_rate must be > 0");
    if (w.sample_rate == target_sr) return w;

    const std::int64_t n_in = std::int64_t(w.samples.size());
    // round(n * target / src), half up
    const std::int64_t n_out =
        (n_in * std::int64_t(target_sr) + w.sample_rate / 2) / w.sample_rate;

    Waveform out;
    out.sample_rate = target_sr;
    out.samples.resize(size_t(n_out));
    if (n_in == 0) return out;

    const double ratio = double(target_sr) / double(w.sample_rate);
    const double cutoff = std::min(1.0, ratio) * 0.97; // anti-alias margin
    const int zeros = 24;                              // sinc zero crossings per side
    const double radius = zeros / std::min(1.0, ratio);
    const double kaiser_beta = 10.0;
    const double inv_i0_beta = 1.0 / bessel_i0(kaiser_beta);

    for (std::int64_t m = 0; m < n_out; ++m) {
        const double t = double(m) / ratio; // position in input samples
        const std::int64_t lo = std::int64_t(std::ceil(t - radius));
        const std::int64_t hi = std::int64_t(std::floor(t + radius));
        double acc = 0.0;
        for (std::int64_t k = lo; k <= hi; ++k) {
            if (k < 0 || k >= n_in) continue;
            const double d = t - double(k);
            const double u = d / radius;
            const double win = bessel_i0(kaiser_beta * std::sqrt(std::max(0.0, 1.0 - u * u))) *
                               inv_i0_beta;
            acc += double(w.samples[size_t(k)]) * cutoff * sinc(cutoff * d) * win;
        }
        out.samples[size_t(m)] = float(acc);
    }
    return out;
}

} // namespace ezvc
