#pragma once

#include <complex>
#include <vector>

namespace ezvc {

// In-place radix-2 FFT; size must be a power of two. The inverse transform
// includes the 1/N factor.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

} // namespace ezvc
