#pragma once

#include "ezvc/types.hpp"

namespace ezvc {

// Band-limited sample-rate conversion (Kaiser-windowed sinc interpolation).
// Identical rates return the input bitwise; duration is preserved within one
// sample period of the target rate.
Waveform resample(const Waveform& w, int target_sr);

} // namespace ezvc
