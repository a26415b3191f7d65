#pragma once

#include "ezvc/types.hpp"

#include <string>

namespace ezvc {

// Reads a PCM WAV file (8/16/24-bit int or 32-bit float). Multi-channel
// input is mixed down by channel mean; amplitudes are scaled to [-1, 1].
// The original sample rate is kept; resampling is a separate step.
Waveform load_waveform(const std::string& path);

// Writes mono 16-bit PCM.
void save_waveform(const std::string& path, const Waveform& w);

} // namespace ezvc
