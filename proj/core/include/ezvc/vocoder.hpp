#pragma once

#include "ezvc/mel.hpp"
#include "ezvc/types.hpp"

namespace ezvc {

// Reference mel-to-waveform path: exponentiate the log-mel, invert the
// filterbank with a regularized pseudo-inverse, run iterative phase retrieval
// (zero phase init), inverse STFT. Deterministic; output peak-limited to
// [-1, 1]. The external kind shells out to "<cmd> <mel-file> <out-wav>".
Waveform mel_to_waveform(const MelSpectrogram& mel, const VocoderSpec& spec,
                         const MelConfig& cfg = {});

} // namespace ezvc
