#pragma once

#include "ezvc/types.hpp"

#include <cstdint>
#include <vector>

namespace ezvc::synth {

// Deterministic speech-like test signals: harmonic source with a per-speaker
// pitch/tilt and per-segment formant pair. Used for desk-scale fixtures; no
// recorded audio is bundled.

struct VoiceSpec {
    double f0_hz = 120.0;
    double tilt_db_per_khz = -4.0;
    double resonance_hz = 2600.0; // fixed speaker-specific bump
};

// Distinct vowel-like (F1, F2) pairs.
struct PhoneSpec {
    double f1_hz;
    double f2_hz;
};

const std::vector<PhoneSpec>& phone_alphabet(); // 8 entries

VoiceSpec voice_for_speaker(int speaker_id);

// Concatenated held "phones", 5 ms raised-cosine edges per segment.
Waveform make_utterance(const VoiceSpec& voice, const std::vector<int>& phones,
                        double segment_seconds = 0.2, int sample_rate = 16000);

Waveform sine(double freq_hz, double seconds, int sample_rate, double amplitude = 0.5);

Waveform white_noise(double seconds, int sample_rate, std::uint64_t seed,
                     double amplitude = 0.3);

// The bundled 10-utterance desk set: speaker i speaking a per-utterance
// phone pattern, ~1.6 s each.
std::vector<Waveform> desk_utterances(int count = 10, int segments = 8,
                                      double segment_seconds = 0.2,
                                      int sample_rate = 16000);

} // namespace ezvc::synth
