#include "ezvc/synth.hpp"

#include "ezvc/errors.hpp"
#include "ezvc/rng.hpp"

#include <cmath>

namespace ezvc::synth {

namespace {
constexpr double kPi = 3.14159265358979323846;

double formant_gain(double f, const PhoneSpec& phone, const VoiceSpec& voice) {
    auto bump = [](double f, double center, double bw) {
        const double d = (f - center) / bw;
        return std::exp(-0.5 * d * d);
    };
    const double tilt = std::pow(10.0, voice.tilt_db_per_khz * (f / 1000.0) / 20.0);
    const double env = 0.05 + bump(f, phone.f1_hz, 140.0) +
                       0.7 * bump(f, phone.f2_hz, 180.0) +
                       0.25 * bump(f, voice.resonance_hz, 300.0);
    return tilt * env;
}
} // namespace

const std::vector<PhoneSpec>& phone_alphabet() {
    static const std::vector<PhoneSpec> phones = {
        {310.0, 900.0},  {360.0, 1250.0}, {450.0, 1520.0}, {560.0, 1850.0},
        {660.0, 1120.0}, {720.0, 2150.0}, {420.0, 2420.0}, {610.0, 980.0},
    };
    return phones;
}

VoiceSpec voice_for_speaker(int speaker_id) {
    VoiceSpec v;
    v.f0_hz = 92.0 + 14.0 * speaker_id;
    v.tilt_db_per_khz = -7.0 + 0.9 * (speaker_id % 7);
    v.resonance_hz = 2400.0 + 130.0 * (speaker_id % 5);
    return v;
}

Waveform make_utterance(const VoiceSpec& voice, const std::vector<int>& phones,
                        double segment_seconds, int sample_rate) {
    if (phones.empty()) throw ContractError("make_utterance: no phones given");
    const auto& alphabet = phone_alphabet();
    const int seg_len = int(segment_seconds * sample_rate);
    const int edge = sample_rate / 200; // 5 ms

    Waveform w;
    w.sample_rate = sample_rate;
    w.samples.resize(size_t(seg_len) * phones.size());

    const double nyquist_guard = 7200.0;
    size_t pos = 0;
    for (int p : phones) {
        const PhoneSpec& phone = alphabet[size_t(p) % alphabet.size()];
        const int harmonics = int(nyquist_guard / voice.f0_hz);
        // precompute per-harmonic gains
        std::vector<double> gain(size_t(harmonics) + 1, 0.0);
        double peak = 0.0;
        for (int h = 1; h <= harmonics; ++h) {
            gain[size_t(h)] = formant_gain(h * voice.f0_hz, phone, voice);
            peak += gain[size_t(h)];
        }
        const double scale = 0.30 / std::max(peak, 1e-9);

        for (int i = 0; i < seg_len; ++i) {
            const double t = double(i) / sample_rate;
            // mild vibrato keeps frames from being exactly periodic
            const double f0 = voice.f0_hz * (1.0 + 0.012 * std::sin(2.0 * kPi * 5.0 * t));
            double s = 0.0;
            for (int h = 1; h <= harmonics; ++h)
                s += gain[size_t(h)] * std::sin(2.0 * kPi * h * f0 * t + 0.7 * h);
            double env = 1.0;
            if (i < edge) env = 0.5 * (1.0 - std::cos(kPi * i / edge));
            if (i >= seg_len - edge)
                env = 0.5 * (1.0 - std::cos(kPi * (seg_len - 1 - i) / edge));
            w.samples[pos + size_t(i)] = float(scale * env * s);
        }
        pos += size_t(seg_len);
    }
    return w;
}

Waveform sine(double freq_hz, double seconds, int sample_rate, double amplitude) {
    Waveform w;
    w.sample_rate = sample_rate;
    const int n = int(seconds * sample_rate);
    w.samples.resize(size_t(n));
    for (int i = 0; i < n; ++i)
        w.samples[size_t(i)] =
            float(amplitude * std::sin(2.0 * kPi * freq_hz * i / sample_rate));
    return w;
}

Waveform white_noise(double seconds, int sample_rate, std::uint64_t seed,
                     double amplitude) {
    Rng rng(seed);
    Waveform w;
    w.sample_rate = sample_rate;
    const int n = int(seconds * sample_rate);
    w.samples.resize(size_t(n));
    for (int i = 0; i < n; ++i)
        w.samples[size_t(i)] = float(amplitude * (2.0 * rng.uniform() - 1.0));
    return w;
}

std::vector<Waveform> desk_utterances(int count, int segments,
                                      double segment_seconds, int sample_rate) {
    std::vector<Waveform> out;
    out.reserve(size_t(count));
    const int n_phones = int(phone_alphabet().size());
    for (int u = 0; u < count; ++u) {
        Rng rng(0xDE5C0000u + std::uint64_t(u));
        std::vector<int> phones(static_cast<size_t>(segments));
        phones[0] = u % n_phones; // every utterance opens differently
        for (int s = 1; s < segments; ++s) {
            int p = int(rng.uniform_int(0, n_phones - 1));
            if (p == phones[size_t(s) - 1]) p = (p + 1) % n_phones; // force segment change
            phones[size_t(s)] = p;
        }
        out.push_back(make_utterance(voice_for_speaker(u), phones, segment_seconds,
                                     sample_rate));
    }
    return out;
}

} // namespace ezvc::synth
