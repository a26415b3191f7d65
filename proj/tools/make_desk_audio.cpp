// Regenerates the bundled desk-scale utterance set (deterministic synthetic
// speech-like audio, one voice per utterance).

#include "ezvc/synth.hpp"
#include "ezvc/wav.hpp"

#include <cstdio>
#include <filesystem>
#include <string>

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: %s <output-dir>\n", argv[0]);
        return 2;
    }
    const std::filesystem::path out = argv[1];
    std::filesystem::create_directories(out);

    const auto waves = ezvc::synth::desk_utterances();
    for (size_t i = 0; i < waves.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "u%02zu.wav", i);
        ezvc::save_waveform((out / name).string(), waves[i]);
        std::printf("%s  %.2fs\n", (out / name).c_str(), waves[i].duration());
    }
    return 0;
}
