#include "ezvc/config.hpp"

#include "ezvc/errors.hpp"

#include <json.hpp>

#include <fstream>

namespace ezvc {

namespace {

using nlohmann::json;

// Applies `src` onto the struct via the given per-key setters, rejecting
// anything unrecognized.
struct StrictSection {
    const json& src;
    const std::string& name;
    std::vector<std::string> seen;

    template <class T>
    void key(const char* k, T& field) {
        seen.push_back(k);
        if (!src.contains(k)) return;
        try {
            field = src.at(k).get<T>();
        } catch (const json::exception&) {
            throw ContractError("config: key " + name + "." + k + " has the wrong type");
        }
    }

    void finish() const {
        for (auto it = src.begin(); it != src.end(); ++it) {
            bool known = false;
            for (const auto& s : seen)
                if (s == it.key()) {
                    known = true;
                    break;
                }
            if (!known)
                throw ContractError("config: unknown key " + name + "." + it.key());
        }
    }
};

void apply_overrides(RunConfig& cfg, const json& root, const std::string& path) {
    const std::vector<std::string> known_sections = {"preset",  "audio",   "encoder",
                                                     "kmeans",  "decoder", "sampler",
                                                     "vocoder", "training"};
    for (auto it = root.begin(); it != root.end(); ++it) {
        bool known = false;
        for (const auto& s : known_sections)
            if (s == it.key()) {
                known = true;
                break;
            }
        if (!known) throw ContractError("config: unknown section '" + it.key() + "' in " + path);
        if (it.key() != "preset" && !it.value().is_object())
            throw ContractError("config: section '" + it.key() + "' must be an object");
    }

    if (root.contains("audio")) {
        StrictSection s{root.at("audio"), "audio", {}};
        s.key("sample_rate", cfg.audio.sample_rate);
        s.key("mel_channels", cfg.audio.mel_channels);
        s.key("hop", cfg.audio.hop);
        s.key("win_length", cfg.audio.win_length);
        s.key("fft_size", cfg.audio.fft_size);
        s.key("fmin", cfg.audio.fmin);
        s.key("fmax", cfg.audio.fmax);
        s.key("log_floor", cfg.audio.log_floor);
        s.finish();
    }
    if (root.contains("encoder")) {
        StrictSection s{root.at("encoder"), "encoder", {}};
        s.key("kind", cfg.encoder.kind);
        s.key("layer_index", cfg.encoder.layer_index);
        s.key("dim", cfg.encoder.dim);
        s.finish();
    }
    if (root.contains("kmeans")) {
        StrictSection s{root.at("kmeans"), "kmeans", {}};
        s.key("k", cfg.kmeans.k);
        s.key("max_iters", cfg.kmeans.max_iters);
        s.key("rel_tol", cfg.kmeans.rel_tol);
        s.key("subsample_every", cfg.kmeans.subsample_every);
        s.finish();
    }
    if (root.contains("decoder")) {
        StrictSection s{root.at("decoder"), "decoder", {}};
        s.key("layers", cfg.decoder.layers);
        s.key("heads", cfg.decoder.heads);
        s.key("model_dim", cfg.decoder.model_dim);
        s.key("ffn_mult", cfg.decoder.ffn_mult);
        s.key("conv_kernel", cfg.decoder.conv_kernel);
        s.key("conv_groups", cfg.decoder.conv_groups);
        s.key("cond_drop_prob", cfg.decoder.cond_drop_prob);
        s.key("mask_frac_lo", cfg.decoder.mask_frac_lo);
        s.key("mask_frac_hi", cfg.decoder.mask_frac_hi);
        s.key("position", cfg.decoder.position);
        s.finish();
    }
    if (root.contains("sampler")) {
        StrictSection s{root.at("sampler"), "sampler", {}};
        s.key("steps", cfg.sampler.steps);
        s.key("guidance_w", cfg.sampler.guidance_w);
        s.key("sway_s", cfg.sampler.sway_s);
        s.finish();
    }
    if (root.contains("vocoder")) {
        StrictSection s{root.at("vocoder"), "vocoder", {}};
        s.key("kind", cfg.vocoder.kind);
        s.key("gl_iters", cfg.vocoder.gl_iters);
        s.key("external_cmd", cfg.vocoder.external_cmd);
        s.finish();
    }
    if (root.contains("training")) {
        StrictSection s{root.at("training"), "training", {}};
        s.key("lr", cfg.training.lr);
        s.key("warmup_steps", cfg.training.warmup_steps);
        s.key("updates", cfg.training.updates);
        s.key("batch_size", cfg.training.batch_size);
        s.key("weight_decay", cfg.training.weight_decay);
        s.key("log_every", cfg.training.log_every);
        s.key("checkpoint_every", cfg.training.checkpoint_every);
        s.finish();
    }
}

} // namespace

RunConfig RunConfig::desk() {
    RunConfig cfg;
    cfg.preset = "desk";
    cfg.kmeans.k = 48;
    return cfg;
}

RunConfig RunConfig::paper() {
    // Full-scale published training recipe, recorded as executable documentation. Not
    // trainable at desk scale; the CLI refuses it without an explicit
    // acknowledgement flag.
    RunConfig cfg;
    cfg.preset = "paper";
    cfg.kmeans.k = 500;
    cfg.decoder.layers = 22;
    cfg.decoder.heads = 16;
    cfg.decoder.model_dim = 1024;
    cfg.encoder.dim = 400; // surrogate stand-in; imported SSL embeddings carry their own dim
    cfg.training.lr = 5e-5;
    cfg.training.warmup_steps = 100000;
    cfg.training.updates = 1350000;
    cfg.training.batch_size = 64;
    cfg.training.weight_decay = 0.01;
    return cfg;
}

RunConfig RunConfig::from_preset(const std::string& name) {
    if (name == "desk") return desk();
    if (name == "paper") return paper();
    throw ContractError("unknown preset '" + name + "' (expected desk or paper)");
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json root = json::parse(in, nullptr, false);
    if (root.is_discarded() || !root.is_object())
        throw FormatError(path + ": config must be a JSON object");

    std::string preset = "desk";
    if (root.contains("preset")) {
        if (!root.at("preset").is_string())
            throw ContractError("config: preset must be a string");
        preset = root.at("preset").get<std::string>();
    }
    RunConfig cfg = from_preset(preset);
    apply_overrides(cfg, root, path);
    return cfg;
}

void RunConfig::save(const std::string& path) const {
    json root;
    root["preset"] = preset;
    root["audio"] = {{"sample_rate", audio.sample_rate}, {"mel_channels", audio.mel_channels},
                     {"hop", audio.hop},                 {"win_length", audio.win_length},
                     {"fft_size", audio.fft_size},       {"fmin", audio.fmin},
                     {"fmax", audio.fmax},               {"log_floor", audio.log_floor}};
    root["encoder"] = {{"kind", encoder.kind},
                       {"layer_index", encoder.layer_index},
                       {"dim", encoder.dim}};
    root["kmeans"] = {{"k", kmeans.k},
                      {"max_iters", kmeans.max_iters},
                      {"rel_tol", kmeans.rel_tol},
                      {"subsample_every", kmeans.subsample_every}};
    root["decoder"] = {{"layers", decoder.layers},
                       {"heads", decoder.heads},
                       {"model_dim", decoder.model_dim},
                       {"ffn_mult", decoder.ffn_mult},
                       {"conv_kernel", decoder.conv_kernel},
                       {"conv_groups", decoder.conv_groups},
                       {"cond_drop_prob", decoder.cond_drop_prob},
                       {"mask_frac_lo", decoder.mask_frac_lo},
                       {"mask_frac_hi", decoder.mask_frac_hi},
                       {"position", decoder.position}};
    root["sampler"] = {{"steps", sampler.steps},
                       {"guidance_w", sampler.guidance_w},
                       {"sway_s", sampler.sway_s}};
    root["vocoder"] = {{"kind", vocoder.kind},
                       {"gl_iters", vocoder.gl_iters},
                       {"external_cmd", vocoder.external_cmd}};
    root["training"] = {{"lr", training.lr},
                        {"warmup_steps", training.warmup_steps},
                        {"updates", training.updates},
                        {"batch_size", training.batch_size},
                        {"weight_decay", training.weight_decay},
                        {"log_every", training.log_every},
                        {"checkpoint_every", training.checkpoint_every}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << root.dump(2) << '\n';
    if (!out) throw IoError("write failure on " + path);
}

MelConfig RunConfig::mel_config() const {
    MelConfig cfg;
    cfg.sample_rate = audio.sample_rate;
    cfg.channels = audio.mel_channels;
    cfg.hop = audio.hop;
    cfg.win_length = audio.win_length;
    cfg.fft_size = audio.fft_size;
    cfg.fmin = audio.fmin;
    cfg.fmax = audio.fmax;
    cfg.log_floor = audio.log_floor;
    return cfg;
}

cfm::DecoderConfig RunConfig::decoder_config() const {
    cfm::DecoderConfig cfg;
    cfg.layers = decoder.layers;
    cfg.heads = decoder.heads;
    cfg.model_dim = decoder.model_dim;
    cfg.mel_dim = audio.mel_channels;
    cfg.vocab_size = kmeans.k + 2;
    cfg.ffn_mult = decoder.ffn_mult;
    cfg.conv_kernel = decoder.conv_kernel;
    cfg.conv_groups = decoder.conv_groups;
    cfg.cond_drop_prob = float(decoder.cond_drop_prob);
    cfg.mask_frac_lo = float(decoder.mask_frac_lo);
    cfg.mask_frac_hi = float(decoder.mask_frac_hi);
    if (decoder.position == "rotary")
        cfg.position = cfm::DecoderConfig::Position::rotary;
    else if (decoder.position == "sinusoidal")
        cfg.position = cfm::DecoderConfig::Position::sinusoidal;
    else
        throw ContractError("config: decoder.position must be rotary or sinusoidal");
    return cfg;
}

cfm::SamplerOptions RunConfig::sampler_options() const {
    cfm::SamplerOptions opts;
    opts.steps = sampler.steps;
    opts.guidance_w = float(sampler.guidance_w);
    opts.sway_s = float(sampler.sway_s);
    return opts;
}

cfm::AdamWOptions RunConfig::optimizer_options() const {
    cfm::AdamWOptions opts;
    opts.lr = float(training.lr);
    opts.warmup_steps = training.warmup_steps;
    opts.weight_decay = float(training.weight_decay);
    return opts;
}

KmeansOptions RunConfig::kmeans_options(std::uint64_t seed) const {
    KmeansOptions opts;
    opts.k = kmeans.k;
    opts.seed = seed;
    opts.max_iters = kmeans.max_iters;
    opts.rel_tol = kmeans.rel_tol;
    opts.subsample_every = kmeans.subsample_every;
    return opts;
}

VocoderSpec RunConfig::vocoder_spec() const {
    VocoderSpec spec;
    if (vocoder.kind == "phase_retrieval")
        spec.kind = VocoderSpec::Kind::phase_retrieval;
    else if (vocoder.kind == "external")
        spec.kind = VocoderSpec::Kind::external;
    else
        throw ContractError("config: vocoder.kind must be phase_retrieval or external");
    spec.gl_iters = vocoder.gl_iters;
    spec.external_cmd = vocoder.external_cmd;
    return spec;
}

} // namespace ezvc
