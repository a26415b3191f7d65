// ezvc: textless any-to-any voice conversion over discrete speech units and a
// conditional-flow-matching mel decoder.

#include "ezvc/config.hpp"
#include "ezvc/decoder/checkpoint.hpp"
#include "ezvc/decoder/sampler.hpp"
#include "ezvc/decoder/trainer.hpp"
#include "ezvc/encoder.hpp"
#include "ezvc/errors.hpp"
#include "ezvc/eval.hpp"
#include "ezvc/io.hpp"
#include "ezvc/kmeans.hpp"
#include "ezvc/pipeline.hpp"
#include "ezvc/units.hpp"
#include "ezvc/vocoder.hpp"
#include "ezvc/wav.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ezvc;

namespace {

// exit codes: 0 success, 1 partial, 2 usage/artifact error, 3 internal
constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInternal = 3;

void emit_error(const std::string& kind, const std::string& message) {
    const json rec = {{"error", kind}, {"message", message}};
    std::cerr << rec.dump() << '\n';
}

void require_artifact(const std::string& path, const std::string& what) {
    if (!fs::exists(path))
        throw Error("artifact-missing", what + " not found: " + path);
}

// Removes outputs of a failed command; commit() keeps them.
class OutputGuard {
public:
    ~OutputGuard() {
        if (committed_) return;
        std::error_code ec;
        for (auto it = files_.rbegin(); it != files_.rend(); ++it) fs::remove(*it, ec);
        for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it) fs::remove(*it, ec);
    }
    void add_file(const std::string& path) { files_.push_back(path); }
    // registers the directory itself only if this call created it
    void add_dir(const std::string& path) {
        std::error_code ec;
        if (fs::create_directories(path, ec)) dirs_.push_back(path);
    }
    void commit() { committed_ = true; }

private:
    std::vector<std::string> files_, dirs_;
    bool committed_ = false;
};

RunConfig load_run_config(const std::string& config_path, const std::string& preset) {
    if (!config_path.empty()) {
        require_artifact(config_path, "config file");
        RunConfig cfg = RunConfig::load(config_path);
        if (!preset.empty() && preset != cfg.preset)
            throw ContractError("--preset " + preset + " conflicts with config preset " +
                                cfg.preset);
        return cfg;
    }
    return RunConfig::from_preset(preset.empty() ? "desk" : preset);
}

EncoderSpec encoder_spec_for_codebook(const Codebook& cb, std::int64_t seed_override,
                                      int dim_override) {
    auto spec = parse_surrogate_tag(cb.trained_on);
    if (!spec) {
        if (seed_override < 0)
            throw ContractError(
                "codebook was not trained on surrogate embeddings (trained_on='" +
                cb.trained_on + "'); pass --encoder-seed/--encoder-dim to force a "
                "surrogate, or supply precomputed embeddings");
        spec = EncoderSpec{};
    }
    if (seed_override >= 0) spec->seed = std::uint64_t(seed_override);
    if (dim_override > 0) spec->dim = dim_override;
    if (spec->dim != cb.dim)
        throw ContractError("encoder dim " + std::to_string(spec->dim) +
                            " does not match codebook dim " + std::to_string(cb.dim));
    return *spec;
}

std::string sanitize_id(const std::string& stem) {
    std::string id = stem;
    for (char& c : id)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
    return id;
}

// ---- subcommand bodies ----

int cmd_prep_manifest(const std::string& dir, const std::string& out) {
    require_artifact(dir, "audio directory");
    std::vector<fs::path> wavs;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".wav")
            wavs.push_back(entry.path());
    std::sort(wavs.begin(), wavs.end());
    if (wavs.empty()) throw DomainError("no .wav files under " + dir);

    std::vector<ManifestEntry> entries;
    std::set<std::string> used;
    for (const auto& p : wavs) {
        std::string id = sanitize_id(p.stem().string());
        for (int n = 2; used.count(id); ++n)
            id = sanitize_id(p.stem().string()) + "_" + std::to_string(n);
        used.insert(id);
        entries.push_back({id, fs::absolute(p).string(), ""});
    }

    OutputGuard guard;
    guard.add_file(out);
    write_manifest(out, entries);
    guard.commit();
    std::cerr << "wrote " << entries.size() << " entries to " << out << '\n';
    return kExitOk;
}

int cmd_extract_embeddings(const std::string& manifest_path, std::uint64_t seed, int dim,
                           int layer, const std::string& out_dir, int workers) {
    require_artifact(manifest_path, "manifest");
    const auto manifest = read_manifest(manifest_path);
    if (manifest.empty()) throw DomainError("empty manifest " + manifest_path);

    EncoderSpec spec;
    spec.seed = seed;
    spec.dim = dim;
    spec.layer_index = layer;
    const SurrogateEncoder enc(spec);

    OutputGuard guard;
    guard.add_dir(out_dir);

    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mu;

    auto work = [&]() {
        for (size_t i = next.fetch_add(1); i < manifest.size(); i = next.fetch_add(1)) {
            if (failed.load()) return;
            try {
                const Waveform w = normalize_input(load_waveform(manifest[i].audio_path));
                const FrameEmbeddings emb = enc.embed(w);
                export_embeddings((fs::path(out_dir) / (manifest[i].id + ".ezemb")).string(),
                                  emb);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!failed.exchange(true))
                    first_error = manifest[i].id + ": " + e.what();
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw DataError("embedding extraction failed: " + first_error);

    for (const auto& e : manifest)
        guard.add_file((fs::path(out_dir) / (e.id + ".ezemb")).string());
    guard.commit();
    std::cerr << "wrote " << manifest.size() << " embedding files to " << out_dir << '\n';
    return kExitOk;
}

int cmd_train_kmeans(const std::string& emb_dir, int k, std::uint64_t seed, int max_iters,
                     double rel_tol, int subsample, const std::string& out) {
    require_artifact(emb_dir, "embedding directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(emb_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".ezemb")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DomainError("no .ezemb files under " + emb_dir);

    std::vector<FrameEmbeddings> shards;
    shards.reserve(files.size());
    for (const auto& f : files) shards.push_back(io::read_embeddings(f.string()));

    KmeansOptions opts;
    opts.k = k;
    opts.seed = seed;
    opts.max_iters = max_iters;
    opts.rel_tol = rel_tol;
    opts.subsample_every = subsample;

    KmeansStats stats;
    Codebook cb = train_kmeans(shards, opts, &stats);
    cb.trained_on = shards.front().source_tag;

    OutputGuard guard;
    guard.add_file(out);
    io::save_codebook(out, cb);
    guard.commit();
    std::cerr << "k-means: " << stats.iterations << " iterations, inertia " << cb.inertia
              << ", codebook " << out << '\n';
    return kExitOk;
}

int cmd_encode_units(const std::string& manifest_path, const std::string& codebook_path,
                     const std::string& emb_dir, std::int64_t enc_seed, int enc_dim,
                     const std::string& out) {
    require_artifact(manifest_path, "manifest");
    require_artifact(codebook_path, "codebook");
    const auto manifest = read_manifest(manifest_path);
    const Codebook cb = io::load_codebook(codebook_path);

    OutputGuard guard;
    guard.add_file(out);
    std::ofstream os(out);
    if (!os) throw IoError("cannot open " + out + " for writing");

    if (!emb_dir.empty()) {
        for (const auto& e : manifest) {
            const auto path = (fs::path(emb_dir) / (e.id + ".ezemb")).string();
            require_artifact(path, "embeddings for " + e.id);
            const UnitSequence units = dedup(assign(cb, import_embeddings(path, cb.dim)));
            const json rec = {{"id", e.id}, {"deduped", true}, {"units", units.units}};
            os << rec.dump() << '\n';
        }
    } else {
        const SurrogateEncoder enc(encoder_spec_for_codebook(cb, enc_seed, enc_dim));
        for (const auto& e : manifest) {
            require_artifact(e.audio_path, "audio for " + e.id);
            const UnitSequence units =
                encode_to_units(load_waveform(e.audio_path), enc, cb);
            const json rec = {{"id", e.id}, {"deduped", true}, {"units", units.units}};
            os << rec.dump() << '\n';
        }
    }
    if (!os) throw IoError("write failure on " + out);
    guard.commit();
    std::cerr << "wrote units for " << manifest.size() << " utterances to " << out << '\n';
    return kExitOk;
}

int cmd_prepare_data(const std::string& manifest_path, const std::string& codebook_path,
                     std::int64_t enc_seed, int enc_dim, const std::string& out_dir) {
    require_artifact(manifest_path, "manifest");
    require_artifact(codebook_path, "codebook");
    const auto manifest = read_manifest(manifest_path);
    const Codebook cb = io::load_codebook(codebook_path);
    const SurrogateEncoder enc(encoder_spec_for_codebook(cb, enc_seed, enc_dim));

    const DatasetIndex index = prepare_training_set(manifest, enc, cb, out_dir, &std::cerr);
    if (index.entries.empty())
        throw DataError("prepare-data: every manifest entry failed");
    std::cerr << "prepared " << index.entries.size() << " of " << manifest.size()
              << " utterances under " << out_dir << '\n';
    return index.entries.size() == manifest.size() ? kExitOk : kExitPartial;
}

int cmd_train_decoder(const std::string& data_dir, const std::string& config_path,
                      const std::string& preset, std::uint64_t seed, std::int64_t steps,
                      bool acknowledge_scale, const std::string& out_dir) {
    const std::string index_path = (fs::path(data_dir) / "index.jsonl").string();
    require_artifact(index_path, "dataset index");

    RunConfig run = load_run_config(config_path, preset);
    if (run.preset == "paper" && !acknowledge_scale)
        throw ContractError(
            "the 'paper' preset trains a 300M-parameter model for 1.35M updates and is "
            "not tractable on a desk machine; rerun with --acknowledge-scale to "
            "proceed anyway, or use --preset desk");

    const auto items = load_dataset(index_path);
    const DatasetIndex index = read_dataset_index(index_path);
    run.kmeans.k = index.k_units; // vocabulary follows the codebook

    cfm::DecoderConfig dec_cfg = run.decoder_config();
    cfm::Model<float> model(dec_cfg, seed);
    cfm::AdamW opt(run.optimizer_options());

    cfm::TrainOptions topts;
    topts.steps = int(steps > 0 ? steps : run.training.updates);
    topts.batch_size = run.training.batch_size;
    topts.seed = seed;
    topts.optimizer = run.optimizer_options();
    topts.log_every = run.training.log_every;
    topts.checkpoint_every = run.training.checkpoint_every;
    topts.checkpoint_dir = out_dir;

    fs::create_directories(out_dir);
    std::ofstream log_file((fs::path(out_dir) / "training_log.jsonl").string());
    topts.on_log = [&](int step, float loss, float lr) {
        const json rec = {{"step", step}, {"loss", loss}, {"lr", lr}};
        log_file << rec.dump() << '\n';
        log_file.flush();
        std::cerr << "step " << step << "  loss " << loss << "  lr " << lr << '\n';
    };

    cfm::train(model, opt, items, topts);
    std::cerr << "final checkpoint: " << (fs::path(out_dir) / "final.ezckpt").string()
              << '\n';
    return kExitOk;
}

struct ConversionArtifacts {
    cfm::Model<float> model;
    Codebook cb;
    SurrogateEncoder enc;
    VocoderSpec voc;
};

ConversionArtifacts load_conversion_artifacts(const std::string& ckpt_path,
                                              const std::string& codebook_path,
                                              std::int64_t enc_seed, int enc_dim,
                                              const std::string& vocoder_kind,
                                              const std::string& vocoder_cmd,
                                              int gl_iters) {
    require_artifact(ckpt_path, "checkpoint");
    require_artifact(codebook_path, "codebook");
    auto loaded = cfm::load_checkpoint(ckpt_path);
    Codebook cb = io::load_codebook(codebook_path);
    SurrogateEncoder enc(encoder_spec_for_codebook(cb, enc_seed, enc_dim));

    VocoderSpec voc;
    if (vocoder_kind == "phase_retrieval") {
        voc.kind = VocoderSpec::Kind::phase_retrieval;
    } else if (vocoder_kind == "external") {
        voc.kind = VocoderSpec::Kind::external;
        if (vocoder_cmd.empty())
            throw ContractError("--vocoder external requires --vocoder-cmd");
        voc.external_cmd = vocoder_cmd;
    } else {
        throw ContractError("unknown vocoder kind " + vocoder_kind);
    }
    voc.gl_iters = gl_iters;
    return {std::move(loaded.model), std::move(cb), std::move(enc), std::move(voc)};
}

int cmd_convert(const std::string& source, const std::string& target,
                const ConversionArtifacts& art, const cfm::SamplerOptions& sampler,
                std::uint64_t seed, const std::string& out,
                const std::string& dump_mel) {
    require_artifact(source, "source audio");
    require_artifact(target, "target audio");

    ConversionRequest req;
    req.source = load_waveform(source);
    req.target = load_waveform(target);
    req.sampler = sampler;
    req.seed = seed;

    const ConversionResult res = convert(req, art.model, art.cb, art.enc, art.voc);

    OutputGuard guard;
    guard.add_file(out);
    save_waveform(out, res.audio);
    if (!dump_mel.empty()) {
        guard.add_file(dump_mel);
        io::write_mel(dump_mel, res.generated_mel);
    }
    guard.commit();
    std::cerr << "converted " << res.generated_mel.frames << " frames ("
              << res.audio.duration() << " s) -> " << out << '\n';
    return kExitOk;
}

int cmd_eval_batch(const std::string& pairs_path, const ConversionArtifacts& art,
                   const cfm::SamplerOptions& sampler, std::uint64_t seed,
                   const std::string& out) {
    require_artifact(pairs_path, "pairs manifest");
    const auto pairs = read_pairs_manifest(pairs_path);
    if (pairs.empty()) throw DomainError("empty pairs manifest " + pairs_path);

    const EvalReport report =
        eval_batch(pairs, art.model, art.cb, art.enc, art.voc, sampler, seed, &std::cerr);

    OutputGuard guard;
    guard.add_file(out);
    write_report(out, report);
    guard.commit();
    std::cout << render_report_table(report);

    if (report.ok_count == 0) throw DataError("every pair failed");
    return report.ok_count == int(report.rows.size()) ? kExitOk : kExitPartial;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Textless any-to-any voice conversion: discrete speech units + CFM mel decoder"};
    app.require_subcommand(1);

    // prep-manifest
    std::string pm_dir, pm_out;
    auto* prep = app.add_subcommand("prep-manifest", "Scan a directory for WAV files");
    prep->add_option("dir", pm_dir, "directory to scan")->required();
    prep->add_option("-o,--output", pm_out, "manifest path")->required();

    // extract-embeddings
    std::string ee_manifest, ee_out, ee_encoder = "surrogate";
    std::uint64_t ee_seed = 0;
    int ee_dim = 400, ee_layer = 14, ee_workers = 1;
    auto* extract = app.add_subcommand("extract-embeddings",
                                       "Surrogate frame embeddings for a manifest");
    extract->add_option("manifest", ee_manifest)->required();
    extract->add_option("--encoder", ee_encoder, "encoder kind (surrogate)");
    extract->add_option("--seed", ee_seed, "surrogate projection seed")->required();
    extract->add_option("--dim", ee_dim, "embedding dim (default 400)");
    extract->add_option("--layer", ee_layer, "provenance layer index");
    extract->add_option("--workers", ee_workers, "parallel workers");
    extract->add_option("-o,--output", ee_out, "output directory")->required();

    // train-kmeans
    std::string tk_dir, tk_out;
    int tk_k = 500, tk_max_iters = 100, tk_subsample = 1;
    std::uint64_t tk_seed = 0;
    double tk_rel_tol = 1e-4;
    auto* kmeans_cmd = app.add_subcommand("train-kmeans", "Train the unit codebook");
    kmeans_cmd->add_option("embeddings_dir", tk_dir)->required();
    kmeans_cmd->add_option("-k,--clusters", tk_k, "number of clusters (paper: 500)");
    kmeans_cmd->add_option("--seed", tk_seed)->required();
    kmeans_cmd->add_option("--max-iters", tk_max_iters);
    kmeans_cmd->add_option("--rel-tol", tk_rel_tol);
    kmeans_cmd->add_option("--subsample", tk_subsample, "keep every n-th frame");
    kmeans_cmd->add_option("-o,--output", tk_out, "codebook path")->required();

    // encode-units
    std::string eu_manifest, eu_codebook, eu_emb_dir, eu_out;
    std::int64_t eu_enc_seed = -1;
    int eu_enc_dim = 0;
    auto* encode = app.add_subcommand("encode-units", "Deduped units for a manifest");
    encode->add_option("manifest", eu_manifest)->required();
    encode->add_option("--codebook", eu_codebook)->required();
    encode->add_option("--embeddings", eu_emb_dir,
                       "directory of precomputed .ezemb files");
    encode->add_option("--encoder-seed", eu_enc_seed, "override surrogate seed");
    encode->add_option("--encoder-dim", eu_enc_dim, "override surrogate dim");
    encode->add_option("-o,--output", eu_out, "units jsonl path")->required();

    // prepare-data
    std::string pd_manifest, pd_codebook, pd_out;
    std::int64_t pd_enc_seed = -1;
    int pd_enc_dim = 0;
    auto* prepare = app.add_subcommand("prepare-data", "Mels + units + index for training");
    prepare->add_option("manifest", pd_manifest)->required();
    prepare->add_option("--codebook", pd_codebook)->required();
    prepare->add_option("--encoder-seed", pd_enc_seed, "override surrogate seed");
    prepare->add_option("--encoder-dim", pd_enc_dim, "override surrogate dim");
    prepare->add_option("-o,--output", pd_out, "output directory")->required();

    // train-decoder
    std::string td_data, td_config, td_preset, td_out;
    std::uint64_t td_seed = 0;
    std::int64_t td_steps = 0;
    bool td_ack = false;
    auto* train_cmd = app.add_subcommand("train-decoder", "Train the CFM mel decoder");
    train_cmd->add_option("data_dir", td_data, "prepare-data output directory")->required();
    train_cmd->add_option("--config", td_config, "JSON config file");
    train_cmd->add_option("--preset", td_preset, "desk or paper");
    train_cmd->add_option("--seed", td_seed)->required();
    train_cmd->add_option("--steps", td_steps, "override training.updates");
    train_cmd->add_flag("--acknowledge-scale", td_ack,
                        "proceed with the paper-scale preset");
    train_cmd->add_option("-o,--output", td_out, "checkpoint directory")->required();

    // shared conversion options
    struct ConvOpts {
        std::string ckpt, codebook, out, dump_mel;
        std::string vocoder_kind = "phase_retrieval", vocoder_cmd;
        std::int64_t enc_seed = -1;
        int enc_dim = 0, gl_iters = 32, steps = 32;
        double guidance = 2.0, sway = -1.0;
        std::uint64_t seed = 0;
    };
    auto add_conv_options = [](CLI::App* cmd, ConvOpts& o, bool with_dump) {
        cmd->add_option("--ckpt", o.ckpt, "decoder checkpoint")->required();
        cmd->add_option("--codebook", o.codebook)->required();
        cmd->add_option("--seed", o.seed, "sampling seed")->required();
        cmd->add_option("--steps", o.steps, "Euler steps");
        cmd->add_option("--guidance", o.guidance, "classifier-free guidance weight");
        cmd->add_option("--sway", o.sway, "sway schedule coefficient");
        cmd->add_option("--encoder-seed", o.enc_seed, "override surrogate seed");
        cmd->add_option("--encoder-dim", o.enc_dim, "override surrogate dim");
        cmd->add_option("--vocoder", o.vocoder_kind, "phase_retrieval or external");
        cmd->add_option("--vocoder-cmd", o.vocoder_cmd,
                        "external vocoder command (mel-file out-wav appended)");
        cmd->add_option("--gl-iters", o.gl_iters, "phase retrieval iterations");
        cmd->add_option("-o,--output", o.out, "output wav")->required();
        if (with_dump) cmd->add_option("--dump-mel", o.dump_mel, "write generated mel");
    };

    std::string cv_source, cv_target;
    ConvOpts cv;
    auto* conv = app.add_subcommand("convert", "Any-to-any voice conversion");
    conv->add_option("--source", cv_source, "content source wav")->required();
    conv->add_option("--target", cv_target, "speaker prompt wav")->required();
    add_conv_options(conv, cv, true);

    std::string rs_audio;
    ConvOpts rs;
    auto* resynth_cmd = app.add_subcommand("resynth", "Self-conversion (resynthesis)");
    resynth_cmd->add_option("--audio", rs_audio, "utterance to resynthesize")->required();
    add_conv_options(resynth_cmd, rs, true);

    std::string eb_pairs;
    ConvOpts eb;
    auto* eval_cmd = app.add_subcommand("eval-batch", "Convert and score many pairs");
    eval_cmd->add_option("pairs", eb_pairs, "pairs manifest jsonl")->required();
    add_conv_options(eval_cmd, eb, false);

    try {
        app.parse(argc, argv);

        if (prep->parsed()) return cmd_prep_manifest(pm_dir, pm_out);
        if (extract->parsed()) {
            if (ee_encoder != "surrogate")
                throw ContractError("only the surrogate encoder runs in-process; import "
                                    "external embeddings instead");
            return cmd_extract_embeddings(ee_manifest, ee_seed, ee_dim, ee_layer, ee_out,
                                          ee_workers);
        }
        if (kmeans_cmd->parsed())
            return cmd_train_kmeans(tk_dir, tk_k, tk_seed, tk_max_iters, tk_rel_tol,
                                    tk_subsample, tk_out);
        if (encode->parsed())
            return cmd_encode_units(eu_manifest, eu_codebook, eu_emb_dir, eu_enc_seed,
                                    eu_enc_dim, eu_out);
        if (prepare->parsed())
            return cmd_prepare_data(pd_manifest, pd_codebook, pd_enc_seed, pd_enc_dim,
                                    pd_out);
        if (train_cmd->parsed())
            return cmd_train_decoder(td_data, td_config, td_preset, td_seed, td_steps,
                                     td_ack, td_out);

        auto sampler_of = [](const ConvOpts& o) {
            cfm::SamplerOptions s;
            s.steps = o.steps;
            s.guidance_w = float(o.guidance);
            s.sway_s = float(o.sway);
            return s;
        };
        if (conv->parsed()) {
            const auto art = load_conversion_artifacts(cv.ckpt, cv.codebook, cv.enc_seed,
                                                       cv.enc_dim, cv.vocoder_kind,
                                                       cv.vocoder_cmd, cv.gl_iters);
            return cmd_convert(cv_source, cv_target, art, sampler_of(cv), cv.seed, cv.out,
                               cv.dump_mel);
        }
        if (resynth_cmd->parsed()) {
            const auto art = load_conversion_artifacts(rs.ckpt, rs.codebook, rs.enc_seed,
                                                       rs.enc_dim, rs.vocoder_kind,
                                                       rs.vocoder_cmd, rs.gl_iters);
            return cmd_convert(rs_audio, rs_audio, art, sampler_of(rs), rs.seed, rs.out,
                               rs.dump_mel);
        }
        if (eval_cmd->parsed()) {
            const auto art = load_conversion_artifacts(eb.ckpt, eb.codebook, eb.enc_seed,
                                                       eb.enc_dim, eb.vocoder_kind,
                                                       eb.vocoder_cmd, eb.gl_iters);
            return cmd_eval_batch(eb_pairs, art, sampler_of(eb), eb.seed, eb.out);
        }
        return kExitUsage;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("usage", e.what());
        return kExitUsage;
    } catch (const Error& e) {
        emit_error(e.kind(), e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        emit_error("internal", e.what());
        return kExitInternal;
    }
}
