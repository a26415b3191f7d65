#include "ezvc/decoder/checkpoint.hpp"

#include "ezvc/errors.hpp"

#include <json.hpp>

#include <fstream>

namespace ezvc::cfm {

namespace {

using nlohmann::json;

constexpr const char* kMagic = "EZVCCKPT1";

json config_to_json(const DecoderConfig& cfg) {
    return {{"layers", cfg.layers},
            {"heads", cfg.heads},
            {"model_dim", cfg.model_dim},
            {"mel_dim", cfg.mel_dim},
            {"vocab_size", cfg.vocab_size},
            {"ffn_mult", cfg.ffn_mult},
            {"conv_kernel", cfg.conv_kernel},
            {"conv_groups", cfg.conv_groups},
            {"cond_drop_prob", cfg.cond_drop_prob},
            {"mask_frac", {cfg.mask_frac_lo, cfg.mask_frac_hi}},
            {"position",
             cfg.position == DecoderConfig::Position::rotary ? "rotary" : "sinusoidal"}};
}

DecoderConfig config_from_json(const json& j, const std::string& path) {
    DecoderConfig cfg;
    try {
        cfg.layers = j.at("layers").get<int>();
        cfg.heads = j.at("heads").get<int>();
        cfg.model_dim = j.at("model_dim").get<int>();
        cfg.mel_dim = j.at("mel_dim").get<int>();
        cfg.vocab_size = j.at("vocab_size").get<int>();
        cfg.ffn_mult = j.at("ffn_mult").get<int>();
        cfg.conv_kernel = j.at("conv_kernel").get<int>();
        cfg.conv_groups = j.at("conv_groups").get<int>();
        cfg.cond_drop_prob = j.at("cond_drop_prob").get<float>();
        cfg.mask_frac_lo = j.at("mask_frac").at(0).get<float>();
        cfg.mask_frac_hi = j.at("mask_frac").at(1).get<float>();
        const std::string pos = j.at("position").get<std::string>();
        if (pos == "rotary") cfg.position = DecoderConfig::Position::rotary;
        else if (pos == "sinusoidal") cfg.position = DecoderConfig::Position::sinusoidal;
        else throw FormatError(path + ": unknown position mode " + pos);
    } catch (const json::exception& e) {
        throw FormatError(path + ": bad config section (" + e.what() + ")");
    }
    return cfg;
}

void write_tensor(std::ofstream& out, const MatF& m) {
    out.write(reinterpret_cast<const char*>(m.data()),
              std::streamsize(size_t(m.size()) * sizeof(float)));
}

void read_tensor(std::ifstream& in, MatF& m, const std::string& path) {
    in.read(reinterpret_cast<char*>(m.data()),
            std::streamsize(size_t(m.size()) * sizeof(float)));
    if (in.gcount() != std::streamsize(size_t(m.size()) * sizeof(float)))
        throw FormatError(path + ": truncated tensor payload");
}

json tensor_meta(const std::string& name, const MatF& m) {
    return {{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}};
}

} // namespace

void save_checkpoint(const std::string& path, const Model<float>& model,
                     std::int64_t step, const AdamW* opt) {
    auto params = model.params();

    json header;
    header["version"] = 1;
    header["step"] = step;
    header["config"] = config_to_json(model.config());

    json tensors = json::array();
    for (const auto* p : params) tensors.push_back(tensor_meta(p->name, p->value));
    header["tensors"] = tensors;

    // a never-stepped optimizer serializes as all-zero moments
    std::vector<MatF> m = opt ? opt->moment1() : std::vector<MatF>{};
    std::vector<MatF> v = opt ? opt->moment2() : std::vector<MatF>{};
    if (opt && m.empty()) {
        for (const auto* p : params) {
            m.push_back(MatF::Zero(p->value.rows(), p->value.cols()));
            v.push_back(MatF::Zero(p->value.rows(), p->value.cols()));
        }
    }

    if (opt) {
        const auto& o = opt->options();
        header["optimizer"] = {{"type", "adamw"},
                               {"lr", o.lr},
                               {"warmup_steps", o.warmup_steps},
                               {"beta1", o.beta1},
                               {"beta2", o.beta2},
                               {"eps", o.eps},
                               {"weight_decay", o.weight_decay},
                               {"step_count", opt->step_count()}};
        json opt_tensors = json::array();
        for (size_t i = 0; i < params.size(); ++i) {
            opt_tensors.push_back(tensor_meta("adam.m." + params[i]->name, m[i]));
            opt_tensors.push_back(tensor_meta("adam.v." + params[i]->name, v[i]));
        }
        header["opt_tensors"] = opt_tensors;
    } else {
        header["optimizer"] = nullptr;
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << kMagic << '\n' << header.dump() << '\n';
    for (const auto* p : params) write_tensor(out, p->value);
    for (size_t i = 0; i < m.size(); ++i) {
        write_tensor(out, m[i]);
        write_tensor(out, v[i]);
    }
    if (!out) throw IoError("write failure on " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line) || line != kMagic)
        throw FormatError(path + ": bad magic, expected " + std::string(kMagic));
    if (!std::getline(in, line)) throw FormatError(path + ": missing header line");
    json header = json::parse(line, nullptr, false);
    if (header.is_discarded() || !header.is_object())
        throw FormatError(path + ": malformed header");

    const DecoderConfig cfg = config_from_json(header.at("config"), path);
    LoadedCheckpoint loaded{Model<float>(cfg, 0)};
    loaded.step = header.value("step", std::int64_t(0));

    auto params = loaded.model.params();
    const json& tensors = header.at("tensors");
    if (!tensors.is_array() || tensors.size() != params.size())
        throw FormatError(path + ": tensor list does not match model layout");
    for (size_t i = 0; i < params.size(); ++i) {
        const json& meta = tensors.at(i);
        if (meta.at("name").get<std::string>() != params[i]->name ||
            meta.at("rows").get<Eigen::Index>() != params[i]->value.rows() ||
            meta.at("cols").get<Eigen::Index>() != params[i]->value.cols())
            throw FormatError(path + ": tensor " + std::to_string(i) +
                              " name/shape mismatch");
        read_tensor(in, params[i]->value, path);
    }

    if (header.contains("optimizer") && !header.at("optimizer").is_null()) {
        const json& o = header.at("optimizer");
        AdamWOptions opts;
        try {
            opts.lr = o.at("lr").get<float>();
            opts.warmup_steps = o.at("warmup_steps").get<int>();
            opts.beta1 = o.at("beta1").get<float>();
            opts.beta2 = o.at("beta2").get<float>();
            opts.eps = o.at("eps").get<float>();
            opts.weight_decay = o.at("weight_decay").get<float>();
        } catch (const json::exception& e) {
            throw FormatError(path + ": bad optimizer section (" + e.what() + ")");
        }
        std::vector<MatF> m, v;
        m.reserve(params.size());
        v.reserve(params.size());
        for (auto* p : params) {
            MatF mm(p->value.rows(), p->value.cols());
            MatF vv(p->value.rows(), p->value.cols());
            read_tensor(in, mm, path);
            read_tensor(in, vv, path);
            m.push_back(std::move(mm));
            v.push_back(std::move(vv));
        }
        loaded.optimizer = AdamW(opts);
        loaded.optimizer.restore(std::move(m), std::move(v),
                                 o.at("step_count").get<std::int64_t>());
        loaded.has_optimizer = true;
    }

    if (in.peek() != std::ifstream::traits_type::eof())
        throw FormatError(path + ": trailing bytes after payload");
    return loaded;
}

} // namespace ezvc::cfm
