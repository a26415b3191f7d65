#pragma once

#include "ezvc/types.hpp"

#include <string>

namespace ezvc::io {

// Binary containers share one layout: an ASCII magic line, a single
// structured-text header line, then row-major little-endian float32 data.
// Readers reject bad magic, malformed headers, truncation and trailing bytes.

// "EZVCMEL1"
void write_mel(const std::string& path, const MelSpectrogram& mel);
MelSpectrogram read_mel(const std::string& path);

// "EZVCEMB1"
void write_embeddings(const std::string& path, const FrameEmbeddings& emb);
FrameEmbeddings read_embeddings(const std::string& path);

// "EZVCKM1"
void save_codebook(const std::string& path, const Codebook& cb);
Codebook load_codebook(const std::string& path);

} // namespace ezvc::io
