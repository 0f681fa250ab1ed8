#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tsforge/wav.hpp"

namespace tsforge {

inline constexpr std::string_view kEmbeddingFormat = "emb-v1";
inline constexpr std::string_view kProxyModelName = "proxy-logmel-v1";
inline constexpr int kProxyMelBands = 20;
inline constexpr int kProxyDim = 2 * kProxyMelBands;
inline constexpr int kNumSimilarityLevels = 5;

struct SpeakerEmbedding {
  std::string utterance_id;
  std::vector<double> vector;

  std::size_t dim() const { return vector.size(); }
  bool operator==(const SpeakerEmbedding&) const = default;
};

// Deterministic desk-scale speaker embedding: per-band log-mel means and
// standard deviations, each block centered across bands (removing overall
// gain), then L2-normalized. Needs at least 0.5 s of non-silent audio.
SpeakerEmbedding proxy_embedding(const Waveform& w, std::string utterance_id = {});

double cosine_similarity(const SpeakerEmbedding& a, const SpeakerEmbedding& b);
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

double clamp_unit(double s);

// Uniform quantization of [0, 1] into levels 1..5: [0,0.2)->1 ... [0.8,1]->5.
int quantize_similarity(double s);

// Level of a raw cosine score: clamp to [0, 1], then quantize.
inline int similarity_level(double cosine) { return quantize_similarity(clamp_unit(cosine)); }

// Key under which a reference segment's embedding is stored.
std::string segment_key(const std::string& utterance_id, double start_s, double len_s);

struct EmbeddingFileHeader {
  std::string format{kEmbeddingFormat};
  int dim = 0;
  std::string source_model;
};

using EmbeddingMap = std::map<std::string, SpeakerEmbedding, std::less<>>;

// Loads an emb-v1 file. Vectors within 1e-3 of unit norm are renormalized;
// anything further off, non-finite, or of the wrong dim is rejected naming
// the utterance. An empty file yields an empty map.
EmbeddingMap load_embeddings(const std::filesystem::path& path, EmbeddingFileHeader* header = nullptr);

void write_embeddings(const std::filesystem::path& path, const EmbeddingFileHeader& header,
                      const std::vector<SpeakerEmbedding>& embeddings);

}  // namespace tsforge
