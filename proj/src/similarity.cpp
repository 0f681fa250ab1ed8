#include "tsforge/similarity.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <optional>
#include <regex>
#include <numbers>
#include <unordered_set>

#include "tsforge/error.hpp"
#include "tsforge/json_fields.hpp"
#include "tsforge/manifest.hpp"

namespace tsforge {

namespace {

constexpr int kFrameLen = 400;  // 25 ms
constexpr int kHop = 160;       // 10 ms
constexpr int kFftLen = 512;
constexpr int kBins = kFftLen / 2 + 1;
constexpr double kMelLowHz = 60.0;
constexpr double kMelHighHz = 7600.0;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct MelFrontend {
  std::vector<double> window;
  std::vector<std::vector<double>> filters;  // [band][bin]
  fftw_plan plan = nullptr;

  MelFrontend() {
    window.resize(kFrameLen);
    for (int n = 0; n < kFrameLen; ++n) {
      window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / (kFrameLen - 1));
    }
    const double lo = hz_to_mel(kMelLowHz), hi = hz_to_mel(kMelHighHz);
    std::vector<double> edges(kProxyMelBands + 2);
    for (int i = 0; i < kProxyMelBands + 2; ++i) edges[i] = mel_to_hz(lo + (hi - lo) * i / (kProxyMelBands + 1));
    filters.assign(kProxyMelBands, std::vector<double>(kBins, 0.0));
    for (int b = 0; b < kProxyMelBands; ++b) {
      for (int k = 0; k < kBins; ++k) {
        const double f = static_cast<double>(k) * kSampleRate / kFftLen;
        double w = 0.0;
        if (f > edges[b] && f <= edges[b + 1]) w = (f - edges[b]) / (edges[b + 1] - edges[b]);
        else if (f > edges[b + 1] && f < edges[b + 2]) w = (edges[b + 2] - f) / (edges[b + 2] - edges[b + 1]);
        filters[b][k] = w;
      }
    }
    double* in = fftw_alloc_real(kFftLen);
    fftw_complex* out = fftw_alloc_complex(kBins);
    plan = fftw_plan_dft_r2c_1d(kFftLen, in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
  }
};

// Planner calls are not thread-safe in FFTW; the plan is built once and then
// only used through the new-array execute interface, which is.
const MelFrontend& frontend() {
  static const MelFrontend instance;
  return instance;
}

struct FftwBuffers {
  double* in = fftw_alloc_real(kFftLen);
  fftw_complex* out = fftw_alloc_complex(kBins);
  ~FftwBuffers() {
    fftw_free(in);
    fftw_free(out);
  }
};

void require_same_dim(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine_similarity: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
}

double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

SpeakerEmbedding proxy_embedding(const Waveform& w, std::string utterance_id) {
  if (w.sample_rate_hz != kSampleRate) throw Error("proxy_embedding: expected 16 kHz audio");
  if (w.size() < static_cast<std::size_t>(kSampleRate / 2)) throw Error("proxy_embedding: audio shorter than 0.5 s");
  if (std::all_of(w.samples.begin(), w.samples.end(), [](double x) { return x == 0.0; })) {
    throw Error("proxy_embedding: audio is all zeros");
  }
  const MelFrontend& fe = frontend();
  FftwBuffers buf;
  const std::size_t frames = 1 + (w.size() - kFrameLen) / kHop;
  std::vector<std::array<double, kProxyMelBands>> logmel(frames);
  std::vector<double> energy(frames, 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    const double* frame = w.samples.data() + f * kHop;
    for (int n = 0; n < kFrameLen; ++n) buf.in[n] = frame[n] * fe.window[n];
    std::fill(buf.in + kFrameLen, buf.in + kFftLen, 0.0);
    fftw_execute_dft_r2c(fe.plan, buf.in, buf.out);
    for (int b = 0; b < kProxyMelBands; ++b) {
      double e = 0.0;
      for (int k = 0; k < kBins; ++k) {
        if (fe.filters[b][k] != 0.0) e += fe.filters[b][k] * (buf.out[k][0] * buf.out[k][0] + buf.out[k][1] * buf.out[k][1]);
      }
      logmel[f][b] = std::log(e + 1e-10);
      energy[f] += e;
    }
  }
  // statistics over active frames only: within 40 dB of the loudest frame
  const double gate = *std::max_element(energy.begin(), energy.end()) * 1e-4;
  std::vector<double> sum(kProxyMelBands, 0.0), sum_sq(kProxyMelBands, 0.0);
  std::size_t active = 0;
  for (std::size_t f = 0; f < frames; ++f) {
    if (energy[f] < gate) continue;
    ++active;
    for (int b = 0; b < kProxyMelBands; ++b) {
      sum[b] += logmel[f][b];
      sum_sq[b] += logmel[f][b] * logmel[f][b];
    }
  }
  SpeakerEmbedding emb{std::move(utterance_id), std::vector<double>(kProxyDim)};
  const double n = static_cast<double>(active);
  for (int b = 0; b < kProxyMelBands; ++b) {
    const double mean = sum[b] / n;
    emb.vector[b] = mean;
    emb.vector[kProxyMelBands + b] = std::sqrt(std::max(0.0, sum_sq[b] / n - mean * mean));
  }
  // remove the band-level offset and linear tilt of the mean profile; only centre the spread profile
  const double mid = (kProxyMelBands - 1) / 2.0;
  double mean_level = 0.0, slope_num = 0.0, slope_den = 0.0, spread_level = 0.0;
  for (int b = 0; b < kProxyMelBands; ++b) {
    mean_level += emb.vector[b];
    spread_level += emb.vector[kProxyMelBands + b];
  }
  mean_level /= kProxyMelBands;
  spread_level /= kProxyMelBands;
  for (int b = 0; b < kProxyMelBands; ++b) {
    slope_num += (b - mid) * (emb.vector[b] - mean_level);
    slope_den += (b - mid) * (b - mid);
  }
  const double slope = slope_num / slope_den;
  for (int b = 0; b < kProxyMelBands; ++b) {
    emb.vector[b] -= mean_level + slope * (b - mid);
    emb.vector[kProxyMelBands + b] -= spread_level;
  }
  const double norm = l2(emb.vector);
  if (!(norm > 0.0)) throw Error("proxy_embedding: degenerate spectrum");
  for (double& x : emb.vector) x /= norm;
  return emb;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  require_same_dim(a, b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw std::invalid_argument("cosine_similarity: zero vector");
  // Each term is a symmetric product, so swapping the arguments gives the same bits.
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double cosine_similarity(const SpeakerEmbedding& a, const SpeakerEmbedding& b) {
  return cosine_similarity(a.vector, b.vector);
}

double clamp_unit(double s) { return std::max(0.0, std::min(1.0, s)); }

int quantize_similarity(double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("quantize_similarity: score outside [0, 1]");
  return std::min(kNumSimilarityLevels, static_cast<int>(std::floor(kNumSimilarityLevels * s)) + 1);
}

std::string segment_key(const std::string& utterance_id, double start_s, double len_s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "@%.4f+%.4f", start_s, len_s);
  return utterance_id + buf;
}

EmbeddingMap load_embeddings(const std::filesystem::path& path, EmbeddingFileHeader* header_out) {
  auto in = detail::open_for_read(path);
  EmbeddingMap out;
  std::optional<EmbeddingFileHeader> header;
  detail::for_each_jsonl_line(in, [&](std::size_t line_no, const std::string& text) {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::exception& e) {
      // Python's json module writes NaN/Infinity as bare tokens; name the embedding when we can
      static const std::regex id_re(R"re("utterance_id"\s*:\s*"([^"\\]*)")re");
      static const std::regex nonfinite_re(R"re([:,\[]\s*-?(NaN|Infinity)\b)re");
      std::smatch id;
      const std::string who = std::regex_search(text, id, id_re) ? "embedding '" + id[1].str() + "': " : "";
      if (std::regex_search(text, nonfinite_re)) throw ManifestError(path.string(), line_no, who + "non-finite value");
      throw ManifestError(path.string(), line_no, who + "malformed JSON: " + e.what());
    }
    try {
      FieldReader f(j);
      if (!header) {
        EmbeddingFileHeader h;
        h.format = f.string("format");
        if (h.format != kEmbeddingFormat) throw SchemaError("unsupported embedding format '" + h.format + "'");
        h.dim = static_cast<int>(f.integer("dim"));
        if (h.dim <= 0) throw SchemaError("header dim must be > 0");
        h.source_model = f.string("source_model");
        f.finish();
        header = h;
        return;
      }
      SpeakerEmbedding e;
      e.utterance_id = f.string("utterance_id");
      const auto dim = f.integer("dim");
      e.vector = f.numbers("vector");
      f.finish();
      const std::string who = "embedding '" + e.utterance_id + "': ";
      if (dim != header->dim || e.vector.size() != static_cast<std::size_t>(header->dim)) {
        throw SchemaError(who + "dim " + std::to_string(e.vector.size()) + " != header dim " +
                          std::to_string(header->dim));
      }
      if (!std::all_of(e.vector.begin(), e.vector.end(), [](double x) { return std::isfinite(x); })) {
        throw SchemaError(who + "non-finite value");
      }
      const double norm = l2(e.vector);
      if (std::abs(norm - 1.0) > 1e-3) throw SchemaError(who + "norm " + std::to_string(norm) + " is not unit");
      for (double& x : e.vector) x /= norm;
      if (out.contains(e.utterance_id)) throw SchemaError(who + "duplicate utterance id");
      out.emplace(e.utterance_id, std::move(e));
    } catch (const SchemaError& e) {
      throw ManifestError(path.string(), line_no, e.what());
    }
  });
  if (header_out && header) *header_out = *header;
  return out;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingFileHeader& header,
                      const std::vector<SpeakerEmbedding>& embeddings) {
  std::unordered_set<std::string> seen;
  std::string body = Json{{"format", header.format}, {"dim", header.dim}, {"source_model", header.source_model}}.dump();
  body += '\n';
  for (const auto& e : embeddings) {
    if (e.dim() != static_cast<std::size_t>(header.dim)) throw Error("write_embeddings: dim mismatch for " + e.utterance_id);
    if (!seen.insert(e.utterance_id).second) throw Error("write_embeddings: duplicate id " + e.utterance_id);
    body += Json{{"utterance_id", e.utterance_id}, {"dim", header.dim}, {"vector", e.vector}}.dump();
    body += '\n';
  }
  auto out = detail::open_for_write(path);
  out << body;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace tsforge
