#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "tsforge/manifest.hpp"
#include "tsforge/rng.hpp"
#include "tsforge/wav.hpp"

namespace tsforge {

inline constexpr double kSourceRms = 0.05;
inline constexpr double kReferenceLenS = 3.0;
inline constexpr double kSilenceLenS = 3.0;
inline constexpr int kMaxSpeakers = 3;

// Seconds within the mixture during which one speaker's source is present.
struct SpeakerInterval {
  std::string speaker_id;
  double start_s = 0.0;
  double end_s = 0.0;

  double duration_s() const { return end_s - start_s; }
  bool operator==(const SpeakerInterval&) const = default;
};

struct MixtureSource {
  std::string utterance_id;
  SpeakerInterval interval;
  double gain = 1.0;  // linear factor applied before summation (RMS normalization)

  bool operator==(const MixtureSource&) const = default;
};

struct ReferenceSegment {
  std::string utterance_id;
  double start_s = 0.0;
  double len_s = 0.0;
  double gain = 1.0;

  bool operator==(const ReferenceSegment&) const = default;
};

// One synthesized sample with a chosen target. A mixture with k speakers
// yields k records sharing mixture_id, one per target_index.
struct MixtureRecord {
  std::string id;
  std::string mixture_id;
  std::vector<MixtureSource> sources;
  std::size_t target_index = 0;
  ReferenceSegment reference;
  std::string mixture_audio_path;
  std::string model_input_audio_path;
  int num_speakers = 1;
  double total_duration_s = 0.0;
  double overlap_s = 0.0;
  double peak_scale = 1.0;  // 1/peak when the summed mixture clipped, else 1

  const MixtureSource& target() const { return sources.at(target_index); }
  bool operator==(const MixtureRecord&) const = default;
};

template <>
struct RecordTraits<MixtureRecord> {
  static constexpr std::string_view kind = "mixture";
  static const std::string& id(const MixtureRecord& r) { return r.id; }
  static Json to_json(const MixtureRecord& r);
  static MixtureRecord from_json(const Json& j);
};

// Throws SchemaError naming the first violated invariant. With a corpus, also
// checks speaker consistency of the reference and interval durations.
void check_mixture_record(const MixtureRecord& r, const Manifest<Utterance>* corpus = nullptr);

double rms(std::span<const double> samples);

// Scales w to the given RMS. Throws on (near-)silent input.
Waveform rms_normalize(const Waveform& w, double target_rms);

struct MixInput {
  const Waveform* wave = nullptr;
  double offset_s = 0.0;
  std::string speaker_id;
};

struct MixResult {
  Waveform mixture;
  std::vector<SpeakerInterval> intervals;
  double peak_scale = 1.0;
};

// Sample-wise sum of offset-padded sources (1 to 3). With peak protection on,
// a mixture whose peak exceeds 1 is divided by that peak.
MixResult mix(std::span<const MixInput> sources, bool peak_protect = true);

// Total time covered by at least two intervals.
double overlap_duration(std::span<const SpeakerInterval> intervals);

struct SegmentChoice {
  double start_s = 0.0;
  double len_s = 0.0;
};

// Start is drawn on the 16 kHz sample grid; utterances shorter than len_s are used whole.
SegmentChoice select_reference_segment(const Utterance& u, Rng& rng, double len_s = kReferenceLenS);

Waveform concat_with_silence(const Waveform& reference, const Waveform& mixture, double silence_s = kSilenceLenS);

// Samples [start_s, start_s + len_s) of w, clipped to its length.
Waveform slice(const Waveform& w, double start_s, double len_s);

struct MixOptions {
  int num_speakers = 2;
  // Number of mixtures; 0 means one per eligible utterance. Mixture m uses
  // eligible utterance m mod N as its first source.
  std::size_t count = 0;
  double max_offset_s = 0.0;
  double ref_len_s = kReferenceLenS;
};

// Plans mixtures from durations alone; gains and peak_scale stay 1 until
// render_mixture fills them in.
Manifest<MixtureRecord> generate_mixture_set(const Manifest<Utterance>& corpus, const MixOptions& options,
                                             std::uint64_t seed);

// Thread-safe, load-once cache of corpus audio.
class AudioCache {
 public:
  AudioCache(const Manifest<Utterance>& corpus, std::filesystem::path audio_root);

  std::shared_ptr<const Waveform> get(const std::string& utterance_id);
  const Utterance& utterance(const std::string& utterance_id) const;

 private:
  std::filesystem::path audio_root_;
  std::map<std::string, Utterance, std::less<>> utterances_;
  std::map<std::string, std::shared_ptr<const Waveform>, std::less<>> loaded_;
  std::mutex mutex_;
};

struct RenderedMixture {
  MixtureRecord record;  // with gains and peak_scale filled in
  Waveform mixture;
  Waveform model_input;
};

// Builds the mixture and the model input (reference, silence, mixture) for
// one record without touching the filesystem beyond reading sources.
RenderedMixture render_mixture(const MixtureRecord& record, AudioCache& audio);

// render_mixture plus WAV output under out_dir. The shared mixture file is
// written only by the target_index 0 record.
MixtureRecord render_mixture_to_disk(const MixtureRecord& record, AudioCache& audio,
                                     const std::filesystem::path& out_dir);

}  // namespace tsforge
