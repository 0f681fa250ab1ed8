#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tsforge/eval.hpp"
#include "tsforge/manifest.hpp"
#include "tsforge/wav.hpp"

namespace tsforge {

// Parameters of a synthetic talker: glottal pitch, vocal-tract length
// (formant scaling) and harmonic roll-off.
struct Voice {
  double f0_hz = 120.0;
  double formant_scale = 1.0;
  double rolloff = 0.8;
  double timbre_hz = 2800.0;  // fixed resonance shared by every vowel of this voice
};

// Vowel-like syllables over a harmonic source with per-speaker formants.
// Deterministic in (voice, seed); peak is normalized to 0.5.
Waveform synthesize_speech(const Voice& voice, double duration_s, std::uint64_t seed);

// Writes the 10-utterance demo corpus (5 speakers x 2 utterances, mixed
// genders) to out_dir/audio/*.wav and out_dir/corpus.jsonl.
Manifest<Utterance> write_demo_corpus(const std::filesystem::path& out_dir, std::uint64_t seed);

struct PredictionProfile {
  double p_format_error = 0.1;
  double p_content_error = 0.3;
};

struct SimulatedPredictions {
  Manifest<PredictionRecord> predictions;  // scored: format_ok and wer filled in
  Manifest<EvalPair> eval_pairs;
};

// Stand-in for decoding a model over a reference set: perfect outputs,
// word-level corruptions and broken formats at the profile's rates.
SimulatedPredictions simulate_predictions(const Manifest<RefRecord>& refs, const PredictionProfile& profile,
                                          std::uint64_t seed);

}  // namespace tsforge
