#include "tsforge/demo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "tsforge/reward.hpp"
#include "tsforge/rng.hpp"

namespace tsforge {

namespace {

struct Vowel {
  std::array<double, 3> formants;
};

constexpr std::array<Vowel, 5> kVowels{{
    {{730.0, 1090.0, 2440.0}},
    {{270.0, 2290.0, 3010.0}},
    {{300.0, 870.0, 2240.0}},
    {{530.0, 1840.0, 2480.0}},
    {{570.0, 840.0, 2410.0}},
}};
constexpr std::array<double, 3> kBandwidths{90.0, 110.0, 160.0};

struct Resonator {
  double a1 = 0.0, a2 = 0.0, gain = 1.0;
  double y1 = 0.0, y2 = 0.0;

  void tune(double freq, double bw) {
    const double r = std::exp(-std::numbers::pi * bw / kSampleRate);
    a1 = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq / kSampleRate);
    a2 = -r * r;
    gain = 1.0 - r;
  }
  double operator()(double x) {
    const double y = gain * x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

const std::vector<std::string>& demo_words() {
  static const std::vector<std::string> words{
      "THE",     "HOUSE",  "STOOD",  "NEAR",   "RIVER",  "WHERE",  "CHILDREN", "PLAYED", "EVERY",  "MORNING",
      "SHE",     "OPENED", "LETTER", "SLOWLY", "READ",   "AGAIN",  "WIND",     "MOVED",  "THROUGH", "TALL",
      "GRASS",   "OLD",    "MAN",    "SPOKE",  "OF",     "DISTANT", "TOWNS",   "AND",    "SHIPS",  "HE",
      "WALKED",  "ALONG",  "QUIET",  "ROAD",   "UNTIL",  "EVENING", "LIGHT",   "FADED",  "BEHIND", "HILLS"};
  return words;
}

std::string make_transcript(Rng& rng, std::size_t n_words) {
  const auto& words = demo_words();
  std::string out;
  for (std::size_t i = 0; i < n_words; ++i) {
    if (i) out += ' ';
    out += words[rng.index(words.size())];
  }
  return out;
}

}  // namespace

Waveform synthesize_speech(const Voice& voice, double duration_s, std::uint64_t seed) {
  Rng rng(seed);
  const auto total = static_cast<std::size_t>(std::llround(duration_s * kSampleRate));
  Waveform w;
  w.samples.assign(total, 0.0);
  std::array<Resonator, 3> tract;
  Resonator timbre;
  timbre.tune(voice.timbre_hz, 300.0);
  double phase = 0.0;
  std::size_t pos = static_cast<std::size_t>(rng.uniform(0.05, 0.15) * kSampleRate);
  while (pos < total) {
    const auto syllable = static_cast<std::size_t>(rng.uniform(0.12, 0.28) * kSampleRate);
    const Vowel& v = kVowels[rng.index(kVowels.size())];
    for (std::size_t f = 0; f < 3; ++f) {
      tract[f].tune(v.formants[f] * voice.formant_scale * rng.uniform(0.95, 1.05), kBandwidths[f]);
    }
    const double f0_start = voice.f0_hz * rng.uniform(0.9, 1.1);
    const double f0_end = voice.f0_hz * rng.uniform(0.85, 1.05);
    const bool consonant = rng.bernoulli(0.5);
    const auto burst = consonant ? static_cast<std::size_t>(0.04 * kSampleRate) : 0;
    double prev_noise = 0.0;
    for (std::size_t n = 0; n < burst && pos + n < total; ++n) {
      const double noise = rng.uniform(-1.0, 1.0);
      w.samples[pos + n] = 0.15 * (noise - prev_noise);
      prev_noise = noise;
    }
    pos += burst;
    for (std::size_t n = 0; n < syllable && pos + n < total; ++n) {
      const double t = static_cast<double>(n) / syllable;
      const double f0 = f0_start + (f0_end - f0_start) * t;
      phase += 2.0 * std::numbers::pi * f0 / kSampleRate;
      if (phase > 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;
      double source = 0.0;
      double amp = 1.0;
      const int harmonics = static_cast<int>(3800.0 / f0);
      for (int k = 1; k <= harmonics; ++k) {
        source += amp * std::sin(k * phase);
        amp *= voice.rolloff;
      }
      source += 0.02 * rng.uniform(-1.0, 1.0);
      double y = 0.0;
      for (auto& r : tract) y += r(source);
      y += 1.5 * timbre(source);
      const double env = std::sin(std::numbers::pi * t);
      w.samples[pos + n] += env * env * y;
    }
    pos += syllable + static_cast<std::size_t>(rng.uniform(0.03, 0.16) * kSampleRate);
  }
  for (double& x : w.samples) x += 1e-4 * rng.uniform(-1.0, 1.0);
  double peak = 0.0;
  for (double x : w.samples) peak = std::max(peak, std::abs(x));
  if (peak > 0.0) {
    for (double& x : w.samples) x *= 0.5 / peak;
  }
  return w;
}

Manifest<Utterance> write_demo_corpus(const std::filesystem::path& out_dir, std::uint64_t seed) {
  struct Speaker {
    const char* id;
    Gender gender;
    Voice voice;
  };
  const std::array<Speaker, 5> speakers{{
      {"spk1", Gender::female, {215.0, 1.18, 0.78, 3500.0}},
      {"spk2", Gender::male, {105.0, 0.94, 0.84, 1600.0}},
      {"spk3", Gender::female, {180.0, 1.08, 0.70, 2500.0}},
      {"spk4", Gender::male, {140.0, 1.02, 0.76, 4300.0}},
      {"spk5", Gender::female, {245.0, 1.26, 0.82, 2000.0}},
  }};
  Manifest<Utterance> corpus;
  for (const auto& spk : speakers) {
    for (int u = 1; u <= 2; ++u) {
      Utterance utt;
      utt.id = std::string(spk.id) + "-u" + std::to_string(u);
      utt.speaker_id = spk.id;
      utt.gender = spk.gender;
      utt.audio_path = "audio/" + utt.id + ".wav";
      Rng rng(seed, utt.id);
      const double seconds = 2.5 + std::round(rng.uniform(0.0, 2.5) * 100.0) / 100.0;
      utt.transcript = make_transcript(rng, static_cast<std::size_t>(std::round(seconds * 2.2)));
      const Waveform w = synthesize_speech(spk.voice, seconds, rng.next());
      write_wav(out_dir / utt.audio_path, w);
      utt.duration_s = w.duration_s();
      corpus.records.push_back(std::move(utt));
    }
  }
  write_manifest(corpus, out_dir / "corpus.jsonl");
  return corpus;
}

SimulatedPredictions simulate_predictions(const Manifest<RefRecord>& refs, const PredictionProfile& profile,
                                          std::uint64_t seed) {
  const auto& words = demo_words();
  SimulatedPredictions out;
  for (const RefRecord& ref : refs.records) {
    Rng rng(seed, "predict/" + ref.example_id);
    Words hyp = normalize_text(ref.transcript);
    const double u = rng.uniform();
    const bool format_error = u < profile.p_format_error;
    const bool content_error = !format_error && u < profile.p_format_error + profile.p_content_error;
    if (content_error || (format_error && rng.bernoulli(0.5))) {
      const std::size_t edits = 1 + rng.index(2);
      for (std::size_t e = 0; e < edits; ++e) {
        const std::size_t kind = rng.index(3);
        if (kind == 0 && !hyp.empty()) {
          hyp[rng.index(hyp.size())] = words[rng.index(words.size())];
        } else if (kind == 1 && hyp.size() > 1) {
          hyp.erase(hyp.begin() + static_cast<std::ptrdiff_t>(rng.index(hyp.size())));
        } else {
          hyp.insert(hyp.begin() + static_cast<std::ptrdiff_t>(rng.index(hyp.size() + 1)), words[rng.index(words.size())]);
        }
      }
    }
    std::string answer;
    for (std::size_t i = 0; i < hyp.size(); ++i) answer += (i ? " " : "") + hyp[i];
    const std::string think = rng.bernoulli(0.5) ? "" : "Audio information: mixed speech.";
    std::string raw;
    if (!format_error) {
      raw = serialize_target(think, answer);
    } else {
      switch (rng.index(4)) {
        case 0: raw = "<answer>" + answer + "</answer>"; break;
        case 1: raw = "<think>" + think + "</think><answer>" + answer; break;
        case 2: raw = serialize_target(think, answer) + " done"; break;
        default: raw = "<think>" + think + "<answer>" + answer + "</answer>"; break;
      }
    }
    const RewardBreakdown r = reward_total(raw, ref.transcript);
    PredictionRecord pred{ref.example_id, raw, r.r_format == 1.0,
                          static_cast<double>(r.counts.errors()) / r.counts.n_ref};
    out.predictions.records.push_back(std::move(pred));
    out.eval_pairs.records.push_back({ref.example_id, raw, ref.transcript});
  }
  return out;
}

}  // namespace tsforge
