#include "tsforge/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

namespace tsforge {

namespace {

std::size_t to_samples(double seconds, int rate) {
  if (seconds < 0.0) throw std::invalid_argument("negative duration or offset");
  return static_cast<std::size_t>(std::llround(seconds * rate));
}

std::string mixture_name(int k, std::size_t m) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "mix%d-%06zu", k, m);
  return buf;
}

}  // namespace

Json RecordTraits<MixtureRecord>::to_json(const MixtureRecord& r) {
  Json sources = Json::array();
  for (const auto& s : r.sources) {
    sources.push_back(Json{{"utterance_id", s.utterance_id},
                           {"speaker_id", s.interval.speaker_id},
                           {"start_s", s.interval.start_s},
                           {"end_s", s.interval.end_s},
                           {"gain", s.gain}});
  }
  return Json{{"id", r.id},
              {"mixture_id", r.mixture_id},
              {"num_speakers", r.num_speakers},
              {"sources", std::move(sources)},
              {"target_index", r.target_index},
              {"reference",
               Json{{"utterance_id", r.reference.utterance_id},
                    {"ref_start_s", r.reference.start_s},
                    {"ref_len_s", r.reference.len_s},
                    {"gain", r.reference.gain}}},
              {"mixture_audio_path", r.mixture_audio_path},
              {"model_input_audio_path", r.model_input_audio_path},
              {"total_duration_s", r.total_duration_s},
              {"overlap_s", r.overlap_s},
              {"peak_scale", r.peak_scale}};
}

MixtureRecord RecordTraits<MixtureRecord>::from_json(const Json& j) {
  FieldReader f(j);
  f.schema_v1();
  MixtureRecord r;
  r.id = f.string("id");
  r.mixture_id = f.string("mixture_id");
  r.num_speakers = static_cast<int>(f.integer("num_speakers"));
  for (const Json& sj : f.array("sources")) {
    FieldReader s(sj);
    MixtureSource src;
    src.utterance_id = s.string("utterance_id");
    src.interval.speaker_id = s.string("speaker_id");
    src.interval.start_s = s.number("start_s");
    src.interval.end_s = s.number("end_s");
    src.gain = s.number("gain");
    s.finish();
    r.sources.push_back(std::move(src));
  }
  const auto target = f.integer("target_index");
  if (target < 0) throw SchemaError("field 'target_index' must be >= 0");
  r.target_index = static_cast<std::size_t>(target);
  {
    FieldReader ref(f.object("reference"));
    r.reference.utterance_id = ref.string("utterance_id");
    r.reference.start_s = ref.number("ref_start_s");
    r.reference.len_s = ref.number("ref_len_s");
    r.reference.gain = ref.number("gain");
    ref.finish();
  }
  r.mixture_audio_path = f.string("mixture_audio_path");
  r.model_input_audio_path = f.string("model_input_audio_path");
  r.total_duration_s = f.number("total_duration_s");
  r.overlap_s = f.number("overlap_s");
  r.peak_scale = f.number("peak_scale");
  f.finish();
  check_mixture_record(r);
  return r;
}

void check_mixture_record(const MixtureRecord& r, const Manifest<Utterance>* corpus) {
  if (r.id.empty() || r.mixture_id.empty()) throw SchemaError("mixture record needs id and mixture_id");
  if (r.num_speakers < 1 || r.num_speakers > kMaxSpeakers) throw SchemaError("num_speakers must be in [1, 3]");
  if (r.sources.size() != static_cast<std::size_t>(r.num_speakers)) {
    throw SchemaError("sources count does not match num_speakers");
  }
  if (r.target_index >= r.sources.size()) throw SchemaError("target_index out of range");
  double max_end = 0.0;
  for (const auto& s : r.sources) {
    if (s.interval.start_s < 0.0 || !(s.interval.end_s > s.interval.start_s)) {
      throw SchemaError("source '" + s.utterance_id + "' has an ill-formed interval");
    }
    max_end = std::max(max_end, s.interval.end_s);
  }
  if (std::abs(r.total_duration_s - max_end) > 1e-9) throw SchemaError("total_duration_s != max source end");
  if (r.overlap_s < 0.0 || r.overlap_s > r.total_duration_s + 1e-9) throw SchemaError("overlap_s out of range");
  if (r.reference.utterance_id == r.target().utterance_id) {
    throw SchemaError("reference must come from a different utterance than the target source");
  }
  if (r.reference.start_s < 0.0 || !(r.reference.len_s > 0.0)) throw SchemaError("ill-formed reference segment");
  if (!(r.peak_scale > 0.0) || r.peak_scale > 1.0) throw SchemaError("peak_scale must be in (0, 1]");

  if (!corpus) return;
  std::unordered_map<std::string, const Utterance*> by_id;
  for (const auto& u : corpus->records) by_id.emplace(u.id, &u);
  auto lookup = [&](const std::string& id) -> const Utterance& {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw SchemaError("utterance '" + id + "' not in corpus");
    return *it->second;
  };
  const double period = 1.0 / kSampleRate;
  for (const auto& s : r.sources) {
    const Utterance& u = lookup(s.utterance_id);
    if (u.speaker_id != s.interval.speaker_id) throw SchemaError("source speaker mismatch for '" + u.id + "'");
    if (std::abs(s.interval.duration_s() - u.duration_s) > period) {
      throw SchemaError("interval length of '" + u.id + "' differs from utterance duration");
    }
  }
  for (std::size_t i = 0; i < r.sources.size(); ++i) {
    for (std::size_t j = i + 1; j < r.sources.size(); ++j) {
      if (r.sources[i].interval.speaker_id == r.sources[j].interval.speaker_id) {
        throw SchemaError("mixture sources must be distinct speakers");
      }
    }
  }
  const Utterance& ref = lookup(r.reference.utterance_id);
  if (ref.speaker_id != r.target().interval.speaker_id) throw SchemaError("reference speaker differs from target");
  if (r.reference.start_s + r.reference.len_s > ref.duration_s + period) {
    throw SchemaError("reference segment exceeds its utterance");
  }
}

double rms(std::span<const double> samples) {
  if (samples.empty()) return 0.0;
  long double acc = 0.0L;
  for (double x : samples) acc += static_cast<long double>(x) * x;
  return static_cast<double>(std::sqrt(acc / samples.size()));
}

Waveform rms_normalize(const Waveform& w, double target_rms) {
  const double current = rms(w.samples);
  if (!(current > 1e-8)) throw Error("rms_normalize: input is silent");
  if (!(target_rms >= 0.0)) throw std::invalid_argument("rms_normalize: target_rms must be >= 0");
  Waveform out = w;
  const double g = target_rms / current;
  for (double& x : out.samples) x *= g;
  return out;
}

MixResult mix(std::span<const MixInput> sources, bool peak_protect) {
  if (sources.empty()) throw std::invalid_argument("mix: no sources");
  if (sources.size() > static_cast<std::size_t>(kMaxSpeakers)) throw std::invalid_argument("mix: more than 3 sources");
  const int rate = sources.front().wave->sample_rate_hz;
  std::size_t length = 0;
  std::vector<std::size_t> offsets;
  for (const auto& s : sources) {
    if (!s.wave) throw std::invalid_argument("mix: null waveform");
    if (s.wave->sample_rate_hz != rate) throw std::invalid_argument("mix: sample rate mismatch");
    offsets.push_back(to_samples(s.offset_s, rate));
    length = std::max(length, offsets.back() + s.wave->size());
  }
  MixResult result;
  result.mixture.sample_rate_hz = rate;
  result.mixture.samples.assign(length, 0.0);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& src = sources[i].wave->samples;
    std::transform(src.begin(), src.end(), result.mixture.samples.begin() + static_cast<std::ptrdiff_t>(offsets[i]),
                   result.mixture.samples.begin() + static_cast<std::ptrdiff_t>(offsets[i]), std::plus<>());
    const double start = static_cast<double>(offsets[i]) / rate;
    result.intervals.push_back({sources[i].speaker_id, start, start + sources[i].wave->duration_s()});
  }
  if (peak_protect) {
    double peak = 0.0;
    for (double x : result.mixture.samples) peak = std::max(peak, std::abs(x));
    if (peak > 1.0) {
      for (double& x : result.mixture.samples) x /= peak;
      result.peak_scale = 1.0 / peak;
    }
  }
  return result;
}

double overlap_duration(std::span<const SpeakerInterval> intervals) {
  std::vector<std::pair<double, int>> events;
  events.reserve(intervals.size() * 2);
  for (const auto& iv : intervals) {
    if (!(iv.end_s > iv.start_s)) continue;
    events.emplace_back(iv.start_s, +1);
    events.emplace_back(iv.end_s, -1);
  }
  // Ends sort before starts at equal times: touching intervals do not overlap.
  std::sort(events.begin(), events.end());
  double total = 0.0;
  int active = 0;
  double last = 0.0;
  for (const auto& [t, delta] : events) {
    if (active >= 2) total += t - last;
    active += delta;
    last = t;
  }
  return total;
}

SegmentChoice select_reference_segment(const Utterance& u, Rng& rng, double len_s) {
  if (!(u.duration_s > 0.0)) throw Error("select_reference_segment: utterance '" + u.id + "' has zero length");
  if (!(len_s > 0.0)) throw std::invalid_argument("select_reference_segment: len_s must be > 0");
  if (u.duration_s < len_s) return {0.0, u.duration_s};
  const auto slack = static_cast<std::size_t>(std::floor((u.duration_s - len_s) * kSampleRate + 1e-9));
  const std::size_t start = rng.index(slack + 1);
  return {static_cast<double>(start) / kSampleRate, len_s};
}

Waveform concat_with_silence(const Waveform& reference, const Waveform& mixture, double silence_s) {
  if (reference.sample_rate_hz != mixture.sample_rate_hz) {
    throw std::invalid_argument("concat_with_silence: sample rate mismatch");
  }
  Waveform out;
  out.sample_rate_hz = reference.sample_rate_hz;
  const std::size_t gap = to_samples(silence_s, out.sample_rate_hz);
  out.samples.reserve(reference.size() + gap + mixture.size());
  out.samples.insert(out.samples.end(), reference.samples.begin(), reference.samples.end());
  out.samples.insert(out.samples.end(), gap, 0.0);
  out.samples.insert(out.samples.end(), mixture.samples.begin(), mixture.samples.end());
  return out;
}

Waveform slice(const Waveform& w, double start_s, double len_s) {
  const std::size_t begin = std::min(to_samples(start_s, w.sample_rate_hz), w.size());
  const std::size_t end = std::min(begin + to_samples(len_s, w.sample_rate_hz), w.size());
  Waveform out;
  out.sample_rate_hz = w.sample_rate_hz;
  out.samples.assign(w.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     w.samples.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

Manifest<MixtureRecord> generate_mixture_set(const Manifest<Utterance>& corpus, const MixOptions& options,
                                             std::uint64_t seed) {
  const int k = options.num_speakers;
  if (k < 1 || k > kMaxSpeakers) throw std::invalid_argument("generate_mixture_set: speakers must be 1, 2 or 3");
  if (options.max_offset_s < 0.0) throw std::invalid_argument("generate_mixture_set: negative max offset");

  // Speakers in order of first appearance; each needs one utterance for the
  // mixture and another for the reference.
  std::vector<std::string> speaker_order;
  std::unordered_map<std::string, std::vector<std::size_t>> by_speaker;
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    const auto& u = corpus.records[i];
    auto [it, inserted] = by_speaker.try_emplace(u.speaker_id);
    if (inserted) speaker_order.push_back(u.speaker_id);
    it->second.push_back(i);
  }
  std::vector<std::string> eligible_speakers;
  for (const auto& s : speaker_order) {
    if (by_speaker[s].size() >= 2) eligible_speakers.push_back(s);
  }
  if (eligible_speakers.size() < static_cast<std::size_t>(k)) {
    throw Error("generate_mixture_set: need " + std::to_string(k) + " speakers with at least 2 utterances, have " +
                std::to_string(eligible_speakers.size()));
  }
  std::vector<std::size_t> eligible_utts;
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    const auto& u = corpus.records[i];
    if (by_speaker[u.speaker_id].size() >= 2 && u.duration_s > 0.0) eligible_utts.push_back(i);
  }
  if (eligible_utts.empty()) throw Error("generate_mixture_set: no usable utterances");

  const std::size_t count = options.count ? options.count : eligible_utts.size();
  const std::size_t max_offset = static_cast<std::size_t>(std::floor(options.max_offset_s * kSampleRate + 1e-9));

  Manifest<MixtureRecord> out;
  out.records.reserve(count * static_cast<std::size_t>(k));
  for (std::size_t m = 0; m < count; ++m) {
    const std::string mixture_id = mixture_name(k, m);
    Rng rng(seed, mixture_id);

    std::vector<std::size_t> chosen{eligible_utts[m % eligible_utts.size()]};
    const std::string& first_speaker = corpus.records[chosen[0]].speaker_id;
    std::vector<const std::string*> others;
    for (const auto& s : eligible_speakers) {
      if (s != first_speaker) others.push_back(&s);
    }
    for (std::size_t pick : rng.sample_without_replacement(others.size(), static_cast<std::size_t>(k - 1))) {
      const auto& utts = by_speaker[*others[pick]];
      chosen.push_back(utts[rng.index(utts.size())]);
    }

    std::vector<MixtureSource> sources;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      const Utterance& u = corpus.records[chosen[i]];
      const std::size_t offset = (i == 0 || max_offset == 0) ? 0 : rng.index(max_offset + 1);
      const double start = static_cast<double>(offset) / kSampleRate;
      sources.push_back({u.id, {u.speaker_id, start, start + u.duration_s}, 1.0});
    }
    std::vector<SpeakerInterval> intervals;
    double total = 0.0;
    for (const auto& s : sources) {
      intervals.push_back(s.interval);
      total = std::max(total, s.interval.end_s);
    }
    const double overlap = overlap_duration(intervals);

    for (std::size_t t = 0; t < sources.size(); ++t) {
      MixtureRecord r;
      r.id = mixture_id + "-t" + std::to_string(t);
      r.mixture_id = mixture_id;
      r.sources = sources;
      r.target_index = t;
      r.num_speakers = k;
      r.total_duration_s = total;
      r.overlap_s = overlap;
      r.mixture_audio_path = "mixtures/" + mixture_id + ".wav";
      r.model_input_audio_path = "inputs/" + r.id + ".wav";

      Rng ref_rng(seed, r.id);
      std::vector<std::size_t> candidates;
      for (std::size_t idx : by_speaker[sources[t].interval.speaker_id]) {
        if (corpus.records[idx].id != sources[t].utterance_id && corpus.records[idx].duration_s > 0.0) {
          candidates.push_back(idx);
        }
      }
      if (candidates.empty()) throw Error("generate_mixture_set: no reference utterance for " + sources[t].utterance_id);
      const Utterance& ref = corpus.records[candidates[ref_rng.index(candidates.size())]];
      const SegmentChoice seg = select_reference_segment(ref, ref_rng, options.ref_len_s);
      r.reference = {ref.id, seg.start_s, seg.len_s, 1.0};
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

AudioCache::AudioCache(const Manifest<Utterance>& corpus, std::filesystem::path audio_root)
    : audio_root_(std::move(audio_root)) {
  for (const auto& u : corpus.records) utterances_.emplace(u.id, u);
}

const Utterance& AudioCache::utterance(const std::string& utterance_id) const {
  auto it = utterances_.find(utterance_id);
  if (it == utterances_.end()) throw Error("utterance '" + utterance_id + "' not in corpus");
  return it->second;
}

std::shared_ptr<const Waveform> AudioCache::get(const std::string& utterance_id) {
  const Utterance& u = utterance(utterance_id);
  {
    std::lock_guard lock(mutex_);
    if (auto it = loaded_.find(utterance_id); it != loaded_.end()) return it->second;
  }
  auto wave = std::make_shared<const Waveform>(read_wav(resolve_audio_path(audio_root_, u.audio_path)));
  std::lock_guard lock(mutex_);
  return loaded_.try_emplace(utterance_id, std::move(wave)).first->second;
}

RenderedMixture render_mixture(const MixtureRecord& record, AudioCache& audio) {
  RenderedMixture out{record, {}, {}};
  std::vector<Waveform> normalized;
  normalized.reserve(record.sources.size());
  for (auto& src : out.record.sources) {
    auto wave = audio.get(src.utterance_id);
    const double level = rms(wave->samples);
    if (!(level > 1e-8)) throw Error("source '" + src.utterance_id + "' is silent");
    src.gain = kSourceRms / level;
    normalized.push_back(rms_normalize(*wave, kSourceRms));
  }
  std::vector<MixInput> inputs;
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    inputs.push_back({&normalized[i], record.sources[i].interval.start_s, record.sources[i].interval.speaker_id});
  }
  MixResult mixed = mix(inputs);
  out.record.peak_scale = mixed.peak_scale;
  out.mixture = std::move(mixed.mixture);

  auto ref_wave = audio.get(record.reference.utterance_id);
  Waveform ref = slice(*ref_wave, record.reference.start_s, record.reference.len_s);
  const double ref_level = rms(ref.samples);
  if (!(ref_level > 1e-8)) throw Error("reference segment of '" + record.reference.utterance_id + "' is silent");
  out.record.reference.gain = kSourceRms / ref_level;
  ref = rms_normalize(ref, kSourceRms);
  MixInput ref_input{&ref, 0.0, ""};
  ref = mix(std::span(&ref_input, 1)).mixture;

  out.model_input = concat_with_silence(ref, out.mixture, kSilenceLenS);
  return out;
}

MixtureRecord render_mixture_to_disk(const MixtureRecord& record, AudioCache& audio,
                                     const std::filesystem::path& out_dir) {
  RenderedMixture r = render_mixture(record, audio);
  if (record.target_index == 0) write_wav(out_dir / r.record.mixture_audio_path, r.mixture);
  write_wav(out_dir / r.record.model_input_audio_path, r.model_input);
  return std::move(r.record);
}

}  // namespace tsforge
