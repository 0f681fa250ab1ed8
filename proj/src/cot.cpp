#include "tsforge/cot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "tsforge/reward.hpp"
#include "tsforge/rng.hpp"

namespace tsforge {

namespace {

using Fields = std::vector<std::pair<std::string_view, std::string>>;

std::string seconds(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", s);
  return buf;
}

std::string fill(const std::string& pattern, const Fields& fields) {
  std::string out;
  out.reserve(pattern.size() + 32);
  for (std::size_t i = 0; i < pattern.size();) {
    if (pattern[i] == '{') {
      const auto close = pattern.find('}', i);
      if (close != std::string::npos) {
        const std::string_view name(pattern.data() + i + 1, close - i - 1);
        auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return f.first == name; });
        if (it != fields.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += pattern[i++];
  }
  return out;
}

std::string list_speakers(const std::vector<std::size_t>& indices) {
  std::string out;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i) out += (i + 1 == indices.size()) ? " and " : ", ";
    out += std::to_string(indices[i] + 1);
  }
  return out;
}

}  // namespace

std::string_view to_string(Difficulty d) { return d == Difficulty::easy ? "easy" : "hard"; }

Difficulty parse_difficulty(std::string_view s) {
  if (s == "easy") return Difficulty::easy;
  if (s == "hard") return Difficulty::hard;
  throw SchemaError("invalid difficulty '" + std::string(s) + "' (expected easy or hard)");
}

const CotTemplate& default_template() {
  static const CotTemplate t{
      "cot-v1",
      "Transcribe the speech of the speaker in the reference audio from the mixed speech.",
      "Audio information: the input has a {ref_len}s reference speech, a {silence_len}s silence and a {mix_len}s "
      "speech with 1 speaker.",
      "Audio information: the input has a {ref_len}s reference speech, a {silence_len}s silence and a {mix_len}s "
      "mixed speech with {num_speakers} speakers, overlapping for {overlap}s.",
      "Reference speech: the reference speaker is {gender}.",
      "Speaker {index}: {start}s-{end}s, {gender}, similarity level {level}.",
      "Target speaker: there is only one speaker, so the target is Speaker {index}.",
      "Target speaker: Speaker {index} is the only {gender} speaker, matching the reference, with similarity level "
      "{level}. The target is Speaker {index}.",
      "Target speaker: among the {gender} speakers, Speaker {index} has the highest similarity level ({level}). The "
      "target is Speaker {index}.",
      "Target speaker: Speakers {tied} tie at the highest similarity level ({level}); Speaker {index} starts "
      "earliest. The target is Speaker {index}.",
      "Target speaker: no speaker matches the reference gender; Speaker {index} has the highest similarity level "
      "({level}). The target is Speaker {index}.",
      "\n",
  };
  return t;
}

CotTemplate load_template(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ManifestError(path.string(), 0, std::string("malformed template JSON: ") + e.what());
  }
  try {
    FieldReader f(j);
    CotTemplate t;
    t.version = f.string("version");
    t.prompt = f.string("prompt");
    t.audio_single = f.string("audio_single");
    t.audio_multi = f.string("audio_multi");
    t.reference = f.string("reference");
    t.speaker = f.string("speaker");
    t.infer_single = f.string("infer_single");
    t.infer_gender_only = f.string("infer_gender_only");
    t.infer_unique = f.string("infer_unique");
    t.infer_tie = f.string("infer_tie");
    t.infer_no_gender = f.string("infer_no_gender");
    t.separator = f.optional_string("separator").value_or("\n");
    f.finish();
    for (const std::string* s : {&t.prompt, &t.audio_single, &t.audio_multi, &t.reference, &t.speaker,
                                 &t.infer_single, &t.infer_gender_only, &t.infer_unique, &t.infer_tie,
                                 &t.infer_no_gender, &t.separator}) {
      if (contains_format_tag(*s)) throw SchemaError("template text must not contain think/answer tags");
    }
    return t;
  } catch (const SchemaError& e) {
    throw ManifestError(path.string(), 0, e.what());
  }
}

std::string CotExample::target() const { return serialize_target(think_text, answer_text); }

Json RecordTraits<CotExample>::to_json(const CotExample& r) {
  return Json{{"example_id", r.example_id},
              {"mixture_id", r.mixture_id},
              {"prompt_text", r.prompt_text},
              {"think_text", r.think_text},
              {"answer_text", r.answer_text},
              {"difficulty", to_string(r.difficulty)},
              {"think_included", r.think_included},
              {"inferred_index", r.inferred_index},
              {"template_version", r.template_version}};
}

CotExample RecordTraits<CotExample>::from_json(const Json& j) {
  FieldReader f(j);
  f.schema_v1();
  CotExample e;
  e.example_id = f.string("example_id");
  if (e.example_id.empty()) throw SchemaError("field 'example_id' must be non-empty");
  e.mixture_id = f.string("mixture_id");
  e.prompt_text = f.string("prompt_text");
  e.think_text = f.string("think_text");
  e.answer_text = f.string("answer_text");
  e.difficulty = parse_difficulty(f.string("difficulty"));
  e.think_included = f.boolean("think_included");
  const auto idx = f.integer("inferred_index");
  if (idx < 0) throw SchemaError("field 'inferred_index' must be >= 0");
  e.inferred_index = static_cast<std::size_t>(idx);
  e.template_version = f.string("template_version");
  f.finish();
  if (!e.think_included && !e.think_text.empty()) throw SchemaError("think_included is false but think_text is set");
  return e;
}

Difficulty label_difficulty(const PredictionRecord& pred) {
  if (!pred.scored()) {
    throw Error("label_difficulty: prediction '" + pred.example_id + "' has no format_ok/wer against ground truth");
  }
  return (*pred.format_ok && *pred.wer == 0.0) ? Difficulty::easy : Difficulty::hard;
}

TargetInference infer_target(const MixtureRecord& rec, const std::vector<Gender>& source_genders,
                             Gender reference_gender, const std::vector<int>& levels) {
  const std::size_t k = rec.sources.size();
  TargetInference out;
  if (k == 1) return out;

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < k; ++i) {
    if (source_genders[i] == reference_gender) candidates.push_back(i);
  }
  out.gender_filtered = !candidates.empty();
  if (candidates.empty()) {
    for (std::size_t i = 0; i < k; ++i) candidates.push_back(i);
  }
  int best = 0;
  for (std::size_t i : candidates) best = std::max(best, levels[i]);
  for (std::size_t i : candidates) {
    if (levels[i] == best) out.tied.push_back(i);
  }
  out.tie = out.tied.size() > 1;
  out.index = *std::min_element(out.tied.begin(), out.tied.end(), [&](std::size_t a, std::size_t b) {
    const double sa = rec.sources[a].interval.start_s, sb = rec.sources[b].interval.start_s;
    return sa != sb ? sa < sb : a < b;
  });
  if (!out.tie) out.tied.clear();
  return out;
}

CotExample render_cot(const MixtureRecord& rec, const Manifest<Utterance>& corpus, const std::vector<int>& levels,
                      const CotTemplate& tmpl) {
  std::unordered_map<std::string_view, const Utterance*> by_id;
  for (const auto& u : corpus.records) by_id.emplace(u.id, &u);
  auto lookup = [&](const std::string& id) -> const Utterance& {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw Error("render_cot: utterance '" + id + "' not in corpus (record " + rec.id + ")");
    return *it->second;
  };

  const std::size_t k = rec.sources.size();
  if (levels.size() != k) {
    throw Error("render_cot: record " + rec.id + " has " + std::to_string(k) + " sources but " +
                std::to_string(levels.size()) + " similarity levels");
  }
  for (int level : levels) {
    if (level < 1 || level > 5) throw Error("render_cot: similarity level out of range in record " + rec.id);
  }
  std::vector<Gender> genders;
  for (const auto& s : rec.sources) genders.push_back(lookup(s.utterance_id).gender);
  const Gender ref_gender = lookup(rec.reference.utterance_id).gender;
  const Utterance& target = lookup(rec.target().utterance_id);
  if (contains_format_tag(target.transcript)) {
    throw Error("render_cot: transcript of '" + target.id + "' contains a format tag");
  }

  std::vector<std::string> lines;
  const Fields audio{{"ref_len", seconds(rec.reference.len_s)},
                     {"silence_len", seconds(kSilenceLenS)},
                     {"mix_len", seconds(rec.total_duration_s)},
                     {"num_speakers", std::to_string(k)},
                     {"overlap", seconds(rec.overlap_s)}};
  lines.push_back(fill(k == 1 ? tmpl.audio_single : tmpl.audio_multi, audio));
  lines.push_back(fill(tmpl.reference, {{"gender", std::string(to_string(ref_gender))}}));
  for (std::size_t i = 0; i < k; ++i) {
    const auto& iv = rec.sources[i].interval;
    lines.push_back(fill(tmpl.speaker, {{"index", std::to_string(i + 1)},
                                        {"start", seconds(iv.start_s)},
                                        {"end", seconds(iv.end_s)},
                                        {"gender", std::string(to_string(genders[i]))},
                                        {"level", std::to_string(levels[i])}}));
  }

  const TargetInference inf = infer_target(rec, genders, ref_gender, levels);
  const Fields infer_fields{{"index", std::to_string(inf.index + 1)},
                            {"gender", std::string(to_string(ref_gender))},
                            {"level", std::to_string(levels[inf.index])},
                            {"tied", list_speakers(inf.tied)}};
  std::size_t gender_matches = 0;
  for (Gender g : genders) gender_matches += (g == ref_gender);
  const std::string* pattern = &tmpl.infer_unique;
  if (k == 1) pattern = &tmpl.infer_single;
  else if (inf.tie) pattern = &tmpl.infer_tie;
  else if (!inf.gender_filtered) pattern = &tmpl.infer_no_gender;
  else if (gender_matches == 1) pattern = &tmpl.infer_gender_only;
  lines.push_back(fill(*pattern, infer_fields));

  CotExample ex;
  ex.example_id = rec.id;
  ex.mixture_id = rec.mixture_id;
  ex.prompt_text = tmpl.prompt;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) ex.think_text += tmpl.separator;
    ex.think_text += lines[i];
  }
  ex.answer_text = target.transcript;
  ex.difficulty = Difficulty::hard;
  ex.think_included = true;
  ex.inferred_index = inf.index;
  ex.template_version = tmpl.version;
  return ex;
}

std::vector<CotExample> apply_random_reasoning(std::vector<CotExample> examples,
                                               const std::map<std::string, Difficulty>& labels, double p_empty,
                                               std::uint64_t seed) {
  if (!(p_empty >= 0.0 && p_empty <= 1.0)) throw std::invalid_argument("apply_random_reasoning: p_empty not in [0, 1]");
  for (CotExample& ex : examples) {
    auto it = labels.find(ex.example_id);
    if (it == labels.end()) throw Error("apply_random_reasoning: example '" + ex.example_id + "' is unlabeled");
    ex.difficulty = it->second;
    if (ex.difficulty == Difficulty::easy && Rng(seed, "random-reasoning/" + ex.example_id).bernoulli(p_empty)) {
      ex.think_text.clear();
      ex.think_included = false;
    }
  }
  return examples;
}

}  // namespace tsforge
