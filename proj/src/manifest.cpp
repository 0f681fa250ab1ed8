#include "tsforge/manifest.hpp"

#include <cmath>

#include "tsforge/wav.hpp"

namespace tsforge {

std::string_view to_string(Gender g) { return g == Gender::male ? "male" : "female"; }

Gender parse_gender(std::string_view s) {
  if (s == "male") return Gender::male;
  if (s == "female") return Gender::female;
  throw SchemaError("invalid gender '" + std::string(s) + "' (expected male or female)");
}

namespace {

std::string nonempty_id(FieldReader& f, std::string_view key) {
  std::string id = f.string(key);
  if (id.empty()) throw SchemaError("field '" + std::string(key) + "' must be non-empty");
  return id;
}

}  // namespace

Json RecordTraits<Utterance>::to_json(const Utterance& r) {
  return Json{{"id", r.id},
              {"speaker_id", r.speaker_id},
              {"gender", to_string(r.gender)},
              {"audio_path", r.audio_path},
              {"transcript", r.transcript},
              {"duration_s", r.duration_s}};
}

Utterance RecordTraits<Utterance>::from_json(const Json& j) {
  FieldReader f(j);
  f.schema_v1();
  Utterance u;
  u.id = nonempty_id(f, "id");
  u.speaker_id = nonempty_id(f, "speaker_id");
  u.gender = parse_gender(f.string("gender"));
  u.audio_path = f.string("audio_path");
  u.transcript = f.string("transcript");
  u.duration_s = f.number("duration_s");
  if (u.duration_s < 0.0) throw SchemaError("field 'duration_s' must be >= 0");
  f.finish();
  return u;
}

Json RecordTraits<PredictionRecord>::to_json(const PredictionRecord& r) {
  Json j{{"example_id", r.example_id}, {"raw_output", r.raw_output}};
  if (r.format_ok) j["format_ok"] = *r.format_ok;
  if (r.wer) j["wer"] = *r.wer;
  return j;
}

PredictionRecord RecordTraits<PredictionRecord>::from_json(const Json& j) {
  FieldReader f(j);
  f.schema_v1();
  PredictionRecord p;
  p.example_id = nonempty_id(f, "example_id");
  p.raw_output = f.string("raw_output");
  p.format_ok = f.optional_boolean("format_ok");
  p.wer = f.optional_number("wer");
  if (p.wer && *p.wer < 0.0) throw SchemaError("field 'wer' must be >= 0");
  f.finish();
  return p;
}

Json RecordTraits<RefRecord>::to_json(const RefRecord& r) {
  return Json{{"example_id", r.example_id}, {"transcript", r.transcript}};
}

RefRecord RecordTraits<RefRecord>::from_json(const Json& j) {
  FieldReader f(j);
  f.schema_v1();
  RefRecord r;
  r.example_id = nonempty_id(f, "example_id");
  r.transcript = f.string("transcript");
  f.finish();
  return r;
}

Json RecordTraits<SelectedId>::to_json(const SelectedId& r) { return Json{{"example_id", r.example_id}}; }

SelectedId RecordTraits<SelectedId>::from_json(const Json& j) {
  FieldReader f(j);
  f.schema_v1();
  SelectedId s{nonempty_id(f, "example_id")};
  f.finish();
  return s;
}

namespace detail {

void for_each_jsonl_line(std::istream& in, const std::function<void(std::size_t, const std::string&)>& on_line) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    on_line(line_no, line);
  }
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestError(path.string(), 0, "cannot open for reading");
  return in;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ManifestError(path.string(), 0, "cannot open for writing");
  return out;
}

}  // namespace detail

std::string_view to_string(CorpusIssueKind k) {
  switch (k) {
    case CorpusIssueKind::missing_audio: return "missing_audio";
    case CorpusIssueKind::unreadable_audio: return "unreadable_audio";
    case CorpusIssueKind::duration_mismatch: return "duration_mismatch";
    case CorpusIssueKind::empty_transcript: return "empty_transcript";
  }
  return "unknown";
}

std::filesystem::path resolve_audio_path(const std::filesystem::path& audio_root, const std::string& audio_path) {
  std::filesystem::path p(audio_path);
  return p.is_absolute() ? p : audio_root / p;
}

CorpusReport validate_corpus(const Manifest<Utterance>& corpus, const std::filesystem::path& audio_root) {
  CorpusReport report;
  for (const Utterance& u : corpus.records) {
    if (u.transcript.find_first_not_of(" \t") == std::string::npos) {
      report.issues.push_back({u.id, CorpusIssueKind::empty_transcript, "transcript is empty"});
    }
    const auto path = resolve_audio_path(audio_root, u.audio_path);
    if (!std::filesystem::exists(path)) {
      report.issues.push_back({u.id, CorpusIssueKind::missing_audio, path.string()});
      continue;
    }
    WavInfo info;
    try {
      info = read_wav_info(path);
    } catch (const Error& e) {
      report.issues.push_back({u.id, CorpusIssueKind::unreadable_audio, e.what()});
      continue;
    }
    const double actual = info.duration_s();
    const double period = 1.0 / info.sample_rate_hz;
    if (std::abs(actual - u.duration_s) > period) {
      report.issues.push_back({u.id, CorpusIssueKind::duration_mismatch,
                               "manifest says " + std::to_string(u.duration_s) + " s, audio has " +
                                   std::to_string(actual) + " s"});
    }
  }
  return report;
}

}  // namespace tsforge
