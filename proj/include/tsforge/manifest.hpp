#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "tsforge/error.hpp"
#include "tsforge/json_fields.hpp"

namespace tsforge {

inline constexpr std::string_view kSchemaVersion = "v1";

enum class Gender { male, female };

std::string_view to_string(Gender g);
Gender parse_gender(std::string_view s);

struct Utterance {
  std::string id;
  std::string speaker_id;
  Gender gender = Gender::female;
  std::string audio_path;
  std::string transcript;
  double duration_s = 0.0;

  bool operator==(const Utterance&) const = default;
};

// A model output for one example. format_ok and wer are absent until scored.
struct PredictionRecord {
  std::string example_id;
  std::string raw_output;
  std::optional<bool> format_ok;
  std::optional<double> wer;

  bool scored() const { return format_ok.has_value() && wer.has_value(); }
  bool operator==(const PredictionRecord&) const = default;
};

// Ground-truth transcript for an example (target speaker only).
struct RefRecord {
  std::string example_id;
  std::string transcript;

  bool operator==(const RefRecord&) const = default;
};

// One line of a selection output.
struct SelectedId {
  std::string example_id;

  bool operator==(const SelectedId&) const = default;
};

// Per-record (de)serialization. Specialized next to each record type.
template <class T>
struct RecordTraits;

template <>
struct RecordTraits<Utterance> {
  static constexpr std::string_view kind = "utterance";
  static const std::string& id(const Utterance& r) { return r.id; }
  static Json to_json(const Utterance& r);
  static Utterance from_json(const Json& j);
};

template <>
struct RecordTraits<PredictionRecord> {
  static constexpr std::string_view kind = "prediction";
  static const std::string& id(const PredictionRecord& r) { return r.example_id; }
  static Json to_json(const PredictionRecord& r);
  static PredictionRecord from_json(const Json& j);
};

template <>
struct RecordTraits<RefRecord> {
  static constexpr std::string_view kind = "reference";
  static const std::string& id(const RefRecord& r) { return r.example_id; }
  static Json to_json(const RefRecord& r);
  static RefRecord from_json(const Json& j);
};

template <>
struct RecordTraits<SelectedId> {
  static constexpr std::string_view kind = "selected-id";
  static const std::string& id(const SelectedId& r) { return r.example_id; }
  static Json to_json(const SelectedId& r);
  static SelectedId from_json(const Json& j);
};

template <class T>
struct Manifest {
  std::string schema_version{kSchemaVersion};
  std::vector<T> records;
  // 1-based source line of each record; empty for manifests built in memory.
  std::vector<std::size_t> line_numbers;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  bool operator==(const Manifest& other) const { return records == other.records; }
};

namespace detail {
// Calls on_line(line_number, text) for each non-blank line.
void for_each_jsonl_line(std::istream& in, const std::function<void(std::size_t, const std::string&)>& on_line);
std::ifstream open_for_read(const std::filesystem::path& path);
std::ofstream open_for_write(const std::filesystem::path& path);
}  // namespace detail

template <class T>
Manifest<T> parse_manifest(std::istream& in, const std::string& source_name) {
  Manifest<T> m;
  std::unordered_set<std::string> ids;
  detail::for_each_jsonl_line(in, [&](std::size_t line_no, const std::string& text) {
    T record;
    try {
      record = RecordTraits<T>::from_json(Json::parse(text));
    } catch (const Json::exception& e) {
      throw ManifestError(source_name, line_no, std::string("malformed JSON: ") + e.what());
    } catch (const SchemaError& e) {
      throw ManifestError(source_name, line_no, e.what());
    }
    const std::string& id = RecordTraits<T>::id(record);
    if (!ids.insert(id).second) throw ManifestError(source_name, line_no, "duplicate id '" + id + "'");
    m.records.push_back(std::move(record));
    m.line_numbers.push_back(line_no);
  });
  return m;
}

template <class T>
Manifest<T> read_manifest(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  return parse_manifest<T>(in, path.string());
}

template <class T>
void serialize_manifest(const Manifest<T>& m, std::ostream& out) {
  std::unordered_set<std::string> ids;
  for (const T& r : m.records) {
    const std::string& id = RecordTraits<T>::id(r);
    if (!ids.insert(id).second) throw Error("refusing to write manifest with duplicate id '" + id + "'");
  }
  for (const T& r : m.records) out << RecordTraits<T>::to_json(r).dump() << '\n';
}

template <class T>
std::string serialize_manifest(const Manifest<T>& m) {
  std::ostringstream out;
  serialize_manifest(m, out);
  return out.str();
}

template <class T>
void write_manifest(const Manifest<T>& m, const std::filesystem::path& path) {
  // Serialize first so a duplicate-id refusal leaves no partial file behind.
  const std::string body = serialize_manifest(m);
  auto out = detail::open_for_write(path);
  out << body;
  out.flush();
  if (!out) throw Error("failed writing " + path.string());
}

template <class T>
Manifest<T> make_manifest(std::vector<T> records) {
  Manifest<T> m;
  m.records = std::move(records);
  return m;
}

enum class CorpusIssueKind { missing_audio, unreadable_audio, duration_mismatch, empty_transcript };

std::string_view to_string(CorpusIssueKind k);

struct CorpusIssue {
  std::string utterance_id;
  CorpusIssueKind kind;
  std::string detail;
};

struct CorpusReport {
  std::vector<CorpusIssue> issues;
  bool ok() const { return issues.empty(); }
};

// Resolves an utterance's audio path: absolute paths as-is, relative ones
// against audio_root.
std::filesystem::path resolve_audio_path(const std::filesystem::path& audio_root, const std::string& audio_path);

// Report-only check of audio presence, length agreement (within one sample
// period) and non-empty transcripts.
CorpusReport validate_corpus(const Manifest<Utterance>& corpus, const std::filesystem::path& audio_root);

}  // namespace tsforge
