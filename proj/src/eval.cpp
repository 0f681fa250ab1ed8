#include "tsforge/eval.hpp"

#include <stdexcept>

#include "tsforge/reward.hpp"

namespace tsforge {

namespace {

std::vector<std::size_t> find_all(std::string_view s, std::string_view needle) {
  std::vector<std::size_t> hits;
  for (auto pos = s.find(needle); pos != std::string_view::npos; pos = s.find(needle, pos + 1)) hits.push_back(pos);
  return hits;
}

}  // namespace

std::optional<std::string> find_answer(std::string_view raw) {
  const auto opens = find_all(raw, kAnswerOpen);
  const auto closes = find_all(raw, kAnswerClose);
  if (opens.size() != 1 || closes.size() != 1) return std::nullopt;
  const std::size_t open = opens.front(), close = closes.front();
  if (close < open + kAnswerOpen.size()) return std::nullopt;
  const std::string_view inner = raw.substr(open + kAnswerOpen.size(), close - open - kAnswerOpen.size());
  if (contains_format_tag(inner)) return std::nullopt;

  // Every think block opened before the answer must close before it too,
  // otherwise the answer sits inside (or crosses) the reasoning.
  const auto think_opens = find_all(raw.substr(0, open), kThinkOpen);
  const auto think_closes = find_all(raw.substr(0, open), kThinkClose);
  for (std::size_t p : think_opens) {
    bool closed = false;
    for (std::size_t q : think_closes) closed = closed || q > p;
    if (!closed) return std::nullopt;
  }
  return std::string(inner);
}

std::string extract_answer_for_eval(std::string_view raw) { return find_answer(raw).value_or(std::string{}); }

Json RecordTraits<EvalPair>::to_json(const EvalPair& r) {
  return Json{{"example_id", r.example_id}, {"raw_output", r.raw_output}, {"ref_transcript", r.ref_transcript}};
}

EvalPair RecordTraits<EvalPair>::from_json(const Json& j) {
  FieldReader f(j);
  f.schema_v1();
  EvalPair p;
  p.example_id = f.string("example_id");
  if (p.example_id.empty()) throw SchemaError("field 'example_id' must be non-empty");
  p.raw_output = f.string("raw_output");
  p.ref_transcript = f.string("ref_transcript");
  f.finish();
  return p;
}

SetScore score_set(const EvalSet& s) {
  if (s.pairs.empty()) throw std::invalid_argument("score_set: set '" + s.name + "' is empty");
  SetScore score;
  for (const EvalPair& p : s.pairs) {
    const Words ref = normalize_text(p.ref_transcript);
    if (ref.empty()) throw std::invalid_argument("score_set: empty reference for '" + p.example_id + "'");
    const AlignmentCounts c = align(normalize_text(extract_answer_for_eval(p.raw_output)), ref);
    score.errors += c.errors();
    score.ref_words += c.n_ref;
    if (!parse_output(p.raw_output).format_ok) ++score.n_malformed;
  }
  score.n_samples = s.pairs.size();
  score.wer_percent = 100.0 * static_cast<double>(score.errors) / static_cast<double>(score.ref_words);
  return score;
}

double weighted_average(const std::map<std::string, SetScore>& per_set) {
  if (per_set.empty()) throw std::invalid_argument("weighted_average: no sets");
  double num = 0.0, den = 0.0;
  for (const auto& [name, s] : per_set) {
    num += s.wer_percent * static_cast<double>(s.n_samples);
    den += static_cast<double>(s.n_samples);
  }
  if (!(den > 0.0)) throw std::invalid_argument("weighted_average: total sample count is zero");
  return num / den;
}

EvalReport evaluate(const std::vector<EvalSet>& sets) {
  EvalReport report;
  for (const EvalSet& s : sets) {
    if (!report.per_set.emplace(s.name, score_set(s)).second) {
      throw std::invalid_argument("evaluate: duplicate set name '" + s.name + "'");
    }
  }
  report.weighted_avg_percent = weighted_average(report.per_set);
  return report;
}

Json to_json(const EvalReport& r) {
  Json per_set = Json::object();
  for (const auto& [name, s] : r.per_set) {
    per_set[name] = Json{{"wer_percent", s.wer_percent},
                         {"n_samples", s.n_samples},
                         {"n_malformed", s.n_malformed},
                         {"errors", s.errors},
                         {"ref_words", s.ref_words}};
  }
  return Json{{"per_set", std::move(per_set)}, {"weighted_avg_percent", r.weighted_avg_percent}};
}

}  // namespace tsforge
