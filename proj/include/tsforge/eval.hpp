#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tsforge/manifest.hpp"

namespace tsforge {

// Text of the single well-formed <answer>...</answer> pair, ignoring whether a
// think block is present. nullopt when the answer tags are missing, unclosed,
// duplicated, nested, or crossed with think tags.
std::optional<std::string> find_answer(std::string_view raw);

// Lenient extraction used for WER evaluation; "" whenever find_answer fails.
std::string extract_answer_for_eval(std::string_view raw);

struct EvalPair {
  std::string example_id;
  std::string raw_output;
  std::string ref_transcript;

  bool operator==(const EvalPair&) const = default;
};

template <>
struct RecordTraits<EvalPair> {
  static constexpr std::string_view kind = "eval-pair";
  static const std::string& id(const EvalPair& r) { return r.example_id; }
  static Json to_json(const EvalPair& r);
  static EvalPair from_json(const Json& j);
};

struct EvalSet {
  std::string name;
  std::vector<EvalPair> pairs;
};

struct SetScore {
  double wer_percent = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_malformed = 0;
  long long errors = 0;
  long long ref_words = 0;
};

// Corpus-pooled WER over the set: 100 * sum(errors) / sum(reference words).
// n_malformed counts outputs failing the strict format check.
SetScore score_set(const EvalSet& s);

// Sample-size weighted mean of per-set WERs.
double weighted_average(const std::map<std::string, SetScore>& per_set);

struct EvalReport {
  std::map<std::string, SetScore> per_set;
  double weighted_avg_percent = 0.0;
};

EvalReport evaluate(const std::vector<EvalSet>& sets);
Json to_json(const EvalReport& r);

}  // namespace tsforge
