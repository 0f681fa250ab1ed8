#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tsforge/manifest.hpp"
#include "tsforge/mixture.hpp"

namespace tsforge {

enum class Difficulty { easy, hard };

std::string_view to_string(Difficulty d);
Difficulty parse_difficulty(std::string_view s);

// Wording of the reasoning text. Each entry is a line with {placeholder}
// fields; see docs/template.md for the placeholder list.
struct CotTemplate {
  std::string version;
  std::string prompt;
  std::string audio_single;
  std::string audio_multi;
  std::string reference;
  std::string speaker;
  std::string infer_single;
  std::string infer_gender_only;
  std::string infer_unique;
  std::string infer_tie;
  std::string infer_no_gender;
  std::string separator;
};

const CotTemplate& default_template();
CotTemplate load_template(const std::filesystem::path& path);

struct CotExample {
  std::string example_id;
  std::string mixture_id;
  std::string prompt_text;
  std::string think_text;
  std::string answer_text;
  Difficulty difficulty = Difficulty::hard;
  bool think_included = true;
  std::size_t inferred_index = 0;  // source the reasoning names as target
  std::string template_version;

  std::string target() const;
  bool operator==(const CotExample&) const = default;
};

template <>
struct RecordTraits<CotExample> {
  static constexpr std::string_view kind = "cot-example";
  static const std::string& id(const CotExample& r) { return r.example_id; }
  static Json to_json(const CotExample& r);
  static CotExample from_json(const Json& j);
};

// Hard iff the base model got the format wrong or any word wrong.
// Throws for an unscored prediction.
Difficulty label_difficulty(const PredictionRecord& pred);

// Source index the reasoning picks: gender match first, then highest level,
// then earliest start, then lowest index. `tie` reports a level tie.
struct TargetInference {
  std::size_t index = 0;
  bool gender_filtered = false;
  bool tie = false;
  std::vector<std::size_t> tied;
};

TargetInference infer_target(const MixtureRecord& rec, const std::vector<Gender>& source_genders,
                             Gender reference_gender, const std::vector<int>& levels);

// levels[i] is the similarity level of sources[i] against the reference.
CotExample render_cot(const MixtureRecord& rec, const Manifest<Utterance>& corpus, const std::vector<int>& levels,
                      const CotTemplate& tmpl = default_template());

// Empties the reasoning of each easy example with probability p_empty, using
// a per-example stream derived from (seed, example_id). Hard examples are
// never touched; an unlabeled example is an error.
std::vector<CotExample> apply_random_reasoning(std::vector<CotExample> examples,
                                               const std::map<std::string, Difficulty>& labels, double p_empty,
                                               std::uint64_t seed);

}  // namespace tsforge
