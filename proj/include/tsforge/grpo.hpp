#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tsforge/manifest.hpp"
#include "tsforge/reward.hpp"

namespace tsforge {

inline constexpr std::size_t kDefaultGroupSize = 8;
inline constexpr std::size_t kDefaultRlBudget = 20000;
inline constexpr double kZeroSpread = 1e-8;

// (r_i - mean) / population std; all zeros when the std is below 1e-8.
std::vector<double> group_advantages(const std::vector<double>& rewards);

struct Group {
  std::string input_id;
  std::vector<std::pair<std::string, RewardBreakdown>> outputs;
  std::vector<double> advantages;

  std::size_t group_size() const { return outputs.size(); }
};

// Scores each output against the reference and normalizes within the group.
Group make_group(std::string input_id, const std::vector<std::string>& outputs, const std::string& reference);

enum class PredictionClass { format_error, content_error, correct };

std::string_view to_string(PredictionClass c);

// Format errors take precedence over content errors. Throws when unscored.
PredictionClass classify_prediction(const PredictionRecord& pred);

enum class SelectionKind { random, balanced_correct_error, error_only };

std::string_view to_string(SelectionKind k);
SelectionKind parse_selection_kind(std::string_view s);

struct SelectionStrategy {
  SelectionKind kind = SelectionKind::error_only;
  std::size_t budget = kDefaultRlBudget;
  std::pair<std::size_t, std::size_t> correct_to_error_ratio{1, 5};
};

// Parses "c:e" with both parts positive.
std::pair<std::size_t, std::size_t> parse_ratio(std::string_view s);

// Returns selected example ids in manifest order.
//   random:   uniform sample of exactly `budget` predictions.
//   error_only: every format error, then uniformly drawn content errors up to
//             the budget; fails if format errors alone exceed it.
//   balanced: correct:error in the configured ratio with rounding toward the
//             error side; errors are drawn format-first.
std::vector<std::string> select_rl_data(const Manifest<PredictionRecord>& preds, const SelectionStrategy& strategy,
                                        std::uint64_t seed);

// Desk-scale policy: a softmax over a fixed list of candidate outputs.
struct ToyInstance {
  std::string instance_id;
  std::string reference;
  std::vector<std::string> candidates;
  std::vector<double> logits;

  bool operator==(const ToyInstance&) const = default;
};

template <>
struct RecordTraits<ToyInstance> {
  static constexpr std::string_view kind = "toy-instance";
  static const std::string& id(const ToyInstance& r) { return r.instance_id; }
  static Json to_json(const ToyInstance& r);
  static ToyInstance from_json(const Json& j);
};

struct TraceRow {
  std::size_t step = 0;
  double mean_reward = 0.0;  // expected r_total under the policy, averaged over instances
  double p_best = 0.0;       // probability mass on the highest-reward candidate(s), averaged

  bool operator==(const TraceRow&) const = default;
};

struct GrpoOptions {
  std::size_t group_size = kDefaultGroupSize;
  double lr = 0.05;
  std::size_t steps = 1000;
  std::size_t jobs = 1;
};

struct GrpoResult {
  std::vector<TraceRow> trace;  // steps + 1 rows; row 0 is the initial policy
  std::vector<ToyInstance> final_instances;
  std::vector<double> final_p_best;  // per instance
};

class GrpoDivergence : public Error {
 public:
  GrpoDivergence(const std::string& instance_id, std::size_t step)
      : Error("non-finite logits for instance '" + instance_id + "' at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

std::vector<double> softmax(const std::vector<double>& logits);

// Group-normalized REINFORCE on each instance: sample group_size candidates
// from softmax(logits), score with reward_total, and apply
// logit_j += lr * a * (1[j == c] - p_j) for every sample c with advantage a.
GrpoResult simulate_grpo(std::vector<ToyInstance> instances, const GrpoOptions& options, std::uint64_t seed);

// Toy instances with a strictly dominant (perfect) candidate each.
std::vector<ToyInstance> make_toy_instances(std::size_t count, std::uint64_t seed);

}  // namespace tsforge
