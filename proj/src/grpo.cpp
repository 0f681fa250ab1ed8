#include "tsforge/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tsforge/parallel.hpp"
#include "tsforge/rng.hpp"

namespace tsforge {

std::vector<double> group_advantages(const std::vector<double>& rewards) {
  if (rewards.size() < 2) throw std::invalid_argument("group_advantages: group needs at least 2 rewards");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std_pop = std::sqrt(var / n);
  std::vector<double> adv(rewards.size(), 0.0);
  if (!(std_pop >= kZeroSpread)) return adv;
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / std_pop;
  return adv;
}

Group make_group(std::string input_id, const std::vector<std::string>& outputs, const std::string& reference) {
  Group g;
  g.input_id = std::move(input_id);
  std::vector<double> totals;
  for (const auto& raw : outputs) {
    g.outputs.emplace_back(raw, reward_total(raw, reference));
    totals.push_back(g.outputs.back().second.r_total);
  }
  g.advantages = group_advantages(totals);
  return g;
}

std::string_view to_string(PredictionClass c) {
  switch (c) {
    case PredictionClass::format_error: return "format_error";
    case PredictionClass::content_error: return "content_error";
    case PredictionClass::correct: return "correct";
  }
  return "unknown";
}

PredictionClass classify_prediction(const PredictionRecord& pred) {
  if (!pred.scored()) throw Error("classify_prediction: prediction '" + pred.example_id + "' is unscored");
  if (!*pred.format_ok) return PredictionClass::format_error;
  // r_wer < 1 exactly when at least one word error was made.
  if (*pred.wer > 0.0) return PredictionClass::content_error;
  return PredictionClass::correct;
}

std::string_view to_string(SelectionKind k) {
  switch (k) {
    case SelectionKind::random: return "random";
    case SelectionKind::balanced_correct_error: return "balanced";
    case SelectionKind::error_only: return "error-only";
  }
  return "unknown";
}

SelectionKind parse_selection_kind(std::string_view s) {
  if (s == "random") return SelectionKind::random;
  if (s == "balanced") return SelectionKind::balanced_correct_error;
  if (s == "error-only" || s == "error_only") return SelectionKind::error_only;
  throw std::invalid_argument("unknown selection strategy '" + std::string(s) + "'");
}

std::pair<std::size_t, std::size_t> parse_ratio(std::string_view s) {
  const auto colon = s.find(':');
  auto parse = [&](std::string_view part) -> std::size_t {
    if (part.empty() || !std::all_of(part.begin(), part.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw std::invalid_argument("ratio must look like C:E with positive integers, got '" + std::string(s) + "'");
    }
    const auto v = std::stoull(std::string(part));
    if (v == 0) throw std::invalid_argument("ratio components must be positive");
    return static_cast<std::size_t>(v);
  };
  if (colon == std::string_view::npos) throw std::invalid_argument("ratio must look like C:E, got '" + std::string(s) + "'");
  return {parse(s.substr(0, colon)), parse(s.substr(colon + 1))};
}

std::vector<std::string> select_rl_data(const Manifest<PredictionRecord>& preds, const SelectionStrategy& strategy,
                                        std::uint64_t seed) {
  if (strategy.budget == 0) throw std::invalid_argument("select_rl_data: budget must be > 0");
  const auto& records = preds.records;
  std::vector<std::size_t> format_errors, content_errors, correct;
  for (std::size_t i = 0; i < records.size(); ++i) {
    switch (classify_prediction(records[i])) {
      case PredictionClass::format_error: format_errors.push_back(i); break;
      case PredictionClass::content_error: content_errors.push_back(i); break;
      case PredictionClass::correct: correct.push_back(i); break;
    }
  }

  Rng rng(seed, std::string("select/") + std::string(to_string(strategy.kind)));
  std::vector<std::size_t> chosen;
  auto draw = [&](const std::vector<std::size_t>& pool, std::size_t k) {
    for (std::size_t j : rng.sample_without_replacement(pool.size(), k)) chosen.push_back(pool[j]);
  };

  switch (strategy.kind) {
    case SelectionKind::random: {
      if (strategy.budget > records.size()) {
        throw Error("select_rl_data: budget " + std::to_string(strategy.budget) + " exceeds " +
                    std::to_string(records.size()) + " predictions");
      }
      std::vector<std::size_t> all(records.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      draw(all, strategy.budget);
      break;
    }
    case SelectionKind::error_only: {
      if (format_errors.empty() && content_errors.empty()) throw Error("select_rl_data: no error samples available");
      if (format_errors.size() > strategy.budget) {
        throw Error("select_rl_data: " + std::to_string(format_errors.size()) + " format errors exceed budget " +
                    std::to_string(strategy.budget));
      }
      chosen = format_errors;
      draw(content_errors, std::min(strategy.budget - format_errors.size(), content_errors.size()));
      break;
    }
    case SelectionKind::balanced_correct_error: {
      const auto [c, e] = strategy.correct_to_error_ratio;
      if (c == 0 || e == 0) throw std::invalid_argument("select_rl_data: ratio components must be positive");
      const std::size_t n_correct = strategy.budget * c / (c + e);
      const std::size_t n_error = strategy.budget - n_correct;
      if (correct.size() < n_correct || format_errors.size() + content_errors.size() < n_error) {
        throw Error("select_rl_data: balanced selection needs " + std::to_string(n_correct) + " correct and " +
                    std::to_string(n_error) + " error samples, have " + std::to_string(correct.size()) + " and " +
                    std::to_string(format_errors.size() + content_errors.size()));
      }
      const std::size_t n_format = std::min(n_error, format_errors.size());
      draw(format_errors, n_format);
      draw(content_errors, n_error - n_format);
      draw(correct, n_correct);
      break;
    }
  }

  std::sort(chosen.begin(), chosen.end());
  std::vector<std::string> ids;
  ids.reserve(chosen.size());
  for (std::size_t i : chosen) ids.push_back(records[i].example_id);
  return ids;
}

Json RecordTraits<ToyInstance>::to_json(const ToyInstance& r) {
  return Json{{"instance_id", r.instance_id},
              {"reference", r.reference},
              {"candidates", r.candidates},
              {"logits", r.logits}};
}

ToyInstance RecordTraits<ToyInstance>::from_json(const Json& j) {
  FieldReader f(j);
  f.schema_v1();
  ToyInstance t;
  t.instance_id = f.string("instance_id");
  if (t.instance_id.empty()) throw SchemaError("field 'instance_id' must be non-empty");
  t.reference = f.string("reference");
  t.candidates = f.strings("candidates");
  if (f.has("logits")) {
    t.logits = f.numbers("logits");
  } else {
    t.logits.assign(t.candidates.size(), 0.0);
  }
  f.finish();
  if (t.candidates.size() < 2) throw SchemaError("toy instance needs at least 2 candidates");
  if (t.logits.size() != t.candidates.size()) throw SchemaError("logits and candidates differ in length");
  if (normalize_text(t.reference).empty()) throw SchemaError("toy instance reference is empty");
  return t;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += (p[i] = std::exp(logits[i] - top));
  for (double& x : p) x /= z;
  return p;
}

namespace {

struct InstanceRun {
  std::vector<double> expected_reward;
  std::vector<double> p_best;
  std::vector<double> logits;
};

InstanceRun run_instance(const ToyInstance& inst, const GrpoOptions& options, std::uint64_t seed) {
  if (inst.candidates.size() < 2 || inst.logits.size() != inst.candidates.size()) {
    throw Error("simulate_grpo: instance '" + inst.instance_id + "' is malformed");
  }
  std::vector<double> rewards;
  for (const auto& c : inst.candidates) rewards.push_back(reward_total(c, inst.reference).r_total);
  const double best = *std::max_element(rewards.begin(), rewards.end());

  InstanceRun run;
  run.logits = inst.logits;
  auto record = [&](const std::vector<double>& p) {
    double er = 0.0, pb = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      er += p[j] * rewards[j];
      if (rewards[j] == best) pb += p[j];
    }
    run.expected_reward.push_back(er);
    run.p_best.push_back(pb);
  };

  Rng rng(seed, "grpo/" + inst.instance_id);
  std::vector<std::size_t> picks(options.group_size);
  std::vector<double> group_rewards(options.group_size);
  for (std::size_t step = 0; step < options.steps; ++step) {
    const std::vector<double> p = softmax(run.logits);
    record(p);
    for (std::size_t g = 0; g < options.group_size; ++g) {
      picks[g] = rng.categorical(p);
      group_rewards[g] = rewards[picks[g]];
    }
    const std::vector<double> adv = group_advantages(group_rewards);
    for (std::size_t g = 0; g < options.group_size; ++g) {
      if (adv[g] == 0.0) continue;
      for (std::size_t j = 0; j < run.logits.size(); ++j) {
        run.logits[j] += options.lr * adv[g] * ((j == picks[g] ? 1.0 : 0.0) - p[j]);
      }
    }
    for (double x : run.logits) {
      if (!std::isfinite(x)) throw GrpoDivergence(inst.instance_id, step + 1);
    }
  }
  record(softmax(run.logits));
  return run;
}

}  // namespace

GrpoResult simulate_grpo(std::vector<ToyInstance> instances, const GrpoOptions& options, std::uint64_t seed) {
  if (instances.empty()) throw std::invalid_argument("simulate_grpo: no instances");
  if (options.group_size < 2) throw std::invalid_argument("simulate_grpo: group size must be >= 2");
  if (!std::isfinite(options.lr)) throw std::invalid_argument("simulate_grpo: learning rate must be finite");

  std::vector<InstanceRun> runs(instances.size());
  parallel_for(instances.size(), options.jobs, [&](std::size_t i) { runs[i] = run_instance(instances[i], options, seed); });

  GrpoResult result;
  const double n = static_cast<double>(instances.size());
  for (std::size_t step = 0; step <= options.steps; ++step) {
    TraceRow row{step, 0.0, 0.0};
    for (const auto& r : runs) {
      row.mean_reward += r.expected_reward[step];
      row.p_best += r.p_best[step];
    }
    row.mean_reward /= n;
    row.p_best /= n;
    result.trace.push_back(row);
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    instances[i].logits = runs[i].logits;
    result.final_p_best.push_back(runs[i].p_best.back());
  }
  result.final_instances = std::move(instances);
  return result;
}

namespace {

const std::vector<std::string>& toy_vocabulary() {
  static const std::vector<std::string> words{
      "THE",    "A",      "OF",     "AND",   "TO",    "HE",     "SHE",    "WAS",    "IN",    "THAT",
      "HIS",    "HER",    "WITH",   "FOR",   "IT",    "HAD",    "AS",     "YOU",    "NOT",   "BUT",
      "HOUSE",  "RIVER",  "MORNING", "LIGHT", "HORSE", "GARDEN", "LETTER", "WINDOW", "STONE", "VOICE",
      "SLOWLY", "AGAIN",  "NEVER",  "ALWAYS", "BRIGHT", "COLD",  "GREEN",  "SILENT", "OLD",   "YOUNG",
      "WALKED", "SPOKE",  "TURNED", "LOOKED", "HEARD", "FOUND",  "KNEW",   "CAME",   "LEFT",  "STOOD"};
  return words;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

}  // namespace

std::vector<ToyInstance> make_toy_instances(std::size_t count, std::uint64_t seed) {
  const auto& vocab = toy_vocabulary();
  std::vector<ToyInstance> out;
  for (std::size_t i = 0; i < count; ++i) {
    ToyInstance t;
    t.instance_id = "toy-" + std::to_string(i);
    Rng rng(seed, t.instance_id);
    std::vector<std::string> ref(6 + rng.index(5));
    for (auto& w : ref) w = vocab[rng.index(vocab.size())];
    t.reference = join(ref);
    const std::string think = "Audio information: 1 speaker.\nTarget speaker: Speaker 1.";

    auto substituted = ref;
    const std::size_t pos = rng.index(substituted.size());
    substituted[pos] = substituted[pos] == "SILENT" ? "BRIGHT" : "SILENT";
    auto truncated = ref;
    truncated.resize(ref.size() - 2);
    auto padded = ref;
    padded.insert(padded.end(), {"AND", "THEN", "AGAIN"});

    t.candidates = {
        serialize_target(think, t.reference),
        serialize_target(think, join(substituted)),
        serialize_target(think, join(truncated)),
        serialize_target(think, join(padded)),
        "<answer>" + t.reference + "</answer>",
        "I cannot tell who is speaking.",
    };
    for (std::size_t a = t.candidates.size(); a > 1; --a) std::swap(t.candidates[a - 1], t.candidates[rng.index(a)]);
    t.logits.assign(t.candidates.size(), 0.0);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace tsforge
