#include "tsforge/cli.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>

#include "tsforge/cot.hpp"
#include "tsforge/demo.hpp"
#include "tsforge/eval.hpp"
#include "tsforge/grpo.hpp"
#include "tsforge/manifest.hpp"
#include "tsforge/mixture.hpp"
#include "tsforge/parallel.hpp"
#include "tsforge/reward.hpp"
#include "tsforge/similarity.hpp"

namespace tsforge::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::shared_ptr<spdlog::logger> logger() {
  static const auto instance = [] {
    auto l = std::make_shared<spdlog::logger>("forge", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%l] %v");
    return l;
  }();
  return instance;
}

struct Globals {
  std::optional<std::uint64_t> seed;
  std::size_t jobs = default_jobs();
  std::string log_level = "info";

  std::uint64_t require_seed(const std::string& stage) const {
    if (!seed) throw UsageError(stage + " is randomized and needs --seed");
    return *seed;
  }
};

fs::path audio_root_for(const std::string& corpus, const std::string& override_root) {
  if (!override_root.empty()) return override_root;
  fs::path p(corpus);
  return p.has_parent_path() ? p.parent_path() : fs::path(".");
}

void summary(const std::string& stage, std::size_t records) {
  std::cout << "stage=" << stage << " status=ok records=" << records << std::endl;
}

template <class T>
std::map<std::string, const T*> index_by_id(const Manifest<T>&&) = delete;

template <class T>
std::map<std::string, const T*> index_by_id(const Manifest<T>& m) {
  std::map<std::string, const T*> out;
  for (const T& r : m.records) out.emplace(RecordTraits<T>::id(r), &r);
  return out;
}

struct DemoCorpusArgs {
  std::string out_dir;
};

std::size_t run_demo_corpus(const Globals& g, const DemoCorpusArgs& a) {
  const auto corpus = write_demo_corpus(a.out_dir, g.require_seed("demo-corpus"));
  logger()->info("wrote demo corpus to {}", a.out_dir);
  return corpus.size();
}

struct ValidateArgs {
  std::string corpus;
  std::string audio_root;
};

std::size_t run_validate(const Globals&, const ValidateArgs& a) {
  const auto corpus = read_manifest<Utterance>(a.corpus);
  const auto report = validate_corpus(corpus, audio_root_for(a.corpus, a.audio_root));
  for (const auto& issue : report.issues) {
    logger()->warn("{}: {} ({})", issue.utterance_id, to_string(issue.kind), issue.detail);
  }
  if (!report.ok()) throw Error(std::to_string(report.issues.size()) + " corpus issue(s) found");
  return corpus.size();
}

struct MixArgs {
  std::string corpus;
  int speakers = 2;
  std::size_t count = 0;
  std::string out_dir;
  double max_offset_s = 0.0;
  std::string audio_root;
};

std::size_t run_mix(const Globals& g, const MixArgs& a) {
  const auto seed = g.require_seed("mix");
  const auto corpus = read_manifest<Utterance>(a.corpus);
  MixOptions opts;
  opts.num_speakers = a.speakers;
  opts.count = a.count;
  opts.max_offset_s = a.max_offset_s;
  auto plan = generate_mixture_set(corpus, opts, seed);

  AudioCache audio(corpus, audio_root_for(a.corpus, a.audio_root));
  const fs::path out_dir(a.out_dir);
  parallel_for(plan.records.size(), g.jobs, [&](std::size_t i) {
    plan.records[i] = render_mixture_to_disk(plan.records[i], audio, out_dir);
  });
  for (const auto& r : plan.records) check_mixture_record(r, &corpus);

  Manifest<RefRecord> refs;
  const auto by_id = index_by_id(corpus);
  for (const auto& r : plan.records) {
    refs.records.push_back({r.id, by_id.at(r.target().utterance_id)->transcript});
  }
  write_manifest(plan, out_dir / "mixtures.jsonl");
  write_manifest(refs, out_dir / "refs.jsonl");
  logger()->info("{} records from {} mixtures of {} speaker(s) in {}", plan.size(),
                 plan.size() / static_cast<std::size_t>(a.speakers), a.speakers, a.out_dir);
  return plan.size();
}

struct EmbedArgs {
  std::string corpus;
  std::string mixtures;
  std::string out;
  std::string audio_root;
};

std::size_t run_embed_proxy(const Globals& g, const EmbedArgs& a) {
  const auto corpus = read_manifest<Utterance>(a.corpus);
  AudioCache audio(corpus, audio_root_for(a.corpus, a.audio_root));

  struct Job {
    std::string key;
    std::string utterance_id;
    std::optional<std::pair<double, double>> segment;
  };
  std::vector<Job> jobs;
  for (const auto& u : corpus.records) jobs.push_back({u.id, u.id, std::nullopt});
  if (!a.mixtures.empty()) {
    std::set<std::string> seen;
    std::vector<Job> segments;
    for (const auto& r : read_manifest<MixtureRecord>(a.mixtures).records) {
      const auto& ref = r.reference;
      auto key = segment_key(ref.utterance_id, ref.start_s, ref.len_s);
      if (seen.insert(key).second) segments.push_back({key, ref.utterance_id, std::pair{ref.start_s, ref.len_s}});
    }
    std::sort(segments.begin(), segments.end(), [](const Job& x, const Job& y) { return x.key < y.key; });
    jobs.insert(jobs.end(), segments.begin(), segments.end());
  }

  std::vector<SpeakerEmbedding> out(jobs.size());
  parallel_for(jobs.size(), g.jobs, [&](std::size_t i) {
    const auto wave = audio.get(jobs[i].utterance_id);
    const Waveform w = jobs[i].segment ? slice(*wave, jobs[i].segment->first, jobs[i].segment->second) : *wave;
    out[i] = proxy_embedding(w, jobs[i].key);
  });
  write_embeddings(a.out, EmbeddingFileHeader{std::string(kEmbeddingFormat), kProxyDim, std::string(kProxyModelName)},
                   out);
  return out.size();
}

struct CotArgs {
  std::string mixtures;
  std::string corpus;
  std::string embeddings;
  std::string base_preds;
  double p_empty = 0.5;
  std::string out;
  std::string template_path;
};

std::size_t run_cot_build(const Globals& g, const CotArgs& a) {
  const auto seed = g.require_seed("cot build");
  const auto mixtures = read_manifest<MixtureRecord>(a.mixtures);
  const auto corpus = read_manifest<Utterance>(a.corpus);
  const auto embeddings = load_embeddings(a.embeddings);
  const auto base = read_manifest<PredictionRecord>(a.base_preds);
  const CotTemplate tmpl = a.template_path.empty() ? default_template() : load_template(a.template_path);

  auto embedding = [&](const std::string& key) -> const SpeakerEmbedding* {
    auto it = embeddings.find(key);
    return it == embeddings.end() ? nullptr : &it->second;
  };

  std::vector<CotExample> examples(mixtures.size());
  std::atomic<std::size_t> fallbacks{0};
  parallel_for(mixtures.size(), g.jobs, [&](std::size_t i) {
    const MixtureRecord& rec = mixtures.records[i];
    const auto& ref = rec.reference;
    const SpeakerEmbedding* ref_emb = embedding(segment_key(ref.utterance_id, ref.start_s, ref.len_s));
    if (!ref_emb) {
      ref_emb = embedding(ref.utterance_id);
      ++fallbacks;
    }
    if (!ref_emb) throw Error("no embedding for reference of " + rec.id);
    std::vector<int> levels;
    for (const auto& s : rec.sources) {
      const SpeakerEmbedding* src = embedding(s.utterance_id);
      if (!src) throw Error("no embedding for source utterance " + s.utterance_id);
      levels.push_back(similarity_level(cosine_similarity(*src, *ref_emb)));
    }
    examples[i] = render_cot(rec, corpus, levels, tmpl);
  });
  if (fallbacks) {
    logger()->warn("{} reference(s) had no segment embedding; used the whole reference utterance", fallbacks.load());
  }

  std::map<std::string, Difficulty> labels;
  for (const auto& p : base.records) labels.emplace(p.example_id, label_difficulty(p));
  auto out = apply_random_reasoning(std::move(examples), labels, a.p_empty, seed);

  std::size_t easy = 0, emptied = 0, disagreements = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    easy += out[i].difficulty == Difficulty::easy;
    emptied += !out[i].think_included;
    disagreements += out[i].inferred_index != mixtures.records[i].target_index;
  }
  logger()->info("{} examples, {} easy, {} with empty reasoning", out.size(), easy, emptied);
  if (disagreements) {
    logger()->warn("{} example(s) where the reasoning rule names a non-target speaker", disagreements);
  }
  write_manifest(make_manifest(std::move(out)), a.out);
  return mixtures.size();
}

struct ScoreArgs {
  std::string preds;
  std::string refs;
  std::string out;
};

std::size_t run_score(const Globals& g, const ScoreArgs& a) {
  const auto preds = read_manifest<PredictionRecord>(a.preds);
  const auto ref_manifest = read_manifest<RefRecord>(a.refs);
  const auto refs = index_by_id(ref_manifest);
  std::vector<std::string> lines(preds.size());
  parallel_for(preds.size(), g.jobs, [&](std::size_t i) {
    const PredictionRecord& p = preds.records[i];
    auto it = refs.find(p.example_id);
    if (it == refs.end()) throw Error("no reference for prediction '" + p.example_id + "'");
    const RewardBreakdown r = reward_total(p.raw_output, it->second->transcript);
    if (p.format_ok && *p.format_ok != (r.r_format == 1.0)) {
      throw Error("prediction '" + p.example_id + "' has format_ok inconsistent with its raw output");
    }
    lines[i] = Json{{"example_id", p.example_id},
                    {"r_wer", r.r_wer},
                    {"r_format", r.r_format},
                    {"r_total", r.r_total},
                    {"sub", r.counts.sub},
                    {"del", r.counts.del},
                    {"ins", r.counts.ins},
                    {"hits", r.counts.hits},
                    {"n_ref", r.counts.n_ref}}
                   .dump();
  });
  auto out = detail::open_for_write(a.out);
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw Error("failed writing " + a.out);
  return lines.size();
}

struct SelectArgs {
  std::string preds;
  std::string strategy;
  std::size_t budget = kDefaultRlBudget;
  std::string ratio = "1:5";
  std::string out;
};

std::size_t run_select(const Globals& g, const SelectArgs& a) {
  const auto seed = g.require_seed("select");
  SelectionStrategy s;
  try {
    s.kind = parse_selection_kind(a.strategy);
    s.correct_to_error_ratio = parse_ratio(a.ratio);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  s.budget = a.budget;
  const auto preds = read_manifest<PredictionRecord>(a.preds);
  Manifest<SelectedId> out;
  for (auto& id : select_rl_data(preds, s, seed)) out.records.push_back({std::move(id)});
  write_manifest(out, a.out);
  logger()->info("selected {} of {} predictions ({})", out.size(), preds.size(), to_string(s.kind));
  return out.size();
}

struct GrpoArgs {
  std::string instances;
  std::size_t group_size = kDefaultGroupSize;
  double lr = 0.05;
  std::size_t steps = 1000;
  std::string trace;
  std::string final_instances;
};

std::size_t run_grpo_sim(const Globals& g, const GrpoArgs& a) {
  const auto seed = g.require_seed("grpo-sim");
  auto instances = read_manifest<ToyInstance>(a.instances);
  GrpoOptions opts{a.group_size, a.lr, a.steps, g.jobs};
  const auto result = simulate_grpo(instances.records, opts, seed);
  auto out = detail::open_for_write(a.trace);
  out << "step,mean_reward,p_best\n";
  char buf[96];
  for (const auto& row : result.trace) {
    std::snprintf(buf, sizeof buf, "%zu,%.10f,%.10f\n", row.step, row.mean_reward, row.p_best);
    out << buf;
  }
  if (!out) throw Error("failed writing " + a.trace);
  if (!a.final_instances.empty()) write_manifest(make_manifest(result.final_instances), a.final_instances);
  const auto& first = result.trace.front();
  const auto& last = result.trace.back();
  logger()->info("mean reward {:.4f} -> {:.4f}, p_best {:.4f} -> {:.4f}", first.mean_reward, last.mean_reward,
                 first.p_best, last.p_best);
  return result.trace.size();
}

struct ToyArgs {
  std::size_t count = 10;
  std::string out;
};

std::size_t run_toy_instances(const Globals& g, const ToyArgs& a) {
  auto m = make_manifest(make_toy_instances(a.count, g.require_seed("toy-instances")));
  write_manifest(m, a.out);
  return m.size();
}

struct SynthArgs {
  std::string refs;
  std::string out;
  std::string eval_out;
  double p_format_error = 0.1;
  double p_content_error = 0.3;
};

std::size_t run_synth_preds(const Globals& g, const SynthArgs& a) {
  const auto seed = g.require_seed("synth-preds");
  const auto refs = read_manifest<RefRecord>(a.refs);
  const auto sim = simulate_predictions(refs, {a.p_format_error, a.p_content_error}, seed);
  write_manifest(sim.predictions, a.out);
  if (!a.eval_out.empty()) write_manifest(sim.eval_pairs, a.eval_out);
  return sim.predictions.size();
}

struct EvalArgs {
  std::vector<std::string> sets;
  std::string report;
};

std::size_t run_eval(const Globals&, const EvalArgs& a) {
  std::vector<EvalSet> sets;
  for (const auto& spec : a.sets) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw UsageError("--set expects name=<jsonl>, got '" + spec + "'");
    }
    EvalSet s{spec.substr(0, eq), read_manifest<EvalPair>(spec.substr(eq + 1)).records};
    sets.push_back(std::move(s));
  }
  const EvalReport report = evaluate(sets);
  auto out = detail::open_for_write(a.report);
  out << to_json(report).dump(2) << '\n';
  if (!out) throw Error("failed writing " + a.report);
  std::size_t n = 0;
  for (const auto& [name, s] : report.per_set) {
    logger()->info("{:<12} WER {:6.2f}%  n={}  malformed={}", name, s.wer_percent, s.n_samples, s.n_malformed);
    n += s.n_samples;
  }
  logger()->info("{:<12} WER {:6.2f}%", "weighted avg", report.weighted_avg_percent);
  return n;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"forge: target-speaker ASR chain-of-thought data and reward toolkit", "forge"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_config("--config", "", "Read flag values from a TOML/INI file; explicit flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);

  Globals g;
  app.add_option("--seed", g.seed, "Global seed (required by randomized stages)");
  app.add_option("--jobs", g.jobs, "Worker threads for data-parallel stages")->check(CLI::PositiveNumber);
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  std::function<std::size_t()> action;
  std::string stage;
  auto bind = [&](CLI::App* sub, std::string name, auto fn) {
    sub->callback([&action, &stage, name = std::move(name), fn] {
      stage = name;
      action = fn;
    });
  };

  DemoCorpusArgs demo;
  auto* demo_cmd = app.add_subcommand("demo-corpus", "Write the synthetic 10-utterance demo corpus");
  demo_cmd->add_option("--out-dir", demo.out_dir)->required();
  bind(demo_cmd, "demo-corpus", [&] { return run_demo_corpus(g, demo); });

  ValidateArgs val;
  auto* val_cmd = app.add_subcommand("validate", "Check corpus audio and transcripts");
  val_cmd->add_option("--corpus", val.corpus)->required();
  val_cmd->add_option("--audio-root", val.audio_root, "Directory for relative audio paths (default: corpus dir)");
  bind(val_cmd, "validate", [&] { return run_validate(g, val); });

  MixArgs mixa;
  auto* mix_cmd = app.add_subcommand("mix", "Synthesize mixtures and model-input audio");
  mix_cmd->add_option("--corpus", mixa.corpus)->required();
  mix_cmd->add_option("--speakers", mixa.speakers)->required()->check(CLI::IsMember({1, 2, 3}));
  mix_cmd->add_option("--count", mixa.count, "Mixtures to generate (0: one per utterance)");
  mix_cmd->add_option("--out-dir", mixa.out_dir)->required();
  mix_cmd->add_option("--max-offset-s", mixa.max_offset_s, "Maximum start offset of non-first sources")
      ->check(CLI::NonNegativeNumber);
  mix_cmd->add_option("--audio-root", mixa.audio_root);
  bind(mix_cmd, "mix", [&] { return run_mix(g, mixa); });

  EmbedArgs emb;
  auto* emb_cmd = app.add_subcommand("embed-proxy", "Compute proxy speaker embeddings (emb-v1)");
  emb_cmd->add_option("--corpus", emb.corpus)->required();
  emb_cmd->add_option("--mixtures", emb.mixtures, "Also embed each record's reference segment");
  emb_cmd->add_option("--out", emb.out)->required();
  emb_cmd->add_option("--audio-root", emb.audio_root);
  bind(emb_cmd, "embed-proxy", [&] { return run_embed_proxy(g, emb); });

  CotArgs cot;
  auto* cot_cmd = app.add_subcommand("cot", "Chain-of-thought data");
  cot_cmd->require_subcommand(1);
  auto* cot_build = cot_cmd->add_subcommand("build", "Render CoT examples with random reasoning");
  cot_build->add_option("--mixtures", cot.mixtures)->required();
  cot_build->add_option("--corpus", cot.corpus)->required();
  cot_build->add_option("--embeddings", cot.embeddings)->required();
  cot_build->add_option("--base-preds", cot.base_preds)->required();
  cot_build->add_option("--p-empty", cot.p_empty)->check(CLI::Range(0.0, 1.0));
  cot_build->add_option("--out", cot.out)->required();
  cot_build->add_option("--template", cot.template_path, "JSON template overriding the built-in wording");
  bind(cot_build, "cot-build", [&] { return run_cot_build(g, cot); });

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Compute rewards for predictions");
  score_cmd->add_option("--preds", score.preds)->required();
  score_cmd->add_option("--refs", score.refs)->required();
  score_cmd->add_option("--out", score.out)->required();
  bind(score_cmd, "score", [&] { return run_score(g, score); });

  SelectArgs sel;
  auto* sel_cmd = app.add_subcommand("select", "Select RL training data");
  sel_cmd->add_option("--preds", sel.preds)->required();
  sel_cmd->add_option("--strategy", sel.strategy)->required()->check(CLI::IsMember({"random", "balanced", "error-only"}));
  sel_cmd->add_option("--budget", sel.budget)->check(CLI::PositiveNumber);
  sel_cmd->add_option("--ratio", sel.ratio, "correct:error ratio for the balanced strategy");
  sel_cmd->add_option("--out", sel.out)->required();
  bind(sel_cmd, "select", [&] { return run_select(g, sel); });

  GrpoArgs grpo;
  auto* grpo_cmd = app.add_subcommand("grpo-sim", "Toy-policy GRPO simulation");
  grpo_cmd->add_option("--instances", grpo.instances)->required();
  grpo_cmd->add_option("--group-size", grpo.group_size)->check(CLI::Range(2, 4096));
  grpo_cmd->add_option("--lr", grpo.lr);
  grpo_cmd->add_option("--steps", grpo.steps);
  grpo_cmd->add_option("--trace", grpo.trace)->required();
  grpo_cmd->add_option("--final-instances", grpo.final_instances, "Write the trained logits as toy instances");
  bind(grpo_cmd, "grpo-sim", [&] { return run_grpo_sim(g, grpo); });

  ToyArgs toy;
  auto* toy_cmd = app.add_subcommand("toy-instances", "Write a toy instance set for grpo-sim");
  toy_cmd->add_option("--count", toy.count)->check(CLI::PositiveNumber);
  toy_cmd->add_option("--out", toy.out)->required();
  bind(toy_cmd, "toy-instances", [&] { return run_toy_instances(g, toy); });

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth-preds", "Simulate scored model predictions for a reference set");
  synth_cmd->add_option("--refs", synth.refs)->required();
  synth_cmd->add_option("--out", synth.out)->required();
  synth_cmd->add_option("--eval-out", synth.eval_out, "Also write the pairs as an evaluation set");
  synth_cmd->add_option("--p-format-error", synth.p_format_error)->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--p-content-error", synth.p_content_error)->check(CLI::Range(0.0, 1.0));
  bind(synth_cmd, "synth-preds", [&] { return run_synth_preds(g, synth); });

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Pooled WER per set and weighted average");
  eval_cmd->add_option("--set", ev.sets, "name=<jsonl> of eval pairs (repeatable)")->required();
  eval_cmd->add_option("--report", ev.report)->required();
  bind(eval_cmd, "eval", [&] { return run_eval(g, ev); });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  auto log = logger();
  log->set_level(spdlog::level::from_str(g.log_level));
  if (!action) {
    std::cerr << app.help();
    return kExitUsage;
  }
  try {
    const std::size_t records = action();
    summary(stage, records);
    return kExitOk;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    log->error("{} failed: {}", stage, e.what());
    return kExitStageFailure;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace tsforge::cli
