#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "tsforge/eval.hpp"
#include "tsforge/grpo.hpp"
#include "tsforge/manifest.hpp"
#include "tsforge/mixture.hpp"
#include "tsforge/reward.hpp"
#include "tsforge/similarity.hpp"
#include "tsforge/wav.hpp"

namespace py = pybind11;
using namespace tsforge;

namespace {

py::dict counts_dict(const AlignmentCounts& c) {
  py::dict d;
  d["sub"] = c.sub;
  d["del"] = c.del;
  d["ins"] = c.ins;
  d["hits"] = c.hits;
  d["n_ref"] = c.n_ref;
  return d;
}

Waveform as_wave(std::vector<double> samples) { return Waveform{std::move(samples), kSampleRate}; }

PredictionRecord prediction_from(const py::dict& d) {
  PredictionRecord p;
  p.example_id = d["example_id"].cast<std::string>();
  p.raw_output = d.contains("raw_output") ? d["raw_output"].cast<std::string>() : std::string();
  if (d.contains("format_ok") && !d["format_ok"].is_none()) p.format_ok = d["format_ok"].cast<bool>();
  if (d.contains("wer") && !d["wer"].is_none()) p.wer = d["wer"].cast<double>();
  return p;
}

py::dict score_dict(const SetScore& s) {
  py::dict d;
  d["wer_percent"] = s.wer_percent;
  d["n_samples"] = s.n_samples;
  d["n_malformed"] = s.n_malformed;
  d["errors"] = s.errors;
  d["ref_words"] = s.ref_words;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "tsforge core: rewards, alignment, similarity, mixing, RL selection and toy GRPO";

  py::register_exception<Error>(m, "TsforgeError", PyExc_RuntimeError);

  m.attr("SAMPLE_RATE") = kSampleRate;

  m.def("normalize_text", &normalize_text, py::arg("text"));
  m.def(
      "align",
      [](const std::string& hyp, const std::string& ref) {
        return counts_dict(align(normalize_text(hyp), normalize_text(ref)));
      },
      py::arg("hyp"), py::arg("ref"));
  m.def(
      "reward_wer",
      [](const std::string& hyp, const std::string& ref) {
        return reward_wer(align(normalize_text(hyp), normalize_text(ref)));
      },
      py::arg("hyp"), py::arg("ref"));
  m.def(
      "reward_format", [](const std::string& raw) { return reward_format(parse_output(raw)); }, py::arg("raw"));
  m.def(
      "parse_output",
      [](const std::string& raw) {
        const ParsedOutput p = parse_output(raw);
        py::dict d;
        d["format_ok"] = p.format_ok;
        d["think"] = p.think ? py::object(py::str(*p.think)) : py::none();
        d["answer"] = p.answer ? py::object(py::str(*p.answer)) : py::none();
        return d;
      },
      py::arg("raw"));
  m.def(
      "reward_total",
      [](const std::string& raw, const std::string& ref) {
        const RewardBreakdown r = reward_total(raw, ref);
        py::dict d = counts_dict(r.counts);
        d["r_wer"] = r.r_wer;
        d["r_format"] = r.r_format;
        d["r_total"] = r.r_total;
        return d;
      },
      py::arg("raw"), py::arg("ref"));
  m.def("serialize_target", &serialize_target, py::arg("think"), py::arg("answer"));
  m.def("extract_answer_for_eval", &extract_answer_for_eval, py::arg("raw"));

  m.def(
      "score_set",
      [](const std::vector<std::pair<std::string, std::string>>& pairs) {
        EvalSet s{"set", {}};
        for (std::size_t i = 0; i < pairs.size(); ++i) {
          s.pairs.push_back({std::to_string(i), pairs[i].first, pairs[i].second});
        }
        return score_dict(score_set(s));
      },
      py::arg("pairs"), "Pooled WER over (raw_output, reference) pairs");
  m.def(
      "weighted_average",
      [](const std::vector<std::pair<double, std::size_t>>& sets) {
        std::map<std::string, SetScore> per_set;
        for (std::size_t i = 0; i < sets.size(); ++i) {
          SetScore s;
          s.wer_percent = sets[i].first;
          s.n_samples = sets[i].second;
          per_set.emplace(std::to_string(i), s);
        }
        return weighted_average(per_set);
      },
      py::arg("sets"), "Sample-weighted mean of (wer_percent, n_samples) pairs");

  m.def("clamp_unit", &clamp_unit, py::arg("s"));
  m.def("quantize_similarity", &quantize_similarity, py::arg("s"));
  m.def("similarity_level", &similarity_level, py::arg("cosine"));
  m.def(
      "cosine_similarity",
      [](const std::vector<double>& a, const std::vector<double>& b) { return cosine_similarity(a, b); },
      py::arg("a"), py::arg("b"));
  m.def(
      "proxy_embedding",
      [](std::vector<double> samples) { return proxy_embedding(as_wave(std::move(samples))).vector; },
      py::arg("samples"), "40-dim log-mel statistics embedding of 16 kHz audio");
  m.def(
      "load_embeddings",
      [](const std::filesystem::path& path) {
        std::map<std::string, std::vector<double>> out;
        for (auto& [id, e] : load_embeddings(path)) out.emplace(id, e.vector);
        return out;
      },
      py::arg("path"));

  m.def(
      "overlap_duration",
      [](const std::vector<std::pair<double, double>>& intervals) {
        std::vector<SpeakerInterval> iv;
        for (std::size_t i = 0; i < intervals.size(); ++i) {
          iv.push_back({"s" + std::to_string(i), intervals[i].first, intervals[i].second});
        }
        return overlap_duration(iv);
      },
      py::arg("intervals"));
  m.def(
      "mix",
      [](const std::vector<std::pair<std::vector<double>, double>>& sources, bool peak_protect) {
        std::vector<Waveform> waves;
        for (const auto& s : sources) waves.push_back(as_wave(s.first));
        std::vector<MixInput> inputs;
        for (std::size_t i = 0; i < waves.size(); ++i) {
          inputs.push_back({&waves[i], sources[i].second, "s" + std::to_string(i)});
        }
        MixResult r = mix(inputs, peak_protect);
        return py::make_tuple(std::move(r.mixture.samples), r.peak_scale);
      },
      py::arg("sources"), py::arg("peak_protect") = true, "Mix (samples, offset_s) sources; returns (mixture, peak_scale)");
  m.def(
      "read_wav", [](const std::filesystem::path& p) { return read_wav(p).samples; }, py::arg("path"));
  m.def(
      "write_wav",
      [](const std::filesystem::path& p, std::vector<double> samples) { write_wav(p, as_wave(std::move(samples))); },
      py::arg("path"), py::arg("samples"));

  m.def("group_advantages", &group_advantages, py::arg("rewards"));
  m.def(
      "classify_prediction", [](const py::dict& d) { return std::string(to_string(classify_prediction(prediction_from(d)))); },
      py::arg("prediction"));
  m.def(
      "select_rl_data",
      [](const std::vector<py::dict>& preds, const std::string& strategy, std::size_t budget, const std::string& ratio,
         std::uint64_t seed) {
        Manifest<PredictionRecord> m;
        for (const auto& d : preds) m.records.push_back(prediction_from(d));
        SelectionStrategy s;
        s.kind = parse_selection_kind(strategy);
        s.budget = budget;
        s.correct_to_error_ratio = parse_ratio(ratio);
        return select_rl_data(m, s, seed);
      },
      py::arg("predictions"), py::arg("strategy"), py::arg("budget"), py::arg("ratio") = "1:5", py::arg("seed"));
  m.def(
      "simulate_toy_grpo",
      [](std::size_t instances, std::size_t group_size, double lr, std::size_t steps, std::uint64_t seed) {
        GrpoOptions opts{group_size, lr, steps, 1};
        const GrpoResult r = simulate_grpo(make_toy_instances(instances, seed), opts, seed);
        std::vector<std::tuple<std::size_t, double, double>> trace;
        for (const auto& row : r.trace) trace.emplace_back(row.step, row.mean_reward, row.p_best);
        return trace;
      },
      py::arg("instances") = 10, py::arg("group_size") = kDefaultGroupSize, py::arg("lr") = 0.05,
      py::arg("steps") = 1000, py::arg("seed"), "Returns [(step, mean_reward, p_best)]");
}
