#include <doctest.h>

#include <random>

#include "../support/oracles.hpp"
#include "tsforge/cot.hpp"
#include "tsforge/eval.hpp"
#include "tsforge/reward.hpp"

using namespace tsforge;
using testing::TempDir;

namespace {

Manifest<Utterance> corpus() {
  Manifest<Utterance> m;
  m.records = {
      {"f1-a", "f1", Gender::female, "f1-a.wav", "THE CAT SAT", 4.0},
      {"f1-b", "f1", Gender::female, "f1-b.wav", "ON THE MAT", 5.0},
      {"m1-a", "m1", Gender::male, "m1-a.wav", "A DOG RAN", 3.5},
      {"m1-b", "m1", Gender::male, "m1-b.wav", "FAR AWAY", 4.5},
      {"f2-a", "f2", Gender::female, "f2-a.wav", "BIRDS SING", 3.0},
      {"f2-b", "f2", Gender::female, "f2-b.wav", "IN SPRING", 6.0},
  };
  return m;
}

MixtureRecord record(std::vector<std::pair<std::string, double>> sources, std::size_t target, std::string ref) {
  const auto c = corpus();
  MixtureRecord r;
  r.id = "mix-t" + std::to_string(target);
  r.mixture_id = "mix";
  std::vector<SpeakerInterval> ivs;
  for (const auto& [utt, start] : sources) {
    const Utterance* u = nullptr;
    for (const auto& x : c.records) {
      if (x.id == utt) u = &x;
    }
    MixtureSource s{utt, {u->speaker_id, start, start + u->duration_s}, 1.0};
    r.total_duration_s = std::max(r.total_duration_s, s.interval.end_s);
    ivs.push_back(s.interval);
    r.sources.push_back(s);
  }
  r.overlap_s = overlap_duration(ivs);
  r.num_speakers = static_cast<int>(sources.size());
  r.target_index = target;
  r.reference = {ref, 0.5, 3.0, 1.0};
  r.mixture_audio_path = "mixtures/mix.wav";
  r.model_input_audio_path = "inputs/" + r.id + ".wav";
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto nl = s.find('\n', pos);
    out.push_back(s.substr(pos, nl - pos));
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return out;
}

}  // namespace

TEST_CASE("label_difficulty") {
  CHECK(label_difficulty({"e", "", true, 0.0}) == Difficulty::easy);
  CHECK(label_difficulty({"e", "", true, 0.12}) == Difficulty::hard);
  CHECK(label_difficulty({"e", "", false, 0.0}) == Difficulty::hard);
  CHECK_THROWS(label_difficulty({"e", "", std::nullopt, 0.0}));
  CHECK_THROWS(label_difficulty({"e", "", true, std::nullopt}));
}

TEST_CASE("single speaker rendering") {
  const auto rec = record({{"f1-a", 0.0}}, 0, "f1-b");
  const auto ex = render_cot(rec, corpus(), {5});
  const auto l = lines(ex.think_text);
  REQUIRE(l.size() == 4);
  CHECK(l[0] == "Audio information: the input has a 3.00s reference speech, a 3.00s silence and a 4.00s speech with 1 speaker.");
  CHECK(l[1] == "Reference speech: the reference speaker is female.");
  CHECK(l[2] == "Speaker 1: 0.00s-4.00s, female, similarity level 5.");
  CHECK(l[3] == "Target speaker: there is only one speaker, so the target is Speaker 1.");
  CHECK(ex.answer_text == "THE CAT SAT");
  CHECK(ex.inferred_index == 0);
  CHECK(ex.template_version == "cot-v1");
}

TEST_CASE("two speakers, same gender, higher level wins") {
  const auto rec = record({{"f1-a", 0.0}, {"f2-a", 1.0}}, 0, "f1-b");
  const auto ex = render_cot(rec, corpus(), {5, 2});
  const auto l = lines(ex.think_text);
  REQUIRE(l.size() == 5);
  CHECK(l[0] == "Audio information: the input has a 3.00s reference speech, a 3.00s silence and a 4.00s mixed speech with 2 "
                "speakers, overlapping for 3.00s.");
  CHECK(l[2] == "Speaker 1: 0.00s-4.00s, female, similarity level 5.");
  CHECK(l[3] == "Speaker 2: 1.00s-4.00s, female, similarity level 2.");
  CHECK(l[4] == "Target speaker: among the female speakers, Speaker 1 has the highest similarity level (5). The target is "
                "Speaker 1.");
  CHECK(ex.answer_text == "THE CAT SAT");
}

TEST_CASE("gender alone identifies the target") {
  const auto rec = record({{"f1-a", 0.0}, {"m1-a", 0.0}}, 1, "m1-b");
  const auto ex = render_cot(rec, corpus(), {4, 3});
  CHECK(lines(ex.think_text).back() ==
        "Target speaker: Speaker 2 is the only male speaker, matching the reference, with similarity level 3. The target "
        "is Speaker 2.");
  CHECK(ex.answer_text == "A DOG RAN");
  CHECK(ex.inferred_index == 1);
}

TEST_CASE("ties go to the earliest start and are stated") {
  const auto rec = record({{"f1-a", 0.5}, {"f2-a", 0.25}}, 0, "f1-b");
  const auto ex = render_cot(rec, corpus(), {4, 4});
  CHECK(lines(ex.think_text).back() ==
        "Target speaker: Speakers 1 and 2 tie at the highest similarity level (4); Speaker 2 starts earliest. The target "
        "is Speaker 2.");
  CHECK(ex.inferred_index == 1);
  // the answer is always the real target's transcript
  CHECK(ex.answer_text == "THE CAT SAT");
}

TEST_CASE("infer_target ordering") {
  const auto rec = record({{"f1-a", 0.0}, {"m1-a", 0.0}, {"f2-a", 0.0}}, 0, "f1-b");
  auto t = infer_target(rec, {Gender::female, Gender::male, Gender::female}, Gender::female, {3, 5, 3});
  CHECK(t.index == 0);
  CHECK(t.gender_filtered);
  CHECK(t.tie);
  t = infer_target(rec, {Gender::female, Gender::male, Gender::female}, Gender::female, {3, 5, 4});
  CHECK(t.index == 2);
  CHECK_FALSE(t.tie);
  t = infer_target(rec, {Gender::female, Gender::female, Gender::female}, Gender::male, {1, 5, 4});
  CHECK(t.index == 1);
  CHECK_FALSE(t.gender_filtered);
}

TEST_CASE("render_cot errors") {
  auto c = corpus();
  const auto rec = record({{"f1-a", 0.0}, {"f2-a", 1.0}}, 0, "f1-b");
  CHECK_THROWS(render_cot(rec, c, {5}));
  CHECK_THROWS(render_cot(rec, c, {5, 6}));
  auto missing = rec;
  missing.sources[1].utterance_id = "nope";
  CHECK_THROWS(render_cot(missing, c, {5, 2}));
  c.records[0].transcript = "A </answer> B";
  CHECK_THROWS(render_cot(rec, c, {5, 2}));
}

TEST_CASE("rendering is deterministic and the target always parses") {
  const auto c = corpus();
  const auto rec = record({{"f1-a", 0.0}, {"m1-a", 1.25}, {"f2-a", 2.0}}, 2, "f2-b");
  const auto a = render_cot(rec, c, {2, 1, 4});
  const auto b = render_cot(rec, c, {2, 1, 4});
  CHECK(a == b);
  CHECK(lines(a.think_text).size() == 3 + 3);
  const auto p = parse_output(a.target());
  CHECK(p.format_ok);
  CHECK(extract_answer_for_eval(a.target()) == "BIRDS SING");
}

TEST_CASE("apply_random_reasoning boundaries") {
  const auto c = corpus();
  std::vector<CotExample> exs;
  std::map<std::string, Difficulty> labels;
  for (int i = 0; i < 200; ++i) {
    auto ex = render_cot(record({{"f1-a", 0.0}}, 0, "f1-b"), c, {5});
    ex.example_id = "ex" + std::to_string(i);
    labels[ex.example_id] = i % 3 ? Difficulty::easy : Difficulty::hard;
    exs.push_back(ex);
  }
  auto none = apply_random_reasoning(exs, labels, 0.0, 1);
  for (const auto& e : none) CHECK_FALSE(e.think_text.empty());
  auto all = apply_random_reasoning(exs, labels, 1.0, 1);
  for (const auto& e : all) {
    CHECK(e.think_text.empty() == (e.difficulty == Difficulty::easy));
    CHECK(e.think_included == !e.think_text.empty());
  }
  auto half = apply_random_reasoning(exs, labels, 0.5, 9);
  CHECK(half == apply_random_reasoning(exs, labels, 0.5, 9));
  std::reverse(exs.begin(), exs.end());
  auto reversed = apply_random_reasoning(exs, labels, 0.5, 9);
  std::reverse(reversed.begin(), reversed.end());
  CHECK(reversed == half);

  labels.erase("ex5");
  CHECK_THROWS(apply_random_reasoning(exs, labels, 0.5, 9));
  CHECK_THROWS(apply_random_reasoning(exs, {}, 1.5, 9));
}

TEST_CASE("template file") {
  TempDir dir("tmpl");
  const auto& d = default_template();
  Json j{{"version", "cot-test"},      {"prompt", d.prompt},
         {"audio_single", "ONE {mix_len}"}, {"audio_multi", d.audio_multi},
         {"reference", d.reference},   {"speaker", "S{index} L{level}"},
         {"infer_single", d.infer_single}, {"infer_gender_only", d.infer_gender_only},
         {"infer_unique", d.infer_unique}, {"infer_tie", d.infer_tie},
         {"infer_no_gender", d.infer_no_gender}, {"separator", " | "}};
  testing::spit(dir / "t.json", j.dump());
  const auto t = load_template(dir / "t.json");
  const auto ex = render_cot(record({{"f1-a", 0.0}}, 0, "f1-b"), corpus(), {3}, t);
  CHECK(ex.template_version == "cot-test");
  CHECK(ex.think_text.rfind("ONE 4.00 | Reference speech", 0) == 0);
  CHECK(ex.think_text.find("S1 L3") != std::string::npos);

  j["speaker"] = "<answer>";
  testing::spit(dir / "bad.json", j.dump());
  CHECK_THROWS(load_template(dir / "bad.json"));
  j.erase("speaker");
  testing::spit(dir / "missing.json", j.dump());
  CHECK_THROWS(load_template(dir / "missing.json"));
}

TEST_CASE("cot example json round trip") {
  auto ex = render_cot(record({{"f1-a", 0.0}}, 0, "f1-b"), corpus(), {5});
  ex.difficulty = Difficulty::easy;
  const auto back = RecordTraits<CotExample>::from_json(RecordTraits<CotExample>::to_json(ex));
  CHECK(back == ex);
  Json bad = RecordTraits<CotExample>::to_json(ex);
  bad["think_included"] = false;
  CHECK_THROWS(RecordTraits<CotExample>::from_json(bad));
}
