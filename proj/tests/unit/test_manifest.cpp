#include <doctest.h>

#include <random>
#include <sstream>

#include "../support/oracles.hpp"
#include "tsforge/demo.hpp"
#include "tsforge/manifest.hpp"

using namespace tsforge;
using testing::TempDir;

namespace {

const char* kLine1 =
    R"({"id":"a","speaker_id":"s1","gender":"female","audio_path":"a.wav","transcript":"HELLO","duration_s":1.5})";
const char* kLine2 =
    R"({"id":"b","speaker_id":"s2","gender":"male","audio_path":"b.wav","transcript":"WORLD","duration_s":2.0})";

Manifest<Utterance> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_manifest<Utterance>(in, "mem.jsonl");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ManifestError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("read examples") {
  CHECK(parse("").size() == 0);
  const auto m = parse(std::string(kLine1) + "\n" + kLine2 + "\n");
  REQUIRE(m.size() == 2);
  CHECK(m.records[0].id == "a");
  CHECK(m.records[1].id == "b");
  CHECK(m.records[1].gender == Gender::male);

  const std::string missing = R"({"id":"c","gender":"male","audio_path":"c.wav","transcript":"X","duration_s":1})";
  const auto err = error_of(std::string(kLine1) + "\n" + kLine2 + "\n" + missing + "\n");
  CHECK(err.find("mem.jsonl:3") != std::string::npos);
  CHECK(err.find("speaker_id") != std::string::npos);
}

TEST_CASE("strictness") {
  std::string extra = kLine1;
  extra.insert(extra.size() - 1, R"(,"age":3)");
  CHECK(error_of(extra).find("age") != std::string::npos);
  std::string bad_gender = kLine1;
  bad_gender.replace(bad_gender.find("female"), 6, "other");
  CHECK_FALSE(error_of(bad_gender).empty());
  CHECK_FALSE(error_of(std::string(kLine1) + "\n" + kLine1).empty());
  CHECK(error_of(std::string(kLine1) + "\n{not json").find(":2") != std::string::npos);
  std::string schema = kLine1;
  schema.insert(schema.size() - 1, R"(,"schema":"v2")");
  CHECK_FALSE(error_of(schema).empty());
  std::string schema_ok = kLine1;
  schema_ok.insert(schema_ok.size() - 1, R"(,"schema":"v1")");
  CHECK(error_of(schema_ok).empty());
  std::string negative = kLine1;
  negative.replace(negative.find("1.5"), 3, "-1");
  CHECK_FALSE(error_of(negative).empty());
}

TEST_CASE("blank lines are skipped but line numbers stay true") {
  const std::string missing = R"({"id":"c"})";
  CHECK(error_of(std::string(kLine1) + "\n\n\r\n" + missing + "\n").find(":4") != std::string::npos);
  CHECK(parse(std::string(kLine1) + "\r\n\r\n" + kLine2 + "\r\n").size() == 2);
}

TEST_CASE("write round trip") {
  TempDir dir("manifest");
  std::mt19937 gen(8);
  Manifest<Utterance> m;
  for (int i = 0; i < 100; ++i) {
    Utterance u;
    u.id = "utt-" + std::to_string(i);
    u.speaker_id = "spk" + std::to_string(gen() % 7);
    u.gender = gen() % 2 ? Gender::male : Gender::female;
    u.audio_path = "audio/" + u.id + ".wav";
    u.transcript = "WORD" + std::to_string(gen() % 1000) + " IT'S";
    u.duration_s = static_cast<double>(gen() % 1000000) / 16000.0;
    m.records.push_back(u);
  }
  write_manifest(m, dir / "sub" / "m.jsonl");
  const auto back = read_manifest<Utterance>(dir / "sub" / "m.jsonl");
  CHECK(back == m);
  write_manifest(back, dir / "again.jsonl");
  CHECK(testing::slurp(dir / "sub" / "m.jsonl") == testing::slurp(dir / "again.jsonl"));

  write_manifest(Manifest<Utterance>{}, dir / "empty.jsonl");
  CHECK(testing::slurp(dir / "empty.jsonl").empty());

  m.records.push_back(m.records[0]);
  CHECK_THROWS(write_manifest(m, dir / "dup.jsonl"));
  CHECK_FALSE(std::filesystem::exists(dir / "dup.jsonl"));
  CHECK_THROWS(read_manifest<Utterance>(dir / "missing.jsonl"));
}

TEST_CASE("prediction records") {
  std::istringstream in(R"({"example_id":"e1","raw_output":"x","format_ok":false,"wer":0.5})" "\n"
                        R"({"example_id":"e2","raw_output":"y"})" "\n");
  const auto m = parse_manifest<PredictionRecord>(in, "p");
  CHECK(m.records[0].scored());
  CHECK(m.records[0].wer == 0.5);
  CHECK_FALSE(m.records[1].scored());
  std::istringstream neg(R"({"example_id":"e1","raw_output":"x","format_ok":true,"wer":-0.5})" "\n");
  CHECK_THROWS(parse_manifest<PredictionRecord>(neg, "p"));
}

TEST_CASE("validate_corpus") {
  TempDir dir("validate");
  auto corpus = write_demo_corpus(dir.path(), 3);
  CHECK(validate_corpus(corpus, dir.path()).issues.empty());

  std::filesystem::remove(dir.path() / corpus.records[2].audio_path);
  corpus.records[5].duration_s += 0.5;
  corpus.records[7].transcript = "";
  const auto report = validate_corpus(corpus, dir.path());
  REQUIRE(report.issues.size() == 3);
  CHECK(report.issues[0].utterance_id == corpus.records[2].id);
  CHECK(report.issues[0].kind == CorpusIssueKind::missing_audio);
  CHECK(report.issues[1].utterance_id == corpus.records[5].id);
  CHECK(report.issues[1].kind == CorpusIssueKind::duration_mismatch);
  CHECK(report.issues[2].kind == CorpusIssueKind::empty_transcript);

  corpus.records[5].duration_s -= 0.5 - 0.5 / 16000;
  const auto fine = validate_corpus(corpus, dir.path());
  CHECK(fine.issues.size() == 2);

  testing::spit(dir.path() / corpus.records[2].audio_path, "garbage");
  CHECK(validate_corpus(corpus, dir.path()).issues[0].kind == CorpusIssueKind::unreadable_audio);
}
