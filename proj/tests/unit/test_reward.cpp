#include <doctest.h>

#include <random>

#include "../support/oracles.hpp"
#include "tsforge/reward.hpp"

using namespace tsforge;

namespace {

Words W(std::initializer_list<const char*> xs) { return Words(xs.begin(), xs.end()); }

}  // namespace

TEST_CASE("normalize_text") {
  CHECK(normalize_text("Hello,  world!") == W({"HELLO", "WORLD"}));
  CHECK(normalize_text("it's") == W({"IT'S"}));
  CHECK(normalize_text("").empty());
  CHECK(normalize_text("  \t\n ").empty());
  CHECK(normalize_text("a-b_c 42") == W({"A", "B", "C", "42"}));
}

TEST_CASE("align examples") {
  const auto five = W({"A", "B", "C", "D", "E"});
  CHECK(align(five, five) == AlignmentCounts{0, 0, 0, 5, 5});

  const auto c = align(W({"A", "X", "C"}), W({"A", "B", "C", "D"}));
  CHECK(c.sub == 1);
  CHECK(c.del == 1);
  CHECK(c.ins == 0);
  CHECK(c.hits == 2);
  CHECK(c.n_ref == 4);
  CHECK(testing::edit_distance_recursive(W({"A", "X", "C"}), W({"A", "B", "C", "D"})) == 2);

  const auto h = align(W({"HELLO", "HELLO", "HELLO"}), W({"HELLO"}));
  CHECK(h.ins == 2);
  CHECK(h.hits == 1);
  CHECK(h.n_ref == 1);
  CHECK(h.sub == 0);
  CHECK(h.del == 0);
}

TEST_CASE("align with empty sides") {
  CHECK(align({}, {}) == AlignmentCounts{0, 0, 0, 0, 0});
  CHECK(align({}, W({"A", "B"})) == AlignmentCounts{0, 2, 0, 0, 2});
  CHECK(align(W({"A", "B"}), {}) == AlignmentCounts{0, 0, 2, 0, 0});
}

TEST_CASE("align backtrace prefers substitution over deletion plus insertion") {
  CHECK(align(W({"X"}), W({"A"})) == AlignmentCounts{1, 0, 0, 0, 1});
  CHECK(align(W({"X", "Y"}), W({"A", "B"})) == AlignmentCounts{2, 0, 0, 0, 2});
}

TEST_CASE("align agrees with the recursive oracle on random sentences") {
  std::mt19937 gen(11);
  const std::vector<std::string> vocab{"THE", "CAT", "SAT", "ON", "MAT"};
  for (int trial = 0; trial < 400; ++trial) {
    Words a, b;
    const int la = static_cast<int>(gen() % 8), lb = static_cast<int>(gen() % 8);
    for (int i = 0; i < la; ++i) a.push_back(vocab[gen() % vocab.size()]);
    for (int i = 0; i < lb; ++i) b.push_back(vocab[gen() % vocab.size()]);
    const auto c = align(a, b);
    CHECK(c.errors() == testing::edit_distance_recursive(a, b));
    CHECK(c.hits + c.sub + c.del == c.n_ref);
    CHECK(c.hits + c.sub + c.ins == static_cast<int>(a.size()));
  }
}

TEST_CASE("reward_wer") {
  CHECK(reward_wer({0, 0, 0, 5, 5}) == 1.0);
  CHECK(reward_wer({1, 1, 0, 2, 4}) == 0.5);
  CHECK(reward_wer({0, 0, 2, 1, 1}) == -1.0);
  CHECK_THROWS_AS(reward_wer({0, 0, 3, 0, 0}), std::exception);
}

TEST_CASE("parse_output examples") {
  auto p = parse_output("<think>t</think><answer>a</answer>");
  CHECK(p.format_ok);
  CHECK(p.think == "t");
  CHECK(p.answer == "a");

  p = parse_output("<answer>a</answer>");
  CHECK_FALSE(p.format_ok);
  CHECK(p.answer == "a");

  CHECK_FALSE(parse_output("<think>t</think><answer>a</answer> trailing").format_ok);
  CHECK(parse_output("  <think>t</think>\n <answer>a</answer>\n").format_ok);
  CHECK_FALSE(parse_output("<think>t</think>x<answer>a</answer>").format_ok);
}

TEST_CASE("reward_format") {
  CHECK(reward_format(parse_output("<think>t</think><answer>a</answer>")) == 1.0);
  CHECK(reward_format(parse_output("")) == 0.0);
  CHECK(reward_format(parse_output("<think></think><answer>a</answer>")) == 1.0);
}

TEST_CASE("reward_total examples") {
  const std::string ten = "A B C D E F G H I J";
  auto r = reward_total("<think>x</think><answer>" + ten + "</answer>", ten);
  CHECK(r.r_total == 2.0);

  r = reward_total("<think>x</think><answer></answer>", ten);
  CHECK(r.r_wer == 0.0);
  CHECK(r.counts.del == 10);
  CHECK(r.r_format == 1.0);
  CHECK(r.r_total == 1.0);

  r = reward_total("qwerty uiop", "A B C D");
  CHECK(r.r_wer == 0.0);
  CHECK(r.r_format == 0.0);
  CHECK(r.r_total == 0.0);

  CHECK_THROWS(reward_total("<think></think><answer>A</answer>", "  ,, "));
}

TEST_CASE("reward_wer is at most 1 and equals 1 only on an exact match") {
  std::mt19937 gen(3);
  const std::vector<std::string> vocab{"A", "B", "C"};
  for (int trial = 0; trial < 2000; ++trial) {
    Words h, r;
    for (int i = 0, n = static_cast<int>(gen() % 6); i < n; ++i) h.push_back(vocab[gen() % 3]);
    for (int i = 0, n = 1 + static_cast<int>(gen() % 6); i < n; ++i) r.push_back(vocab[gen() % 3]);
    const double w = reward_wer(align(h, r));
    CHECK(w <= 1.0);
    CHECK((w == 1.0) == (h == r));
  }
}

TEST_CASE("parse_output never throws and format_ok matches reward_format") {
  std::mt19937 gen(5);
  const std::vector<std::string> pieces{"<think>", "</think>", "<answer>", "</answer>", "x", " ", "\n", "<", ">", "/"};
  for (int trial = 0; trial < 5000; ++trial) {
    std::string s;
    for (int i = 0, n = static_cast<int>(gen() % 9); i < n; ++i) s += pieces[gen() % pieces.size()];
    ParsedOutput p;
    CHECK_NOTHROW(p = parse_output(s));
    CHECK(reward_format(p) == (p.format_ok ? 1.0 : 0.0));
    if (p.format_ok) {
      CHECK(p.think.has_value());
      CHECK(p.answer.has_value());
    }
  }
}

TEST_CASE("serialize_target round trips through the strict parser") {
  const std::string s = serialize_target("line one\nline two", "HELLO WORLD");
  CHECK(s == "<think>line one\nline two</think><answer>HELLO WORLD</answer>");
  const auto p = parse_output(s);
  CHECK(p.format_ok);
  CHECK(p.answer == "HELLO WORLD");
  CHECK(contains_format_tag("a </answer> b"));
  CHECK_FALSE(contains_format_tag("a <b> c"));
}
