#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tsforge {

using Words = std::vector<std::string>;

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kAnswerOpen = "<answer>";
inline constexpr std::string_view kAnswerClose = "</answer>";

// Uppercases, maps everything but A-Z, 0-9 and apostrophe to a space, splits.
Words normalize_text(std::string_view s);

struct AlignmentCounts {
  int sub = 0;
  int del = 0;
  int ins = 0;
  int hits = 0;
  int n_ref = 0;

  int errors() const { return sub + del + ins; }
  bool operator==(const AlignmentCounts&) const = default;
};

// Minimal unit-cost word alignment. Among minimal alignments the backtrace
// prefers match, then substitution, deletion, insertion.
AlignmentCounts align(const Words& hyp, const Words& ref);

// 1 - (sub + del + ins) / n_ref, unclamped (negative for long insertions).
// Throws when the reference is empty.
double reward_wer(const AlignmentCounts& c);

struct ParsedOutput {
  std::string raw;
  std::optional<std::string> think;
  std::optional<std::string> answer;
  bool format_ok = false;
};

// Strict format check for <think>T</think><answer>A</answer>. Surrounding
// whitespace and whitespace between the two blocks are tolerated; each tag
// appears exactly once. When the strict check fails, `answer` is still filled
// if a well-formed answer pair exists. Never throws.
ParsedOutput parse_output(std::string_view raw);

double reward_format(const ParsedOutput& p);

struct RewardBreakdown {
  double r_wer = 0.0;
  double r_format = 0.0;
  double r_total = 0.0;
  AlignmentCounts counts;
};

// Scores one raw output against a reference transcript. A missing answer is
// treated as an empty hypothesis (all deletions).
RewardBreakdown reward_total(std::string_view raw, std::string_view ref_transcript);

// The string a model is trained to emit for a (think, answer) pair.
std::string serialize_target(std::string_view think, std::string_view answer);

// True if s contains any of the four format tags.
bool contains_format_tag(std::string_view s);

}  // namespace tsforge
