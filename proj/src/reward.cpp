#include "tsforge/reward.hpp"

#include <algorithm>
#include <stdexcept>

#include "tsforge/eval.hpp"

namespace tsforge {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

}  // namespace

bool contains_format_tag(std::string_view s) {
  for (auto tag : {kThinkOpen, kThinkClose, kAnswerOpen, kAnswerClose}) {
    if (s.find(tag) != std::string_view::npos) return true;
  }
  return false;
}

Words normalize_text(std::string_view s) {
  Words words;
  std::string current;
  for (char raw : s) {
    char c = raw;
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    const bool keep = (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '\'';
    if (keep) {
      current.push_back(c);
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

AlignmentCounts align(const Words& hyp, const Words& ref) {
  const std::size_t n = ref.size(), m = hyp.size();
  const std::size_t stride = m + 1;
  std::vector<int> cost((n + 1) * stride);
  auto at = [&](std::size_t i, std::size_t j) -> int& { return cost[i * stride + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const int diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  AlignmentCounts c;
  c.n_ref = static_cast<int>(n);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const int here = at(i, j);
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && at(i - 1, j - 1) == here) {
      ++c.hits;
      --i, --j;
    } else if (i > 0 && j > 0 && at(i - 1, j - 1) + 1 == here) {
      ++c.sub;
      --i, --j;
    } else if (i > 0 && at(i - 1, j) + 1 == here) {
      ++c.del;
      --i;
    } else {
      ++c.ins;
      --j;
    }
  }
  return c;
}

double reward_wer(const AlignmentCounts& c) {
  if (c.n_ref <= 0) throw std::invalid_argument("reward_wer: reference has no words");
  return 1.0 - static_cast<double>(c.errors()) / c.n_ref;
}

ParsedOutput parse_output(std::string_view raw) {
  ParsedOutput p;
  p.raw = std::string(raw);
  std::string_view s = trim(raw);

  auto strict = [&]() -> bool {
    if (!starts_with(s, kThinkOpen)) return false;
    std::string_view rest = s.substr(kThinkOpen.size());
    const auto think_end = rest.find(kThinkClose);
    if (think_end == std::string_view::npos) return false;
    std::string_view think = rest.substr(0, think_end);
    if (contains_format_tag(think)) return false;
    rest = rest.substr(think_end + kThinkClose.size());
    while (!rest.empty() && is_space(rest.front())) rest.remove_prefix(1);
    if (!starts_with(rest, kAnswerOpen)) return false;
    rest = rest.substr(kAnswerOpen.size());
    const auto answer_end = rest.find(kAnswerClose);
    if (answer_end == std::string_view::npos) return false;
    std::string_view answer = rest.substr(0, answer_end);
    if (contains_format_tag(answer)) return false;
    if (answer_end + kAnswerClose.size() != rest.size()) return false;
    p.think = std::string(think);
    p.answer = std::string(answer);
    return true;
  };

  p.format_ok = strict();
  if (!p.format_ok) {
    p.think.reset();
    p.answer = find_answer(raw);
  }
  return p;
}

double reward_format(const ParsedOutput& p) { return p.format_ok ? 1.0 : 0.0; }

RewardBreakdown reward_total(std::string_view raw, std::string_view ref_transcript) {
  const Words ref = normalize_text(ref_transcript);
  if (ref.empty()) throw std::invalid_argument("reward_total: reference transcript is empty");
  const ParsedOutput parsed = parse_output(raw);
  const Words hyp = parsed.answer ? normalize_text(*parsed.answer) : Words{};
  RewardBreakdown r;
  r.counts = align(hyp, ref);
  r.r_wer = reward_wer(r.counts);
  r.r_format = reward_format(parsed);
  r.r_total = r.r_wer + r.r_format;
  return r;
}

std::string serialize_target(std::string_view think, std::string_view answer) {
  std::string out;
  out.reserve(think.size() + answer.size() + 34);
  out.append(kThinkOpen).append(think).append(kThinkClose);
  out.append(kAnswerOpen).append(answer).append(kAnswerClose);
  return out;
}

}  // namespace tsforge
