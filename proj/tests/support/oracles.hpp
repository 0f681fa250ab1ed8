#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tsforge/mixture.hpp"

namespace tsforge::testing {

// Plain recursion over edit operations, no memo table. Matching equal heads
// first is always optimal, which keeps the tree small enough for short inputs.
inline int edit_distance_recursive(const std::vector<std::string>& a, std::size_t i, const std::vector<std::string>& b,
                                   std::size_t j) {
  if (i == a.size()) return static_cast<int>(b.size() - j);
  if (j == b.size()) return static_cast<int>(a.size() - i);
  if (a[i] == b[j]) return edit_distance_recursive(a, i + 1, b, j + 1);
  return 1 + std::min({edit_distance_recursive(a, i + 1, b, j + 1), edit_distance_recursive(a, i + 1, b, j),
                       edit_distance_recursive(a, i, b, j + 1)});
}

inline int edit_distance_recursive(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return edit_distance_recursive(a, 0, b, 0);
}

// All strings over {0..alphabet-1} of length <= max_len, encoded as
// (length, base-alphabet digits). Edit distance is the shortest path in the
// graph whose edges are single substitutions, insertions and deletions; an
// optimal edit script never needs a string longer than its endpoints, so the
// graph restricted to max_len is exact.
class EditGraph {
 public:
  EditGraph(int alphabet, int max_len) : alphabet_(alphabet), max_len_(max_len) {
    enumerate({});
    for (std::size_t i = 0; i < strings_.size(); ++i) index_[strings_[i]] = i;
  }

  const std::vector<std::vector<int>>& strings() const { return strings_; }

  std::vector<int> distances_from(std::size_t source) const {
    std::vector<int> dist(strings_.size(), -1);
    std::deque<std::size_t> queue{source};
    dist[source] = 0;
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      for (const auto& next : neighbours(strings_[u])) {
        const std::size_t v = index_.at(next);
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          queue.push_back(v);
        }
      }
    }
    return dist;
  }

 private:
  void enumerate(std::vector<int> prefix) {
    strings_.push_back(prefix);
    if (static_cast<int>(prefix.size()) == max_len_) return;
    for (int c = 0; c < alphabet_; ++c) {
      prefix.push_back(c);
      enumerate(prefix);
      prefix.pop_back();
    }
  }

  std::vector<std::vector<int>> neighbours(const std::vector<int>& s) const {
    std::vector<std::vector<int>> out;
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (int c = 0; c < alphabet_; ++c) {
        if (c == s[i]) continue;
        auto t = s;
        t[i] = c;
        out.push_back(std::move(t));
      }
      auto t = s;
      t.erase(t.begin() + static_cast<std::ptrdiff_t>(i));
      out.push_back(std::move(t));
    }
    if (static_cast<int>(s.size()) < max_len_) {
      for (std::size_t i = 0; i <= s.size(); ++i) {
        for (int c = 0; c < alphabet_; ++c) {
          auto t = s;
          t.insert(t.begin() + static_cast<std::ptrdiff_t>(i), c);
          out.push_back(std::move(t));
        }
      }
    }
    return out;
  }

  int alphabet_;
  int max_len_;
  std::vector<std::vector<int>> strings_;
  std::map<std::vector<int>, std::size_t> index_;
};

inline std::vector<std::string> as_words(const std::vector<int>& s) {
  static const char* names[] = {"A", "B", "C", "D", "E"};
  std::vector<std::string> out;
  for (int c : s) out.emplace_back(names[c]);
  return out;
}

// Seconds during which at least two intervals are active, counted on the
// 16 kHz sample grid: sample n is active for [start, end) if start <= n/fs < end.
inline double overlap_by_samples(const std::vector<SpeakerInterval>& intervals) {
  double horizon = 0.0;
  for (const auto& iv : intervals) horizon = std::max(horizon, iv.end_s);
  const auto n = static_cast<std::int64_t>(horizon * kSampleRate) + 2;
  std::int64_t count = 0;
  for (std::int64_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / kSampleRate;
    int active = 0;
    for (const auto& iv : intervals) active += (iv.start_s <= t && t < iv.end_s);
    count += active >= 2;
  }
  return static_cast<double>(count) / kSampleRate;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("tsforge-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

}  // namespace tsforge::testing
