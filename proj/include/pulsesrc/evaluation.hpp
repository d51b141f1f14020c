#pragma once

#include <algorithm>
#include <array>
#include <tuple>
#include <vector>

#include "pulsesrc/classify.hpp"
#include "pulsesrc/synth.hpp"

namespace pulsesrc {

struct Detection {
  ChannelKind channel{};
  std::int64_t start = 0;  // classified window, [start, end)
  std::int64_t end = 0;
};

struct FamilyScore {
  int n_true_pulses = 0;
  int true_positives = 0;
  int false_positives = 0;

  // Both rates use the true pulse count as denominator.
  double correct_detection_pct() const {
    return n_true_pulses ? 100.0 * true_positives / n_true_pulses : 0.0;
  }
  double false_detection_pct() const {
    return n_true_pulses ? 100.0 * false_positives / n_true_pulses : 0.0;
  }
};

struct EvalSummary {
  int n_events = 0;
  std::array<FamilyScore, kFamilyCount> families{};
  const FamilyScore& operator[](Family f) const { return families[index_of(f)]; }
};

inline std::vector<Detection> detections_from(const std::vector<ClassificationResult>& results,
                                              int w_class) {
  std::vector<Detection> out;
  for (const auto& r : results)
    if (r.label == +1) out.push_back({r.channel, r.window_start, r.window_start + w_class});
  return out;
}

/// Scores one event. A detection is correct when its window covers at least
/// half of a not-yet-matched true pulse on the same channel; each detection
/// claims the unmatched pulse it overlaps most. Everything else is false.
inline std::array<FamilyScore, kFamilyCount> score_event(const GroundTruth& truth,
                                                         std::vector<Detection> detections) {
  std::array<FamilyScore, kFamilyCount> out{};
  for (const auto& p : truth.pulses) ++out[index_of(family_of(p.channel))].n_true_pulses;
  std::sort(detections.begin(), detections.end(), [](const auto& a, const auto& b) {
    return std::tuple(index_of(a.channel), a.start, a.end) <
           std::tuple(index_of(b.channel), b.start, b.end);
  });
  std::vector<char> matched(truth.pulses.size(), 0);
  for (const auto& d : detections) {
    std::int64_t best_overlap = -1;
    std::size_t best = 0;
    for (std::size_t i = 0; i < truth.pulses.size(); ++i) {
      const auto& p = truth.pulses[i];
      if (matched[i] || p.channel != d.channel) continue;
      const auto ov = std::min(d.end, p.end) - std::max(d.start, p.start);
      if (2 * ov >= p.end - p.start && ov > best_overlap) {
        best_overlap = ov;
        best = i;
      }
    }
    auto& fs = out[index_of(family_of(d.channel))];
    if (best_overlap >= 0) {
      matched[best] = 1;
      ++fs.true_positives;
    } else {
      ++fs.false_positives;
    }
  }
  return out;
}

inline void accumulate(EvalSummary& sum, const std::array<FamilyScore, kFamilyCount>& ev) {
  ++sum.n_events;
  for (std::size_t f = 0; f < kFamilyCount; ++f) {
    sum.families[f].n_true_pulses += ev[f].n_true_pulses;
    sum.families[f].true_positives += ev[f].true_positives;
    sum.families[f].false_positives += ev[f].false_positives;
  }
}

}  // namespace pulsesrc
