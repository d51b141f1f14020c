#pragma once

// Cuts labeled training windows out of ground-truth events and builds one
// dictionary per measurement family.

#include <array>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pulsesrc/dictionary.hpp"
#include "pulsesrc/screening.hpp"
#include "pulsesrc/seeding.hpp"
#include "pulsesrc/synth.hpp"

namespace pulsesrc {

struct TrainingOptions {
  Thresholds thresholds;
  int w = kDefaultWindow;
  int random_background_per_channel = 1;
  std::uint64_t seed = 0;
};

/// Peak of the trailing short RMS over every window that touches the burst.
inline std::int64_t pulse_peak_index(const WaveformRecord& record, const PulseInterval& p,
                                     int pulse_window) {
  const auto s = trailing_rms(record.channel(p.channel), static_cast<std::size_t>(pulse_window));
  const auto len = static_cast<std::int64_t>(record.length());
  std::int64_t best = std::clamp<std::int64_t>(p.start, 0, len - 1);
  double best_v = -1.0;
  for (auto k = std::max<std::int64_t>(p.start, pulse_window - 1);
       k < std::min<std::int64_t>(p.end + pulse_window - 1, len); ++k) {
    const double v = s[static_cast<std::size_t>(k)];
    if (v > best_v) {
      best_v = v;
      best = k;
    }
  }
  return best;
}

inline bool overlaps(std::int64_t a0, std::int64_t a1, std::int64_t b0, std::int64_t b1) {
  return a0 < b1 && b0 < a1;
}

/// Adds one event's windows to the per-family training sets. Target windows
/// are centered like screening candidates; background windows are screening
/// candidates that contain no pulse plus random pulse-free windows.
inline void add_training_windows(const WaveformRecord& record, const GroundTruth& truth,
                                 const TrainingOptions& opt, std::uint64_t event_seed,
                                 std::array<TrainingSet, kFamilyCount>& sets) {
  const auto& th = opt.thresholds;
  auto push = [&](std::vector<std::vector<double>>& dst, const SampleWindow& win) {
    try {
      dst.push_back(normalize_unit(win).values);
    } catch (const ZeroEnergyWindow&) {
    }
  };
  auto pulse_free = [&](ChannelKind c, std::int64_t s, std::int64_t e) {
    for (const auto& p : truth.pulses)
      if (p.channel == c && overlaps(s, e, p.start, p.end)) return false;
    return true;
  };

  for (const auto& p : truth.pulses) {
    const auto peak = pulse_peak_index(record, p, th.pulse_window);
    const auto start = centered_window_start(peak, th.pulse_window, opt.w);
    auto& ts = sets[index_of(family_of(p.channel))];
    push(p.polarity == Polarity::Pulse ? ts.target_pulses : ts.target_inverse,
         slice_window_clamped(record, p.channel, start, opt.w));
  }

  const auto report = run_screening(record, th, opt.w);
  for (const auto& c : report.candidates)
    if (pulse_free(c.channel, c.start_index, c.end_index))
      push(sets[index_of(family_of(c.channel))].background,
           slice_window_clamped(record, c.channel, c.start_index, opt.w));

  std::mt19937_64 rng(derive_seed(event_seed ^ opt.seed, 7));
  const auto len = static_cast<std::int64_t>(record.length());
  if (len < opt.w) return;
  for (auto c : kAllChannels) {
    for (int r = 0; r < opt.random_background_per_channel; ++r) {
      const auto start = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(len - opt.w + 1));
      if (pulse_free(c, start, start + opt.w))
        push(sets[index_of(family_of(c))].background, slice_window(record, c, start, opt.w));
    }
  }
}

inline std::array<TrainingSet, kFamilyCount> empty_training_sets(int w) {
  std::array<TrainingSet, kFamilyCount> sets;
  for (auto f : kAllFamilies) {
    sets[index_of(f)].family = f;
    sets[index_of(f)].w = w;
  }
  return sets;
}

inline std::string describe_counts(const TrainingSet& ts) {
  return std::string(name_of(ts.family)) + ": " + std::to_string(ts.target_pulses.size()) +
         " pulse, " + std::to_string(ts.target_inverse.size()) + " inverse-pulse, " +
         std::to_string(ts.background.size()) + " background windows";
}

}  // namespace pulsesrc
