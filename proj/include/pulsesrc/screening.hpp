#pragma once

// Time-domain screening: 64-sample RMS against status thresholds gives the
// pole-status and fault-on timelines; 16-sample RMS of the still-quiet
// channels against the pulse thresholds tags candidate pulse windows.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pulsesrc/error.hpp"
#include "pulsesrc/waveform.hpp"

namespace pulsesrc {

struct Thresholds {
  double v_status = 4000.0;  // V
  double v_pulse = 2800.0;   // V
  double i_status = 1000.0;  // A
  double i_pulse = 900.0;    // A
  int status_window = 64;
  int pulse_window = 16;
  int debounce = 64;

  void validate() const {
    if (!(v_status > 0 && v_pulse > 0 && i_status > 0 && i_pulse > 0))
      throw PreconditionError("thresholds must be positive");
    if (pulse_window < 1 || status_window < 1 || debounce < 1)
      throw PreconditionError("windows and debounce must be >= 1 sample");
    if (pulse_window >= status_window)
      throw PreconditionError("pulse_window must be shorter than status_window");
  }

  double pulse_threshold(ChannelKind c) const { return is_voltage(c) ? v_pulse : i_pulse; }
  double status_threshold(ChannelKind c) const { return is_voltage(c) ? v_status : i_status; }
};

/// Sqrt of the mean square of `values` (window length = values.size()).
inline double rms(std::span<const double> values) {
  if (values.empty()) throw PreconditionError("rms of empty sequence");
  double s = 0.0;
  for (double x : values) s += x * x;
  return std::sqrt(s / static_cast<double>(values.size()));
}

/// out[k] = rms(values[k .. k+m)). Each window is summed directly: with
/// m <= 64 that is cheap, and unlike a running sum it cannot lose a small
/// signal that follows a large one to cancellation.
inline std::vector<double> sliding_rms(std::span<const double> values, std::size_t m) {
  if (m == 0) throw PreconditionError("sliding_rms window must be >= 1");
  if (m > values.size())
    throw PreconditionError("sliding_rms window " + std::to_string(m) + " exceeds length " +
                            std::to_string(values.size()));
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = values[i] * values[i];
  const std::size_t out_len = values.size() - m + 1;
  std::vector<double> out(out_len);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < out_len; ++k) {
    double sum = 0.0;
    for (std::size_t i = k; i < k + m; ++i) sum += sq[i];
    out[k] = std::sqrt(sum * inv_m);
  }
  return out;
}

/// Trailing RMS aligned to record indices: out[k] is the RMS of the m samples
/// ending at k, or nullopt-equivalent NaN for k < m - 1.
inline std::vector<double> trailing_rms(std::span<const double> values, std::size_t m) {
  std::vector<double> out(values.size(), std::nan(""));
  if (values.size() < m) return out;
  const auto r = sliding_rms(values, m);
  std::copy(r.begin(), r.end(), out.begin() + static_cast<std::ptrdiff_t>(m - 1));
  return out;
}

struct FlagEntry {
  std::int64_t index = 0;
  bool value = false;
  friend bool operator==(const FlagEntry&, const FlagEntry&) = default;
};

// First entry at index 0 holds the initial state; later entries are
// transitions, strictly increasing and alternating.
using FlagTimeline = std::vector<FlagEntry>;

inline bool value_at(const FlagTimeline& t, std::int64_t index) {
  bool v = t.empty() ? false : t.front().value;
  for (const auto& e : t) {
    if (e.index > index) break;
    v = e.value;
  }
  return v;
}

inline std::vector<std::uint8_t> expand(const FlagTimeline& t, std::size_t length) {
  std::vector<std::uint8_t> out(length, 0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto lo = static_cast<std::size_t>(std::max<std::int64_t>(t[i].index, 0));
    const auto hi = i + 1 < t.size() ? static_cast<std::size_t>(t[i + 1].index) : length;
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(std::min(lo, length)),
              out.begin() + static_cast<std::ptrdiff_t>(std::min(hi, length)),
              static_cast<std::uint8_t>(t[i].value));
  }
  return out;
}

/// Debounced threshold flag over a trailing RMS of width `window`. The initial
/// state comes from the first full window; a transition is emitted at the
/// sample where the opposite raw state has held for `debounce` consecutive
/// samples.
inline FlagTimeline debounced_flag(std::span<const double> values, std::size_t window,
                                   double threshold, int debounce) {
  const auto r = sliding_rms(values, window);
  FlagTimeline out;
  bool state = r[0] >= threshold;
  out.push_back({0, state});
  int run = 0;
  for (std::size_t j = 1; j < r.size(); ++j) {
    const bool raw = r[j] >= threshold;
    run = raw != state ? run + 1 : 0;
    if (run >= debounce) {
      state = raw;
      run = 0;
      out.push_back({static_cast<std::int64_t>(j + window - 1), state});
    }
  }
  return out;
}

struct PhaseTimeline {
  FlagTimeline pole_status;  // true = closed
  FlagTimeline fault_on;
  FlagTimeline source_live;  // SS voltage above the status threshold
};

struct StatusTimeline {
  std::array<PhaseTimeline, kPhaseCount> phases;
  const PhaseTimeline& operator[](Phase p) const { return phases[index_of(p)]; }
};

inline StatusTimeline detect_status(const WaveformRecord& record, const Thresholds& th) {
  th.validate();
  const auto m = static_cast<std::size_t>(th.status_window);
  if (record.length() < m)
    throw PreconditionError("record (" + std::to_string(record.length()) +
                            " samples) shorter than status window " + std::to_string(m));
  StatusTimeline out;
  for (auto p : kAllPhases) {
    auto& ph = out.phases[index_of(p)];
    ph.pole_status = debounced_flag(record.channel(channel_of(Family::LsVoltage, p)), m,
                                    th.v_status, th.debounce);
    ph.fault_on = debounced_flag(record.channel(channel_of(Family::LsCurrent, p)), m,
                                 th.i_status, th.debounce);
    ph.source_live = debounced_flag(record.channel(channel_of(Family::SsVoltage, p)), m,
                                    th.v_status, th.debounce);
  }
  return out;
}

struct CandidateWindow {
  ChannelKind channel{};
  std::int64_t peak_index = 0;   // sample of max trailing short RMS
  std::int64_t start_index = 0;  // may be < 0 or end > length near edges
  std::int64_t end_index = 0;
  double peak_rms = 0.0;
  friend bool operator==(const CandidateWindow&, const CandidateWindow&) = default;
};

/// Classification-window start for a short-RMS peak: the window of length
/// `w_class` is centered on the middle of the `pulse_window` samples that
/// produced the peak. Training and screening share this registration.
constexpr std::int64_t centered_window_start(std::int64_t peak_index, int pulse_window,
                                             int w_class) {
  return peak_index + 1 - pulse_window / 2 - w_class / 2;
}

/// Mask of samples where channel `c` is screened for pulses: its phase is
/// open and the channel itself is below its status threshold (LS current not
/// fault-on, SS voltage not live).
inline std::vector<std::uint8_t> screened_mask(const StatusTimeline& tl, ChannelKind c,
                                               std::size_t length) {
  const auto& ph = tl[phase_of(c)];
  auto mask = expand(ph.pole_status, length);
  for (auto& v : mask) v = !v;
  const FlagTimeline* own = nullptr;
  if (family_of(c) == Family::LsCurrent) own = &ph.fault_on;
  if (family_of(c) == Family::SsVoltage) own = &ph.source_live;
  if (own) {
    const auto live = expand(*own, length);
    for (std::size_t k = 0; k < length; ++k) mask[k] = mask[k] && !live[k];
  }
  return mask;
}

inline std::vector<CandidateWindow> tag_candidates(const WaveformRecord& record,
                                                   const StatusTimeline& timeline,
                                                   const Thresholds& th, int w_class) {
  th.validate();
  if (w_class < 1 || static_cast<std::size_t>(w_class) > record.length())
    throw PreconditionError("classification window " + std::to_string(w_class) +
                            " does not fit the record");
  const std::size_t len = record.length();
  const auto pw = static_cast<std::size_t>(th.pulse_window);
  const std::int64_t merge_gap = record.samples_per_cycle();

  std::vector<CandidateWindow> out;
  for (auto c : kAllChannels) {
    const auto mask = screened_mask(timeline, c, len);
    const auto s = trailing_rms(record.channel(c), pw);
    const double thr = th.pulse_threshold(c);

    struct Run {
      std::int64_t first, last;  // inclusive
      bool inherited;            // already above threshold when the mask opened
    };
    std::vector<Run> runs;
    for (std::size_t k = pw - 1; k < len; ++k) {
      if (!(mask[k] && s[k] >= thr)) continue;
      const auto ki = static_cast<std::int64_t>(k);
      if (!runs.empty() && ki - runs.back().last - 1 < merge_gap)
        runs.back().last = ki;
      else
        runs.push_back({ki, ki, k > pw - 1 && s[k - 1] >= thr});
    }

    std::vector<CandidateWindow> chan;
    for (const auto& run : runs) {
      if (run.inherited) continue;
      CandidateWindow cw{c, run.first, 0, 0, -1.0};
      for (auto k = run.first; k <= run.last; ++k) {
        const double v = s[static_cast<std::size_t>(k)];
        if (mask[static_cast<std::size_t>(k)] && v > cw.peak_rms) {
          cw.peak_rms = v;
          cw.peak_index = k;
        }
      }
      cw.start_index = centered_window_start(cw.peak_index, th.pulse_window, w_class);
      cw.end_index = cw.start_index + w_class;
      // Windows that would overlap collapse onto the stronger peak.
      if (!chan.empty() && cw.start_index < chan.back().end_index) {
        if (cw.peak_rms > chan.back().peak_rms) chan.back() = cw;
        continue;
      }
      chan.push_back(cw);
    }
    out.insert(out.end(), chan.begin(), chan.end());
  }
  return out;
}

struct ScreeningReport {
  std::string device_id;
  std::optional<std::string> t0;
  std::size_t length = 0;
  StatusTimeline timeline;
  std::vector<CandidateWindow> candidates;
};

inline ScreeningReport run_screening(const WaveformRecord& record, const Thresholds& th,
                                     int w_class) {
  ScreeningReport rep;
  rep.device_id = record.device_id();
  rep.t0 = record.start_timestamp();
  rep.length = record.length();
  rep.timeline = detect_status(record, th);
  rep.candidates = tag_candidates(record, rep.timeline, th, w_class);
  return rep;
}

}  // namespace pulsesrc
