#pragma once

// Synthetic pulse-recloser event records with exact ground truth.
//
// Waveshapes are idealized: a pulse is a half-sine burst of 0.25-0.45 cycles
// followed by a damped opposite-polarity ring; inrush is a train of decaying
// unipolar lobes. Pulses are fired on the crest of the tested phase's source
// voltage (positive crest for a pulse, negative for the inverse pulse).
//
// Scenario amplitudes (pulse_amplitude, fault_current) are RMS-equivalent
// magnitudes: the burst peak is sqrt(2) times the value, so the burst's
// best 16-sample RMS is never below the scenario value.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "pulsesrc/error.hpp"
#include "pulsesrc/seeding.hpp"
#include "pulsesrc/waveform.hpp"

namespace pulsesrc {

inline constexpr double kNominalVoltagePeak = 7200.0;      // V, line-to-ground
inline constexpr double kCurrentNoiseReference = 1000.0;   // A peak, noise reference
inline constexpr double kMinPulseDuration = 0.25;          // cycles
inline constexpr double kMaxPulseDuration = 0.45;
inline constexpr double kMinFaultCurrent = 800.0;          // A
inline constexpr double kMaxFaultCurrent = 1500.0;
inline constexpr double kTailDamping = 0.3;
inline constexpr double kTailCycles = 0.5;
inline constexpr double kTailRatio = 0.3;
inline constexpr double kDeltaOffsetRatio = 0.3;

enum class Polarity : std::uint8_t { Pulse, Inverse };

constexpr std::string_view name_of(Polarity p) {
  return p == Polarity::Pulse ? "pulse" : "inverse";
}

enum class ScenarioKind : std::uint8_t {
  UpstreamPulseTest,
  TemporaryFault,
  PermanentFault,
  InrushOnly,
  Quiescent,
};

inline constexpr std::array<ScenarioKind, 5> kAllScenarioKinds = {
    ScenarioKind::UpstreamPulseTest, ScenarioKind::TemporaryFault, ScenarioKind::PermanentFault,
    ScenarioKind::InrushOnly, ScenarioKind::Quiescent};

constexpr std::string_view name_of(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::UpstreamPulseTest: return "upstream_pulse_test";
    case ScenarioKind::TemporaryFault: return "temporary_fault";
    case ScenarioKind::PermanentFault: return "permanent_fault";
    case ScenarioKind::InrushOnly: return "inrush_only";
    case ScenarioKind::Quiescent: return "quiescent";
  }
  return "?";
}

inline std::optional<ScenarioKind> parse_scenario_kind(std::string_view s) {
  for (auto k : kAllScenarioKinds)
    if (name_of(k) == s) return k;
  return std::nullopt;
}

struct EventScenario {
  ScenarioKind kind = ScenarioKind::Quiescent;
  double pulse_amplitude = 4500.0;  // V, RMS-equivalent
  double pulse_duration = 0.35;     // cycles
  double fault_current = 1300.0;    // A, RMS-equivalent pulse current into a fault
  double noise_snr_db = 40.0;
  std::uint64_t seed = 0;
  int cycles = 40;
  int samples_per_cycle = kDefaultSamplesPerCycle;
  std::optional<Phase> fault_phase;  // drawn from the seed when absent

  void validate() const {
    constexpr double eps = 1e-12;
    if (pulse_duration < kMinPulseDuration - eps || pulse_duration > kMaxPulseDuration + eps)
      throw PreconditionError("pulse_duration " + std::to_string(pulse_duration) +
                              " outside [0.25, 0.45] cycles");
    const bool faulted = kind == ScenarioKind::PermanentFault;
    if (faulted && (fault_current < kMinFaultCurrent || fault_current > kMaxFaultCurrent))
      throw PreconditionError("fault_current " + std::to_string(fault_current) +
                              " outside [800, 1500] A");
    if (!(pulse_amplitude > 0)) throw PreconditionError("pulse_amplitude must be positive");
    if (samples_per_cycle < kMinSamplesPerCycle)
      throw PreconditionError("samples_per_cycle must be >= 16");
    if (cycles < 1) throw PreconditionError("cycles must be >= 1");
  }
};

struct PulseInterval {
  ChannelKind channel{};
  std::int64_t start = 0;  // burst span, [start, end)
  std::int64_t end = 0;
  Polarity polarity = Polarity::Pulse;
  double amplitude = 0.0;  // RMS-equivalent
  friend bool operator==(const PulseInterval&, const PulseInterval&) = default;
};

struct PoleEvent {
  std::int64_t index = 0;
  Phase phase{};
  bool closed = false;
  friend bool operator==(const PoleEvent&, const PoleEvent&) = default;
};

struct SpanInterval {
  ChannelKind channel{};
  std::int64_t start = 0;
  std::int64_t end = 0;
  friend bool operator==(const SpanInterval&, const SpanInterval&) = default;
};

struct GroundTruth {
  std::vector<PulseInterval> pulses;
  std::vector<PoleEvent> pole_events;
  std::vector<SpanInterval> faults;  // fault current on an LS current channel
  std::vector<SpanInterval> inrush;  // inrush bursts on LS current channels
  std::array<bool, kPhaseCount> closed_at_start{};
  std::array<bool, kPhaseCount> closed_at_end{};
  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct NoiseSpec {
  double snr_db = 40.0;
  std::uint64_t seed = 0;
};

/// Fundamental-frequency sinusoid, `cycles * spc` samples, plus Gaussian noise
/// whose power is the sinusoid power divided by 10^(snr/10).
inline std::vector<double> gen_steady(double amplitude, double phase_offset, int cycles, int spc,
                                      std::optional<NoiseSpec> noise = std::nullopt) {
  if (spc < kMinSamplesPerCycle) throw PreconditionError("spc must be >= 16");
  const auto len = static_cast<std::size_t>(cycles) * static_cast<std::size_t>(spc);
  std::vector<double> out(len);
  const double w = 2.0 * std::numbers::pi / spc;
  for (std::size_t i = 0; i < len; ++i)
    out[i] = amplitude * std::sin(w * static_cast<double>(i) + phase_offset);
  if (noise) {
    const double sigma = std::abs(amplitude) / std::sqrt(2.0) / std::pow(10.0, noise->snr_db / 20.0);
    std::mt19937_64 rng(noise->seed);
    std::normal_distribution<double> n01;
    for (auto& v : out) v += sigma * n01(rng);
  }
  return out;
}

constexpr int burst_length(double duration_cycles, int spc) {
  return static_cast<int>(duration_cycles * spc + 1e-9);
}

/// Half-sine burst of floor(duration * spc) samples, then a damped
/// opposite-polarity ring of half a cycle (damping ratio 0.3). The segment is
/// scaled so that its largest magnitude equals `amplitude`.
inline std::vector<double> gen_pulse(double amplitude, double duration_cycles, Polarity polarity,
                                     int spc) {
  constexpr double eps = 1e-12;
  if (duration_cycles < kMinPulseDuration - eps || duration_cycles > kMaxPulseDuration + eps)
    throw PreconditionError("pulse duration " + std::to_string(duration_cycles) +
                            " outside [0.25, 0.45] cycles");
  const int n = burst_length(duration_cycles, spc);
  const int tail = static_cast<int>(kTailCycles * spc);
  std::vector<double> seg(static_cast<std::size_t>(n + tail));
  const double pi = std::numbers::pi;
  for (int i = 0; i < n; ++i) seg[static_cast<std::size_t>(i)] = std::sin(pi * (i + 0.5) / n);
  const double wd = pi / n;
  const double wn = wd / std::sqrt(1.0 - kTailDamping * kTailDamping);
  for (int j = 1; j <= tail; ++j)
    seg[static_cast<std::size_t>(n + j - 1)] =
        -kTailRatio * std::exp(-kTailDamping * wn * j) * std::sin(wd * j);
  double peak = 0.0;
  for (double v : seg) peak = std::max(peak, std::abs(v));
  const double scale = (polarity == Polarity::Pulse ? amplitude : -amplitude) / peak;
  for (auto& v : seg) v *= scale;
  return seg;
}

namespace detail {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi_inclusive) {
  const auto span = static_cast<std::uint64_t>(hi_inclusive - lo + 1);
  return lo + static_cast<int>(rng() % span);
}

constexpr double phase_angle(Phase p) {
  switch (p) {
    case Phase::A: return 0.0;
    case Phase::B: return -2.0 * std::numbers::pi / 3.0;
    case Phase::C: return 2.0 * std::numbers::pi / 3.0;
  }
  return 0.0;
}

// Builds one event sample by sample from per-phase state segments.
class EventBuilder {
 public:
  EventBuilder(const EventScenario& sc, std::mt19937_64& rng)
      : sc_(sc),
        spc_(sc.samples_per_cycle),
        len_(static_cast<std::int64_t>(sc.cycles) * sc.samples_per_cycle),
        omega_(2.0 * std::numbers::pi / sc.samples_per_cycle),
        theta0_(uniform(rng, 0.0, 2.0 * std::numbers::pi)),
        v_nom_(kNominalVoltagePeak * uniform(rng, 0.97, 1.03)),
        i_load_(uniform(rng, 100.0, 300.0)),
        load_lag_(uniform(rng, 0.1, 0.5)) {
    for (auto& c : ch_) c.assign(static_cast<std::size_t>(len_), 0.0);
  }

  std::int64_t length() const { return len_; }
  int spc() const { return spc_; }
  double v_nom() const { return v_nom_; }

  double source(Phase p, std::int64_t t) const {
    return v_nom_ * std::sin(omega_ * static_cast<double>(t) + theta0_ + phase_angle(p));
  }

  // Sample index of the next crest (positive or negative) of phase p at or after t.
  std::int64_t next_crest(Phase p, std::int64_t t, bool positive) const {
    const double target = positive ? std::numbers::pi / 2 : 3 * std::numbers::pi / 2;
    const double two_pi = 2 * std::numbers::pi;
    double arg = std::fmod(omega_ * static_cast<double>(t) + theta0_ + phase_angle(p), two_pi);
    if (arg < 0) arg += two_pi;
    double delta = target - arg;
    while (delta < 0) delta += two_pi;
    return t + static_cast<std::int64_t>(std::llround(delta / omega_));
  }

  void require(std::int64_t last_index) const {
    if (last_index >= len_)
      throw PreconditionError(std::string(name_of(sc_.kind)) + " scenario needs at least " +
                              std::to_string(last_index / spc_ + 1) + " cycles, got " +
                              std::to_string(sc_.cycles));
  }

  // Steady source, closed device, load current over [from, to).
  void closed_span(Phase p, std::int64_t from, std::int64_t to, bool source_live = true) {
    for (auto t = std::max<std::int64_t>(from, 0); t < std::min(to, len_); ++t) {
      const double v = source(p, t);
      at(Family::SsVoltage, p, t) += source_live ? v : 0.0;
      at(Family::LsVoltage, p, t) += v;
      at(Family::LsCurrent, p, t) +=
          i_load_ * std::sin(omega_ * static_cast<double>(t) + theta0_ + phase_angle(p) - load_lag_);
    }
  }

  // Source-side voltage only (device open) over [from, to).
  void source_span(Phase p, std::int64_t from, std::int64_t to) {
    for (auto t = std::max<std::int64_t>(from, 0); t < std::min(to, len_); ++t)
      at(Family::SsVoltage, p, t) += source(p, t);
  }

  // Faulted phase while the device is still closed: sagged voltage, fault current.
  void fault_span(Phase p, std::int64_t from, std::int64_t to, double fault_peak, double sag,
                  GroundTruth& gt) {
    for (auto t = std::max<std::int64_t>(from, 0); t < std::min(to, len_); ++t) {
      const double arg = omega_ * static_cast<double>(t) + theta0_ + phase_angle(p);
      at(Family::SsVoltage, p, t) += source(p, t);
      at(Family::LsVoltage, p, t) += sag * source(p, t);
      at(Family::LsCurrent, p, t) += fault_peak * std::sin(arg - 1.2);
    }
    gt.faults.push_back({channel_of(Family::LsCurrent, p), from, to});
  }

  // Offset induced on an open phase through a downstream delta winding.
  void offset_span(Phase p, std::int64_t from, std::int64_t to, double ratio) {
    for (auto t = std::max<std::int64_t>(from, 0); t < std::min(to, len_); ++t)
      at(Family::LsVoltage, p, t) += ratio * source(p, t);
  }

  // Fires one pulse centered on `center`; returns the burst span.
  PulseInterval pulse(ChannelKind c, std::int64_t center, double rms_amplitude, Polarity pol,
                      GroundTruth& gt) {
    const auto seg = gen_pulse(std::sqrt(2.0) * rms_amplitude, sc_.pulse_duration, pol, spc_);
    const int n = burst_length(sc_.pulse_duration, spc_);
    const std::int64_t start = center - n / 2;
    require(start + static_cast<std::int64_t>(seg.size()));
    auto& dst = ch_[index_of(c)];
    for (std::size_t i = 0; i < seg.size(); ++i) dst[static_cast<std::size_t>(start) + i] += seg[i];
    PulseInterval iv{c, start, start + n, pol, rms_amplitude};
    gt.pulses.push_back(iv);
    return iv;
  }

  // Decaying unipolar lobes starting at `from` (transformer energization).
  void inrush(Phase p, std::int64_t from, double peak, GroundTruth& gt) {
    const double tau = 3.0 * spc_;
    const std::int64_t to = std::min<std::int64_t>(from + 8 * spc_, len_);
    const double psi = uniform_phase_;
    for (auto t = from; t < to; ++t) {
      const double s = std::sin(omega_ * static_cast<double>(t - from) + psi);
      const double lobe = s > 0 ? s * s : 0.0;
      at(Family::LsCurrent, p, t) += peak * std::exp(-static_cast<double>(t - from) / tau) * lobe;
    }
    gt.inrush.push_back({channel_of(Family::LsCurrent, p), from, to});
  }

  void set_inrush_phase(double psi) { uniform_phase_ = psi; }

  void add_noise(std::uint64_t seed) {
    const double snr = std::pow(10.0, sc_.noise_snr_db / 20.0);
    for (auto c : kAllChannels) {
      const double ref = is_voltage(c) ? v_nom_ : kCurrentNoiseReference;
      const double sigma = ref / std::sqrt(2.0) / snr;
      std::mt19937_64 rng(derive_seed(seed, 100 + index_of(c)));
      std::normal_distribution<double> n01;
      for (auto& v : ch_[index_of(c)]) v += sigma * n01(rng);
    }
  }

  WaveformRecord finish(std::string device) {
    return WaveformRecord(spc_, std::move(ch_), std::move(device));
  }

 private:
  double& at(Family f, Phase p, std::int64_t t) {
    return ch_[index_of(channel_of(f, p))][static_cast<std::size_t>(t)];
  }

  const EventScenario& sc_;
  int spc_;
  std::int64_t len_;
  double omega_;
  double theta0_;
  double v_nom_;
  double i_load_;
  double load_lag_;
  double uniform_phase_ = 0.0;
  WaveformRecord::Channels ch_;
};

}  // namespace detail

struct SyntheticEvent {
  WaveformRecord record;
  GroundTruth truth;
};

/// Generates one event. Timing, phase order, and secondary magnitudes are drawn
/// from `scenario.seed`; the result is a pure function of the scenario.
inline SyntheticEvent gen_event(const EventScenario& sc) {
  sc.validate();
  std::mt19937_64 rng(derive_seed(sc.seed, 1));
  detail::EventBuilder b(sc, rng);
  GroundTruth gt;
  const int spc = sc.samples_per_cycle;
  const auto cyc = [spc](double c) { return static_cast<std::int64_t>(std::llround(c * spc)); };
  const std::int64_t end = b.length();

  std::array<Phase, 3> order = {Phase::A, Phase::B, Phase::C};
  std::shuffle(order.begin(), order.end(), rng);
  const Phase fault_phase = sc.fault_phase.value_or(order[0]);
  const std::int64_t jitter = detail::uniform_int(rng, 0, spc / 2);
  b.set_inrush_phase(detail::uniform(rng, 0.0, 2.0 * std::numbers::pi));

  auto pole = [&](std::int64_t t, Phase p, bool closed) { gt.pole_events.push_back({t, p, closed}); };

  switch (sc.kind) {
    case ScenarioKind::Quiescent: {
      for (auto p : kAllPhases) b.closed_span(p, 0, end);
      gt.closed_at_start.fill(true);
      gt.closed_at_end.fill(true);
      break;
    }

    case ScenarioKind::UpstreamPulseTest: {
      // Upstream and local device trip together; upstream pulse-tests each
      // phase (seen on both SS and LS voltages) and recloses it.
      const std::int64_t trip = cyc(3) + jitter;
      gt.closed_at_start.fill(true);
      std::int64_t t = trip + cyc(4);
      for (auto p : kAllPhases) {
        b.closed_span(p, 0, trip);
        pole(trip, p, false);
      }
      for (auto p : order) {
        const auto c1 = b.next_crest(p, t, true);
        const auto c2 = b.next_crest(p, c1 + cyc(3), false);
        const auto close = c2 + cyc(3);
        b.require(close + 2 * spc);
        b.pulse(channel_of(Family::SsVoltage, p), c1, sc.pulse_amplitude, Polarity::Pulse, gt);
        b.pulse(channel_of(Family::LsVoltage, p), c1, sc.pulse_amplitude, Polarity::Pulse, gt);
        b.pulse(channel_of(Family::SsVoltage, p), c2, sc.pulse_amplitude, Polarity::Inverse, gt);
        b.pulse(channel_of(Family::LsVoltage, p), c2, sc.pulse_amplitude, Polarity::Inverse, gt);
        b.source_span(p, close, end);
        t = close + cyc(2);
      }
      break;
    }

    case ScenarioKind::TemporaryFault:
    case ScenarioKind::PermanentFault: {
      const bool permanent = sc.kind == ScenarioKind::PermanentFault;
      const std::int64_t fault_on = cyc(2) + jitter;
      const std::int64_t trip = fault_on + cyc(2);
      const double fault_peak = detail::uniform(rng, 3000.0, 5000.0);
      const double sag = detail::uniform(rng, 0.2, 0.4);
      gt.closed_at_start.fill(true);
      for (auto p : kAllPhases) {
        if (p == fault_phase) {
          b.closed_span(p, 0, fault_on);
          b.fault_span(p, fault_on, trip, fault_peak, sag, gt);
        } else {
          b.closed_span(p, 0, trip);
        }
        b.source_span(p, trip, end);
        pole(trip, p, false);
      }

      if (permanent) {
        // The faulted phase is tested first; high current on both pulses
        // stops the sequence with every pole open.
        const Phase p = fault_phase;
        const double v_amp = 0.8 * sc.pulse_amplitude;
        const auto c1 = b.next_crest(p, trip + cyc(4), true);
        b.pulse(channel_of(Family::LsVoltage, p), c1, v_amp, Polarity::Pulse, gt);
        b.pulse(channel_of(Family::LsCurrent, p), c1, sc.fault_current, Polarity::Pulse, gt);
        const auto c2 = b.next_crest(p, c1 + cyc(3), false);
        b.pulse(channel_of(Family::LsVoltage, p), c2, v_amp, Polarity::Inverse, gt);
        b.pulse(channel_of(Family::LsCurrent, p), c2, sc.fault_current, Polarity::Inverse, gt);
        break;
      }

      // Fault has cleared: every phase tests clean and closes, energizing
      // downstream transformers. The first close induces an offset on the
      // phases that are still open.
      std::array<Phase, 3> test_order = order;
      std::int64_t t = trip + cyc(4);
      std::array<std::int64_t, 3> close_at{};
      for (std::size_t i = 0; i < 3; ++i) {
        const Phase p = test_order[i];
        const auto c1 = b.next_crest(p, t, true);
        const auto c2 = b.next_crest(p, c1 + cyc(3), false);
        close_at[i] = c2 + cyc(3);
        b.require(close_at[i] + 2 * spc);
        b.pulse(channel_of(Family::LsVoltage, p), c1, sc.pulse_amplitude, Polarity::Pulse, gt);
        b.pulse(channel_of(Family::LsVoltage, p), c2, sc.pulse_amplitude, Polarity::Inverse, gt);
        t = close_at[i] + cyc(2);
      }
      for (std::size_t i = 0; i < 3; ++i) {
        const Phase p = test_order[i];
        b.offset_span(p, close_at[0], close_at[i], kDeltaOffsetRatio);
        b.closed_span(p, close_at[i], end, false);  // SS already live via source_span
        pole(close_at[i], p, true);
        b.inrush(p, close_at[i], detail::uniform(rng, 1500.0, 3000.0), gt);
      }
      gt.closed_at_end.fill(true);
      break;
    }

    case ScenarioKind::InrushOnly: {
      // Device energizes a de-energized feeder section one pole at a time.
      std::int64_t t = cyc(4) + jitter;
      b.require(t + cyc(8) + 2 * spc);
      for (auto p : order) {
        b.source_span(p, 0, end);
        b.closed_span(p, t, end, false);
        pole(t, p, true);
        b.inrush(p, t, detail::uniform(rng, 1500.0, 3000.0), gt);
        t += cyc(4);
      }
      gt.closed_at_end.fill(true);
      break;
    }
  }

  std::sort(gt.pulses.begin(), gt.pulses.end(), [](const auto& a, const auto& c) {
    return std::tuple(index_of(a.channel), a.start) < std::tuple(index_of(c.channel), c.start);
  });
  std::stable_sort(gt.pole_events.begin(), gt.pole_events.end(),
                   [](const auto& a, const auto& c) { return a.index < c.index; });
  b.add_noise(derive_seed(sc.seed, 2));
  return {b.finish("synth-" + std::to_string(sc.seed % 100000)), std::move(gt)};
}

}  // namespace pulsesrc
