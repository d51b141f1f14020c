#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pulsesrc/error.hpp"

namespace pulsesrc {

enum class ChannelKind : std::uint8_t {
  SsVoltageA,
  SsVoltageB,
  SsVoltageC,
  LsVoltageA,
  LsVoltageB,
  LsVoltageC,
  LsCurrentA,
  LsCurrentB,
  LsCurrentC,
};

enum class Family : std::uint8_t { SsVoltage, LsVoltage, LsCurrent };

enum class Phase : std::uint8_t { A, B, C };

inline constexpr std::size_t kChannelCount = 9;
inline constexpr std::size_t kFamilyCount = 3;
inline constexpr std::size_t kPhaseCount = 3;

inline constexpr std::array<ChannelKind, kChannelCount> kAllChannels = {
    ChannelKind::SsVoltageA, ChannelKind::SsVoltageB, ChannelKind::SsVoltageC,
    ChannelKind::LsVoltageA, ChannelKind::LsVoltageB, ChannelKind::LsVoltageC,
    ChannelKind::LsCurrentA, ChannelKind::LsCurrentB, ChannelKind::LsCurrentC,
};

inline constexpr std::array<Family, kFamilyCount> kAllFamilies = {
    Family::SsVoltage, Family::LsVoltage, Family::LsCurrent};

inline constexpr std::array<Phase, kPhaseCount> kAllPhases = {Phase::A, Phase::B,
                                                              Phase::C};

constexpr std::size_t index_of(ChannelKind c) { return static_cast<std::size_t>(c); }
constexpr std::size_t index_of(Family f) { return static_cast<std::size_t>(f); }
constexpr std::size_t index_of(Phase p) { return static_cast<std::size_t>(p); }

constexpr Family family_of(ChannelKind c) {
  return static_cast<Family>(index_of(c) / 3);
}
constexpr Phase phase_of(ChannelKind c) { return static_cast<Phase>(index_of(c) % 3); }
constexpr ChannelKind channel_of(Family f, Phase p) {
  return static_cast<ChannelKind>(index_of(f) * 3 + index_of(p));
}
constexpr bool is_voltage(ChannelKind c) { return family_of(c) != Family::LsCurrent; }

// Canonical CSV column names, in enum order.
inline constexpr std::array<std::string_view, kChannelCount> kChannelNames = {
    "Vssa", "Vssb", "Vssc", "Vlsa", "Vlsb", "Vlsc", "Ilsa", "Ilsb", "Ilsc"};

inline constexpr std::array<std::string_view, kFamilyCount> kFamilyNames = {
    "ss_voltage", "ls_voltage", "ls_current"};

inline constexpr std::array<std::string_view, kPhaseCount> kPhaseNames = {"A", "B", "C"};

constexpr std::string_view name_of(ChannelKind c) { return kChannelNames[index_of(c)]; }
constexpr std::string_view name_of(Family f) { return kFamilyNames[index_of(f)]; }
constexpr std::string_view name_of(Phase p) { return kPhaseNames[index_of(p)]; }

inline std::optional<ChannelKind> parse_channel(std::string_view s) {
  for (auto c : kAllChannels)
    if (name_of(c) == s) return c;
  return std::nullopt;
}

inline std::optional<Family> parse_family(std::string_view s) {
  for (auto f : kAllFamilies)
    if (name_of(f) == s) return f;
  return std::nullopt;
}

// Windows whose 2-norm is at or below this (channel units) are dead.
inline constexpr double kDeadWindowEnergy = 1e-9;
inline constexpr int kMinSamplesPerCycle = 16;
inline constexpr int kDefaultSamplesPerCycle = 64;

/// Multi-channel event recording: SS/LS voltages (volts) and LS currents
/// (amperes) for three phases at a fixed sampling rate. Immutable once built;
/// the constructor enforces equal-length, finite, at-least-one-cycle channels.
class WaveformRecord {
 public:
  using Channels = std::array<std::vector<double>, kChannelCount>;

  WaveformRecord(int samples_per_cycle, Channels channels, std::string device_id = "unknown",
                 std::optional<std::string> start_timestamp = std::nullopt)
      : spc_(samples_per_cycle),
        channels_(std::move(channels)),
        device_id_(std::move(device_id)),
        t0_(std::move(start_timestamp)) {
    if (spc_ < kMinSamplesPerCycle)
      throw PreconditionError("samples_per_cycle must be >= 16, got " + std::to_string(spc_));
    const std::size_t len = channels_[0].size();
    for (auto c : kAllChannels) {
      const auto& v = channels_[index_of(c)];
      if (v.size() != len)
        throw PreconditionError("channel " + std::string(name_of(c)) + " has " +
                                std::to_string(v.size()) + " samples, expected " +
                                std::to_string(len));
      for (std::size_t i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i]))
          throw PreconditionError("channel " + std::string(name_of(c)) +
                                  ": non-finite sample at index " + std::to_string(i));
    }
    if (len < static_cast<std::size_t>(spc_))
      throw PreconditionError("record shorter than one cycle (" + std::to_string(len) +
                              " samples)");
  }

  int samples_per_cycle() const { return spc_; }
  std::size_t length() const { return channels_[0].size(); }
  double cycles() const { return static_cast<double>(length()) / spc_; }
  std::span<const double> channel(ChannelKind c) const { return channels_[index_of(c)]; }
  const Channels& channels() const { return channels_; }
  const std::string& device_id() const { return device_id_; }
  const std::optional<std::string>& start_timestamp() const { return t0_; }

 private:
  int spc_;
  Channels channels_;
  std::string device_id_;
  std::optional<std::string> t0_;
};

struct SampleWindow {
  ChannelKind channel{};
  // Offset of values[0] in the record; negative when padded on the left.
  std::int64_t start_index = 0;
  std::vector<double> values;
  bool padded = false;

  std::size_t length() const { return values.size(); }
};

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// Copies samples [start, start + w) of one channel. Any part of the request
/// that falls outside the record is filled with zeros and `padded` is set; the
/// real samples keep their position inside the window so pulse registration is
/// preserved at either edge.
inline SampleWindow slice_window_clamped(const WaveformRecord& record, ChannelKind channel,
                                         std::int64_t start, std::int64_t w) {
  if (w <= 0) throw PreconditionError("window length must be positive");
  SampleWindow out{channel, start, std::vector<double>(static_cast<std::size_t>(w), 0.0), false};
  const auto data = record.channel(channel);
  const auto len = static_cast<std::int64_t>(data.size());
  const std::int64_t lo = std::max<std::int64_t>(start, 0);
  const std::int64_t hi = std::min<std::int64_t>(start + w, len);
  for (std::int64_t i = lo; i < hi; ++i)
    out.values[static_cast<std::size_t>(i - start)] = data[static_cast<std::size_t>(i)];
  out.padded = (lo != start) || (hi != start + w);
  return out;
}

// start must be non-negative; a right-edge overrun is zero-padded.
inline SampleWindow slice_window(const WaveformRecord& record, ChannelKind channel,
                                 std::int64_t start, std::int64_t w) {
  if (start < 0) throw PreconditionError("window start must be >= 0, got " + std::to_string(start));
  if (w <= 0) throw PreconditionError("window length must be positive");
  return slice_window_clamped(record, channel, start, w);
}

/// Scales the window to unit Euclidean norm. Throws ZeroEnergyWindow when the
/// norm does not exceed `energy_floor`.
inline SampleWindow normalize_unit(SampleWindow window, double energy_floor = kDeadWindowEnergy) {
  const double norm = l2_norm(window.values);
  if (!(norm > energy_floor))
    throw ZeroEnergyWindow("window on " + std::string(name_of(window.channel)) + " at " +
                           std::to_string(window.start_index) + " has norm " +
                           std::to_string(norm));
  for (double& x : window.values) x /= norm;
  return window;
}

}  // namespace pulsesrc
