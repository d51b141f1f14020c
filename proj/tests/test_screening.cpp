#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace pulsesrc;
using fixtures::dead_channels;
using fixtures::sine;

TEST(Rms, ConstantAndZero) {
  for (std::size_t m : {1u, 7u, 64u}) {
    std::vector<double> v(m, 5.0);
    EXPECT_DOUBLE_EQ(rms(v), 5.0);
    std::vector<double> z(m, 0.0);
    EXPECT_EQ(rms(z), 0.0);
  }
  EXPECT_THROW(rms(std::vector<double>{}), PreconditionError);
}

TEST(Rms, FullCycleSine) {
  const auto v = sine(1.0, 64, 64);
  EXPECT_NEAR(rms(v), 0.7071, 1e-3);
  // Brute-force summation agrees with the closed form A / sqrt(2).
  EXPECT_NEAR(oracle::brute_sliding_rms(v, 64)[0], 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(SlidingRms, SingleWindowAndConstant) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<double> v(64);
  for (auto& x : v) x = g(rng);
  const auto out = sliding_rms(v, 64);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR(out[0], rms(v), 1e-12);

  const auto c = sliding_rms(std::vector<double>(300, -2.5), 16);
  ASSERT_EQ(c.size(), 285u);
  for (double x : c) EXPECT_NEAR(x, 2.5, 1e-12);
}

TEST(SlidingRms, MatchesPerWindowRms) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 4000.0);
  std::vector<double> v(256);
  for (auto& x : v) x = g(rng);
  const auto out = sliding_rms(v, 16);
  ASSERT_EQ(out.size(), 241u);
  for (std::size_t k = 0; k < out.size(); ++k)
    EXPECT_NEAR(out[k], rms(std::span<const double>(v).subspan(k, 16)), 1e-10);
}

TEST(SlidingRms, LongRecordDriftStaysBounded) {
  // Large offset then small signal: a naive running sum would lose the tail.
  std::vector<double> v(20000, 0.0);
  for (std::size_t i = 0; i < 10000; ++i) v[i] = 1e6;
  for (std::size_t i = 10000; i < v.size(); ++i) v[i] = 1e-3 * std::sin(0.1 * i);
  const auto out = sliding_rms(v, 64);
  const auto ref = oracle::brute_sliding_rms(v, 64);
  for (std::size_t k = 0; k < out.size(); ++k) EXPECT_NEAR(out[k], ref[k], 1e-10) << k;
}

TEST(TrailingRms, AlignedToWindowEnd) {
  const auto v = sine(100.0, 256, 64);
  const auto t = trailing_rms(v, 16);
  const auto s = sliding_rms(v, 16);
  ASSERT_EQ(t.size(), v.size());
  for (std::size_t k = 0; k < 15; ++k) EXPECT_TRUE(std::isnan(t[k]));
  for (std::size_t k = 15; k < v.size(); ++k) EXPECT_EQ(t[k], s[k - 15]);
}

TEST(DetectStatus, ClosedSteadyState) {
  auto ch = dead_channels(1920);
  for (auto p : kAllPhases) {
    ch[index_of(channel_of(Family::LsVoltage, p))] = sine(7200.0, 1920, 64);
    ch[index_of(channel_of(Family::SsVoltage, p))] = sine(7200.0, 1920, 64);
  }
  const auto tl = detect_status(WaveformRecord(64, ch), Thresholds{});
  for (auto p : kAllPhases) {
    EXPECT_EQ(tl[p].pole_status, (FlagTimeline{{0, true}}));
    EXPECT_EQ(tl[p].fault_on, (FlagTimeline{{0, false}}));
  }
}

TEST(DetectStatus, DeadRecord) {
  const auto tl = detect_status(WaveformRecord(64, dead_channels(1920)), Thresholds{});
  for (auto p : kAllPhases) {
    EXPECT_EQ(tl[p].pole_status, (FlagTimeline{{0, false}}));
    EXPECT_EQ(tl[p].fault_on, (FlagTimeline{{0, false}}));
  }
}

namespace {

// Independent debounce: walk window ends k, count consecutive samples whose
// brute-force trailing RMS disagrees with the state, flip on the 64th.
std::vector<FlagEntry> brute_flag(const std::vector<double>& v, std::size_t m, double th,
                                  int debounce) {
  const auto r = oracle::brute_sliding_rms(v, m);
  std::vector<FlagEntry> out{{0, r[0] >= th}};
  bool state = out[0].value;
  int run = 0;
  for (std::size_t k = m; k < v.size(); ++k) {
    const bool raw = r[k - m + 1] >= th;
    run = raw == state ? 0 : run + 1;
    if (run == debounce) {
      state = raw;
      run = 0;
      out.push_back({static_cast<std::int64_t>(k), state});
    }
  }
  return out;
}

}  // namespace

TEST(DetectStatus, FaultCurrentStep) {
  // 1.4 kA (RMS) fault current from sample 640 on, pole closed throughout.
  auto ch = dead_channels(1920);
  auto& ia = ch[index_of(ChannelKind::LsCurrentA)];
  const auto wave = sine(1400.0 * std::sqrt(2.0), 1920, 64);
  for (std::size_t i = 640; i < 1920; ++i) ia[i] = wave[i];
  for (auto p : kAllPhases) ch[index_of(channel_of(Family::LsVoltage, p))] = sine(7200.0, 1920, 64);
  const auto tl = detect_status(WaveformRecord(64, ch), Thresholds{});
  const auto ref = brute_flag(ia, 64, 1000.0, 64);
  ASSERT_EQ(ref.size(), 2u);
  EXPECT_EQ(tl[Phase::A].fault_on, ref);
  // Frozen from the brute-force trace: the 64-sample RMS first reaches 1 kA
  // at sample 677 and the flag is confirmed 63 samples later.
  EXPECT_EQ(tl[Phase::A].fault_on[1].index, 677 + 63);
  EXPECT_EQ(tl[Phase::B].fault_on, (FlagTimeline{{0, false}}));
}

TEST(DetectStatus, MatchesBruteForceOnRandomFlags) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> v;
    while (v.size() < 3000) {
      const double amp = rng() % 2 ? 7200.0 : 500.0;
      const auto seg = sine(amp, 30 + rng() % 300, 64);
      v.insert(v.end(), seg.begin(), seg.end());
    }
    EXPECT_EQ(debounced_flag(v, 64, 4000.0, 64), brute_flag(v, 64, 4000.0, 64));
  }
}

TEST(DetectStatus, ShortRecordRejected) {
  EXPECT_THROW(detect_status(WaveformRecord(16, dead_channels(40)), Thresholds{}),
               PreconditionError);
}

TEST(TagCandidates, DeadRecordHasNone) {
  const auto rep = run_screening(WaveformRecord(64, dead_channels(1920)), Thresholds{}, 180);
  EXPECT_TRUE(rep.candidates.empty());
}

TEST(TagCandidates, SinglePulseOnOpenPhase) {
  auto ch = dead_channels(1920);
  const auto pulse = gen_pulse(3000.0 * std::sqrt(2.0), 0.35, Polarity::Pulse, 64);
  const std::size_t at = 900;
  for (std::size_t i = 0; i < pulse.size(); ++i) ch[index_of(ChannelKind::LsVoltageB)][at + i] = pulse[i];
  const auto rep = run_screening(WaveformRecord(64, ch), Thresholds{}, 180);
  ASSERT_EQ(rep.candidates.size(), 1u);
  const auto& c = rep.candidates[0];
  EXPECT_EQ(c.channel, ChannelKind::LsVoltageB);
  const auto n = static_cast<std::int64_t>(burst_length(0.35, 64));
  EXPECT_GE(c.peak_index, static_cast<std::int64_t>(at));
  EXPECT_LT(c.peak_index, static_cast<std::int64_t>(at) + n + 16);
  EXPECT_EQ(c.end_index - c.start_index, 180);
  EXPECT_GE(c.peak_rms, 2800.0);
}

TEST(TagCandidates, PulseOnClosedPhaseIgnored) {
  auto ch = dead_channels(1920);
  ch[index_of(ChannelKind::LsVoltageA)] = sine(7200.0, 1920, 64);
  const auto pulse = gen_pulse(6000.0, 0.35, Polarity::Pulse, 64);
  for (std::size_t i = 0; i < pulse.size(); ++i) ch[index_of(ChannelKind::LsVoltageA)][900 + i] += pulse[i];
  EXPECT_TRUE(run_screening(WaveformRecord(64, ch), Thresholds{}, 180).candidates.empty());
}

TEST(TagCandidates, InrushBurstOnOpenPhase) {
  // Decaying sin^2 lobes well above the current pulse threshold.
  auto ch = dead_channels(1920);
  auto& ic = ch[index_of(ChannelKind::LsCurrentC)];
  for (std::size_t k = 0; k < 8 * 64; ++k) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(k) / 64);
    ic[700 + k] = 2500.0 * std::exp(-static_cast<double>(k) / (3 * 64)) * s * s;
  }
  const auto rep = run_screening(WaveformRecord(64, ch), Thresholds{}, 180);
  ASSERT_EQ(rep.candidates.size(), 1u);
  EXPECT_EQ(rep.candidates[0].channel, ChannelKind::LsCurrentC);
}

TEST(TagCandidates, PropertiesOnSyntheticCorpus) {
  const Thresholds th;
  for (const auto& ev : gen_corpus(30, ScenarioMix{}, 44)) {
    const auto& rec = ev.event.record;
    const auto a = run_screening(rec, th, 180);
    const auto b = run_screening(rec, th, 180);
    EXPECT_EQ(a.candidates, b.candidates);
    std::map<ChannelKind, std::int64_t> last_end;
    for (const auto& c : a.candidates) {
      // Inside the screened region, above the pulse threshold, fixed width,
      // and non-overlapping per channel.
      const auto mask = screened_mask(a.timeline, c.channel, rec.length());
      EXPECT_TRUE(mask[static_cast<std::size_t>(c.peak_index)]);
      EXPECT_GE(c.peak_rms, th.pulse_threshold(c.channel));
      EXPECT_EQ(c.end_index - c.start_index, 180);
      if (last_end.count(c.channel)) {
        EXPECT_GE(c.start_index, last_end[c.channel]);
      }
      last_end[c.channel] = c.end_index;
    }
  }
}

TEST(TagCandidates, RaisingPulseThresholdNeverAddsCandidates) {
  for (const auto& ev : gen_corpus(20, ScenarioMix{}, 45)) {
    Thresholds th;
    std::size_t prev = run_screening(ev.event.record, th, 180).candidates.size();
    for (double v : {3200.0, 3600.0, 3999.0}) {
      th.v_pulse = v;
      th.i_pulse = 900.0 * v / 2800.0;
      const auto n = run_screening(ev.event.record, th, 180).candidates.size();
      EXPECT_LE(n, prev);
      prev = n;
    }
  }
}

TEST(TagCandidates, QuiescentHasNone) {
  EventScenario sc;
  sc.kind = ScenarioKind::Quiescent;
  sc.cycles = 30;
  sc.seed = 5;
  const auto ev = gen_event(sc);
  EXPECT_TRUE(ev.truth.pulses.empty());
  EXPECT_TRUE(run_screening(ev.record, Thresholds{}, 180).candidates.empty());
}
