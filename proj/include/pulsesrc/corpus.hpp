#pragma once

// Seeded synthetic corpora and their on-disk form: one record CSV per event
// plus manifest.json carrying scenarios, seeds, and ground truth.

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pulsesrc/error.hpp"
#include "pulsesrc/record_csv.hpp"
#include "pulsesrc/seeding.hpp"
#include "pulsesrc/synth.hpp"

namespace pulsesrc {

inline constexpr int kManifestSchemaVersion = 1;

// Relative weights per scenario kind, in kAllScenarioKinds order.
struct ScenarioMix {
  std::array<double, 5> weights = {0.10, 0.45, 0.15, 0.10, 0.20};

  double weight(ScenarioKind k) const { return weights[static_cast<std::size_t>(k)]; }

  static ScenarioMix only(ScenarioKind k) {
    ScenarioMix m;
    m.weights.fill(0.0);
    m.weights[static_cast<std::size_t>(k)] = 1.0;
    return m;
  }

  // "temporary_fault=0.5,quiescent=0.5"; unnamed kinds get weight 0.
  static ScenarioMix parse(std::string_view text) {
    ScenarioMix m;
    m.weights.fill(0.0);
    for (auto item : detail::split(text, ',')) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string_view::npos)
        throw ParseError("mix entry without '=': '" + std::string(item) + "'");
      const auto kind = parse_scenario_kind(detail::trim(item.substr(0, eq)));
      if (!kind) throw ParseError("unknown scenario kind in mix: '" + std::string(item) + "'");
      const auto val = detail::trim(item.substr(eq + 1));
      double w = 0;
      auto [p, ec] = std::from_chars(val.data(), val.data() + val.size(), w);
      if (ec != std::errc{} || p != val.data() + val.size() || !(w >= 0))
        throw ParseError("bad mix weight: '" + std::string(item) + "'");
      m.weights[static_cast<std::size_t>(*kind)] = w;
    }
    if (std::accumulate(m.weights.begin(), m.weights.end(), 0.0) <= 0)
      throw ParseError("mix weights sum to zero");
    return m;
  }
};

/// Draws a scenario of the requested mix from `event_seed`. Amplitudes come
/// from bands at least 1.2x the default pulse thresholds so every injected
/// pulse is detectable by screening.
inline EventScenario draw_scenario(const ScenarioMix& mix, std::uint64_t event_seed,
                                   int cycles = 40) {
  std::mt19937_64 rng(derive_seed(event_seed, 0));
  const double total = std::accumulate(mix.weights.begin(), mix.weights.end(), 0.0);
  double u = detail::uniform(rng, 0.0, total);
  EventScenario sc;
  sc.kind = ScenarioKind::Quiescent;
  for (auto k : kAllScenarioKinds) {
    const double w = mix.weight(k);
    if (w > 0 && u < w) {
      sc.kind = k;
      break;
    }
    u -= w;
    if (w > 0) sc.kind = k;
  }
  sc.pulse_amplitude = detail::uniform(rng, 4200.0, 5000.0);
  sc.pulse_duration = detail::uniform(rng, kMinPulseDuration, kMaxPulseDuration);
  sc.fault_current = detail::uniform(rng, 1080.0, kMaxFaultCurrent);
  sc.noise_snr_db = 40.0;
  sc.seed = event_seed;
  sc.cycles = cycles;
  return sc;
}

struct CorpusEvent {
  std::string id;
  EventScenario scenario;
  SyntheticEvent event;
};

inline std::vector<CorpusEvent> gen_corpus(int n_events, const ScenarioMix& mix,
                                           std::uint64_t master_seed, int cycles = 40) {
  if (n_events < 1) throw PreconditionError("n_events must be >= 1");
  std::vector<CorpusEvent> out;
  out.reserve(static_cast<std::size_t>(n_events));
  for (int i = 0; i < n_events; ++i) {
    const auto sc = draw_scenario(mix, derive_seed(master_seed, static_cast<std::uint64_t>(i)),
                                  cycles);
    char id[32];
    std::snprintf(id, sizeof id, "event_%04d", i);
    out.push_back({id, sc, gen_event(sc)});
  }
  return out;
}

// --- JSON ---------------------------------------------------------------

inline nlohmann::json to_json(const EventScenario& sc) {
  nlohmann::json j{
      {"kind", std::string(name_of(sc.kind))}, {"pulse_amplitude", sc.pulse_amplitude},
      {"pulse_duration", sc.pulse_duration},   {"fault_current", sc.fault_current},
      {"noise_snr_db", sc.noise_snr_db},       {"seed", sc.seed},
      {"cycles", sc.cycles},                   {"samples_per_cycle", sc.samples_per_cycle},
  };
  j["fault_phase"] = sc.fault_phase ? nlohmann::json(std::string(name_of(*sc.fault_phase)))
                                    : nlohmann::json(nullptr);
  return j;
}

inline EventScenario scenario_from_json(const nlohmann::json& j) {
  EventScenario sc;
  const auto kind = parse_scenario_kind(j.at("kind").get<std::string>());
  if (!kind) throw ParseError("unknown scenario kind " + j.at("kind").dump());
  sc.kind = *kind;
  sc.pulse_amplitude = j.at("pulse_amplitude").get<double>();
  sc.pulse_duration = j.at("pulse_duration").get<double>();
  sc.fault_current = j.at("fault_current").get<double>();
  sc.noise_snr_db = j.at("noise_snr_db").get<double>();
  sc.seed = j.at("seed").get<std::uint64_t>();
  sc.cycles = j.at("cycles").get<int>();
  sc.samples_per_cycle = j.at("samples_per_cycle").get<int>();
  if (j.contains("fault_phase") && !j["fault_phase"].is_null()) {
    const auto s = j["fault_phase"].get<std::string>();
    for (auto p : kAllPhases)
      if (name_of(p) == s) sc.fault_phase = p;
  }
  return sc;
}

inline nlohmann::json to_json(const GroundTruth& gt) {
  nlohmann::json pulses = nlohmann::json::array();
  for (const auto& p : gt.pulses)
    pulses.push_back({{"channel", std::string(name_of(p.channel))},
                      {"start", p.start},
                      {"end", p.end},
                      {"polarity", std::string(name_of(p.polarity))},
                      {"amplitude", p.amplitude}});
  nlohmann::json poles = nlohmann::json::array();
  for (const auto& e : gt.pole_events)
    poles.push_back({{"index", e.index}, {"phase", std::string(name_of(e.phase))}, {"closed", e.closed}});
  auto spans = [](const std::vector<SpanInterval>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& s : v)
      a.push_back({{"channel", std::string(name_of(s.channel))}, {"start", s.start}, {"end", s.end}});
    return a;
  };
  return {{"pulses", pulses},
          {"pole_events", poles},
          {"faults", spans(gt.faults)},
          {"inrush", spans(gt.inrush)},
          {"closed_at_start", gt.closed_at_start},
          {"closed_at_end", gt.closed_at_end}};
}

inline GroundTruth ground_truth_from_json(const nlohmann::json& j) {
  auto channel = [](const nlohmann::json& v) {
    const auto c = parse_channel(v.get<std::string>());
    if (!c) throw ParseError("unknown channel " + v.dump());
    return *c;
  };
  GroundTruth gt;
  for (const auto& p : j.at("pulses"))
    gt.pulses.push_back({channel(p.at("channel")), p.at("start").get<std::int64_t>(),
                         p.at("end").get<std::int64_t>(),
                         p.at("polarity").get<std::string>() == "inverse" ? Polarity::Inverse
                                                                          : Polarity::Pulse,
                         p.at("amplitude").get<double>()});
  for (const auto& e : j.at("pole_events")) {
    PoleEvent pe{e.at("index").get<std::int64_t>(), Phase::A, e.at("closed").get<bool>()};
    for (auto p : kAllPhases)
      if (name_of(p) == e.at("phase").get<std::string>()) pe.phase = p;
    gt.pole_events.push_back(pe);
  }
  for (const auto& s : j.at("faults"))
    gt.faults.push_back({channel(s.at("channel")), s.at("start").get<std::int64_t>(),
                         s.at("end").get<std::int64_t>()});
  for (const auto& s : j.at("inrush"))
    gt.inrush.push_back({channel(s.at("channel")), s.at("start").get<std::int64_t>(),
                         s.at("end").get<std::int64_t>()});
  gt.closed_at_start = j.at("closed_at_start").get<std::array<bool, kPhaseCount>>();
  gt.closed_at_end = j.at("closed_at_end").get<std::array<bool, kPhaseCount>>();
  return gt;
}

inline std::array<int, kFamilyCount> pulses_per_family(const GroundTruth& gt) {
  std::array<int, kFamilyCount> n{};
  for (const auto& p : gt.pulses) ++n[index_of(family_of(p.channel))];
  return n;
}

inline nlohmann::json corpus_manifest(const std::vector<CorpusEvent>& corpus,
                                      std::uint64_t master_seed, const ScenarioMix& mix) {
  nlohmann::json events = nlohmann::json::array();
  std::array<int, kFamilyCount> fam{};
  int total = 0;
  for (const auto& ev : corpus) {
    const auto n = pulses_per_family(ev.event.truth);
    for (std::size_t f = 0; f < kFamilyCount; ++f) fam[f] += n[f];
    total += static_cast<int>(ev.event.truth.pulses.size());
    events.push_back({{"id", ev.id},
                      {"file", ev.id + ".csv"},
                      {"seed", ev.scenario.seed},
                      {"scenario", to_json(ev.scenario)},
                      {"n_pulses", ev.event.truth.pulses.size()},
                      {"ground_truth", to_json(ev.event.truth)}});
  }
  nlohmann::json mix_j;
  for (auto k : kAllScenarioKinds) mix_j[std::string(name_of(k))] = mix.weight(k);
  nlohmann::json per_family;
  for (auto f : kAllFamilies) per_family[std::string(name_of(f))] = fam[index_of(f)];
  return {{"schema_version", kManifestSchemaVersion},
          {"master_seed", master_seed},
          {"n_events", corpus.size()},
          {"mix", mix_j},
          {"total_pulses", total},
          {"pulses_per_family", per_family},
          {"events", events}};
}

inline void write_corpus(const std::vector<CorpusEvent>& corpus, std::uint64_t master_seed,
                         const ScenarioMix& mix, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& ev : corpus) write_csv(ev.event.record, dir / (ev.id + ".csv"));
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error("cannot write manifest in " + dir.string());
  out << corpus_manifest(corpus, master_seed, mix).dump(1) << '\n';
}

struct LoadedEvent {
  std::string id;
  std::uint64_t seed = 0;
  WaveformRecord record;
  GroundTruth truth;
};

// In-memory view of a generated corpus, as load_corpus would return it.
inline std::vector<LoadedEvent> as_loaded(const std::vector<CorpusEvent>& corpus) {
  std::vector<LoadedEvent> out;
  out.reserve(corpus.size());
  for (const auto& e : corpus) out.push_back({e.id, e.scenario.seed, e.event.record, e.event.truth});
  return out;
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("file not found: " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline std::vector<LoadedEvent> load_corpus(const std::filesystem::path& dir) {
  const auto manifest = read_json(dir / "manifest.json");
  std::vector<LoadedEvent> out;
  try {
    for (const auto& e : manifest.at("events"))
      out.push_back({e.at("id").get<std::string>(), e.at("seed").get<std::uint64_t>(),
                     ingest_csv(dir / e.at("file").get<std::string>()),
                     ground_truth_from_json(e.at("ground_truth"))});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError((dir / "manifest.json").string() + ": " + e.what());
  }
  return out;
}

inline std::set<std::uint64_t> manifest_seeds(const nlohmann::json& manifest) {
  std::set<std::uint64_t> s;
  for (const auto& e : manifest.at("events")) s.insert(e.at("seed").get<std::uint64_t>());
  return s;
}

}  // namespace pulsesrc
