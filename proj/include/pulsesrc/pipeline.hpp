#pragma once

// End-to-end drivers shared by the CLI and the tests: training from a
// ground-truth corpus, single-record analysis, corpus evaluation, and the
// JSON/CSV artifacts they emit.

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "pulsesrc/classify.hpp"
#include "pulsesrc/config.hpp"
#include "pulsesrc/corpus.hpp"
#include "pulsesrc/dictionary_io.hpp"
#include "pulsesrc/evaluation.hpp"
#include "pulsesrc/screening.hpp"
#include "pulsesrc/training.hpp"

namespace pulsesrc {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::string_view kConfidenceDefinition =
    "confidence = 1 - ||x - D*delta_target(alpha)||_2 on the unit-norm window";

// --- training -----------------------------------------------------------

struct TrainedDictionaries {
  std::array<DictionaryBuild, kFamilyCount> builds;
  std::array<TrainingSet, kFamilyCount> sets;
};

inline TrainedDictionaries train_dictionaries(const std::vector<LoadedEvent>& events,
                                              const PipelineConfig& cfg) {
  cfg.validate();
  if (events.empty()) throw InsufficientSamples("training corpus is empty");
  TrainingOptions opt{cfg.thresholds, cfg.w_class, 1, cfg.seed};
  auto sets = empty_training_sets(cfg.w_class);
  for (const auto& ev : events) add_training_windows(ev.record, ev.truth, opt, ev.seed, sets);

  TrainedDictionaries out;
  for (auto f : kAllFamilies) {
    const auto& ts = sets[index_of(f)];
    if (static_cast<int>(ts.target_pulses.size()) < cfg.k_target ||
        static_cast<int>(ts.target_inverse.size()) < cfg.k_target ||
        static_cast<int>(ts.background.size()) < cfg.k_background)
      throw InsufficientSamples("not enough training windows for " + describe_counts(ts) +
                                " (need " + std::to_string(cfg.k_target) + " per target class, " +
                                std::to_string(cfg.k_background) + " background)");
    out.builds[index_of(f)] =
        build_dictionary(ts, cfg.k_target, cfg.k_background, derive_seed(cfg.seed, index_of(f)));
  }
  out.sets = std::move(sets);
  return out;
}

inline DictionarySet load_dictionaries(const PipelineConfig& cfg) {
  DictionarySet d;
  for (auto f : kAllFamilies) {
    const auto path = cfg.dictionary_path(f);
    if (!std::filesystem::exists(path))
      throw MissingArtifact("missing " + std::string(name_of(f)) + " dictionary: " + path.string());
    d[index_of(f)] = load(path, f);
  }
  return d;
}

// --- analysis -----------------------------------------------------------

struct AnalysisReport {
  ScreeningReport screening;
  std::vector<ClassificationResult> classifications;

  bool any_non_converged() const {
    for (const auto& c : classifications)
      if (c.rejected_reason == RejectReason::NonConverged) return true;
    return false;
  }
};

inline AnalysisReport analyze(const WaveformRecord& record, const PipelineConfig& cfg,
                              const DictionarySet& dicts) {
  cfg.validate();
  AnalysisReport rep;
  rep.screening = run_screening(record, cfg.thresholds, cfg.w_class);
  rep.classifications =
      classify_candidates(record, rep.screening, dicts, cfg.solver, cfg.conf_th, cfg.w_class);
  return rep;
}

// --- JSON ---------------------------------------------------------------

inline nlohmann::json to_json(const FlagTimeline& t, bool as_int) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& e : t)
    a.push_back(as_int ? nlohmann::json{e.index, static_cast<int>(e.value)}
                       : nlohmann::json{e.index, e.value});
  return a;
}

inline nlohmann::json to_json(const CandidateWindow& c) {
  return {{"channel", std::string(name_of(c.channel))},
          {"peak_index", c.peak_index},
          {"start", c.start_index},
          {"end", c.end_index},
          {"peak_rms", c.peak_rms}};
}

inline nlohmann::json to_json(const ScreeningReport& rep) {
  nlohmann::json phases;
  for (auto p : kAllPhases) {
    const auto& ph = rep.timeline[p];
    phases[std::string(name_of(p))] = {{"status", to_json(ph.pole_status, true)},
                                       {"fault_on", to_json(ph.fault_on, false)},
                                       {"source_live", to_json(ph.source_live, false)}};
  }
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : rep.candidates) cands.push_back(to_json(c));
  return {{"schema_version", kReportSchemaVersion},
          {"device", rep.device_id},
          {"t0", rep.t0 ? nlohmann::json(*rep.t0) : nlohmann::json("unknown")},
          {"length", rep.length},
          {"phases", phases},
          {"candidates", cands}};
}

inline nlohmann::json to_json(const ClassificationResult& r) {
  nlohmann::json j{{"channel", std::string(name_of(r.channel))},
                   {"window_start", r.window_start},
                   {"label", r.label},
                   {"r_target", r.residual_target},
                   {"r_background", r.residual_background},
                   {"confidence", r.confidence},
                   {"nnz", r.code.nnz},
                   {"iterations", r.code.iterations},
                   {"kkt_residual", r.code.kkt_residual},
                   {"objective", r.code.objective}};
  j["rejected_reason"] =
      r.rejected_reason ? nlohmann::json(std::string(name_of(*r.rejected_reason))) : nlohmann::json(nullptr);
  if (r.error) j["error"] = *r.error;
  return j;
}

inline nlohmann::json parameters_json(const PipelineConfig& cfg) {
  const auto& th = cfg.thresholds;
  return {{"v_status", th.v_status},         {"v_pulse", th.v_pulse},
          {"i_status", th.i_status},         {"i_pulse", th.i_pulse},
          {"status_window", th.status_window}, {"pulse_window", th.pulse_window},
          {"debounce", th.debounce},         {"lambda", cfg.solver.lambda},
          {"tol_kkt", cfg.solver.tol_kkt},   {"conf_th", cfg.conf_th},
          {"w_class", cfg.w_class}};
}

inline nlohmann::json to_json(const AnalysisReport& rep, const PipelineConfig& cfg) {
  auto j = to_json(rep.screening);
  nlohmann::json cls = nlohmann::json::array();
  for (const auto& c : rep.classifications) cls.push_back(to_json(c));
  j["classifications"] = cls;
  j["confidence_definition"] = std::string(kConfidenceDefinition);
  j["parameters"] = parameters_json(cfg);
  return j;
}

/// Plot-ready per-sample table: raw channels, per-phase pole status and
/// fault-on as 0/1, and two channel bitmasks (bit i = channel i in CSV column
/// order) marking candidate windows and windows classified as pulses.
inline void write_plot_csv(const WaveformRecord& record, const AnalysisReport& rep,
                           int w_class, std::ostream& out) {
  const auto len = record.length();
  std::array<std::vector<std::uint8_t>, kPhaseCount> pole, fault;
  for (auto p : kAllPhases) {
    pole[index_of(p)] = expand(rep.screening.timeline[p].pole_status, len);
    fault[index_of(p)] = expand(rep.screening.timeline[p].fault_on, len);
  }
  std::vector<std::uint32_t> cand(len, 0), pulse(len, 0);
  auto mark = [len](std::vector<std::uint32_t>& m, ChannelKind c, std::int64_t s, std::int64_t e) {
    for (auto k = std::max<std::int64_t>(s, 0); k < std::min<std::int64_t>(e, static_cast<std::int64_t>(len)); ++k)
      m[static_cast<std::size_t>(k)] |= 1u << index_of(c);
  };
  for (const auto& c : rep.screening.candidates) mark(cand, c.channel, c.start_index, c.end_index);
  for (const auto& r : rep.classifications)
    if (r.label == +1) mark(pulse, r.channel, r.window_start, r.window_start + w_class);

  out << "sample";
  for (auto name : kChannelNames) out << ',' << name;
  out << ",pole_a,pole_b,pole_c,fault_a,fault_b,fault_c,candidate_mask,pulse_mask\n";
  for (std::size_t k = 0; k < len; ++k) {
    out << k;
    for (std::size_t i = 0; i < kChannelCount; ++i)
      out << ',' << detail::format_double(record.channels()[i][k]);
    for (std::size_t p = 0; p < kPhaseCount; ++p) out << ',' << int(pole[p][k]);
    for (std::size_t p = 0; p < kPhaseCount; ++p) out << ',' << int(fault[p][k]);
    out << ',' << cand[k] << ',' << pulse[k] << '\n';
  }
}

// --- evaluation ---------------------------------------------------------

inline EvalSummary evaluate_corpus(const std::vector<LoadedEvent>& events,
                                   const PipelineConfig& cfg, const DictionarySet& dicts) {
  EvalSummary sum;
  for (const auto& ev : events) {
    const auto rep = analyze(ev.record, cfg, dicts);
    accumulate(sum, score_event(ev.truth, detections_from(rep.classifications, cfg.w_class)));
  }
  return sum;
}

inline nlohmann::json to_json(const EvalSummary& s) {
  nlohmann::json fams;
  for (auto f : kAllFamilies) {
    const auto& fs = s[f];
    fams[std::string(name_of(f))] = {{"n_true_pulses", fs.n_true_pulses},
                                     {"true_positives", fs.true_positives},
                                     {"false_positives", fs.false_positives},
                                     {"correct_detection_pct", fs.correct_detection_pct()},
                                     {"false_detection_pct", fs.false_detection_pct()}};
  }
  return {{"schema_version", kReportSchemaVersion}, {"n_events", s.n_events}, {"families", fams}};
}

inline void print_eval_table(const EvalSummary& s, std::ostream& out) {
  char line[128];
  out << "             No. of Pulses  Correct Pulse  False Pulse\n"
         "                            Detection (%)  Detection (%)\n";
  const char* labels[] = {"SS Voltage", "LS Voltage", "LS Current"};
  for (auto f : kAllFamilies) {
    const auto& fs = s[f];
    std::snprintf(line, sizeof line, "%-12s %13d %14.2f %14.2f\n", labels[index_of(f)],
                  fs.n_true_pulses, fs.correct_detection_pct(), fs.false_detection_pct());
    out << line;
  }
}

}  // namespace pulsesrc
