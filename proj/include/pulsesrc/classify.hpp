#pragma once

// Sparse-representation classification of candidate windows: code the
// unit-norm window against D = [D_target, D_background], reconstruct it from
// each class's coefficients alone, and pick the class with the smaller
// residual. A pulse label additionally needs confidence 1 - r_target to reach
// the threshold.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "pulsesrc/dictionary.hpp"
#include "pulsesrc/screening.hpp"
#include "pulsesrc/sparse.hpp"
#include "pulsesrc/waveform.hpp"

namespace pulsesrc {

inline constexpr double kDefaultConfidenceThreshold = 0.4;

enum class RejectReason { ZeroEnergy, NonConverged, LowConfidence };

constexpr std::string_view name_of(RejectReason r) {
  switch (r) {
    case RejectReason::ZeroEnergy: return "ZeroEnergy";
    case RejectReason::NonConverged: return "NonConverged";
    case RejectReason::LowConfidence: return "LowConfidence";
  }
  return "?";
}

struct ClassificationResult {
  ChannelKind channel{};
  std::int64_t window_start = 0;
  int label = -1;
  double residual_target = 0.0;
  double residual_background = 0.0;
  double confidence = 0.0;
  SparseCode code;
  std::optional<RejectReason> rejected_reason;
  std::optional<std::string> error;  // candidate could not be classified at all
};

/// delta_c: keeps the coefficients whose atom label equals `cls`.
inline Eigen::VectorXd class_select(const Eigen::Ref<const Eigen::VectorXd>& alpha,
                                    const std::vector<int>& labels, int cls) {
  if (static_cast<std::size_t>(alpha.size()) != labels.size())
    throw PreconditionError("class_select: alpha has " + std::to_string(alpha.size()) +
                            " entries, dictionary has " + std::to_string(labels.size()) +
                            " atoms");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(alpha.size());
  for (Eigen::Index k = 0; k < alpha.size(); ++k)
    if (labels[static_cast<std::size_t>(k)] == cls) out[k] = alpha[k];
  return out;
}

inline Eigen::VectorXd class_select(const Eigen::Ref<const Eigen::VectorXd>& alpha,
                                    const LabeledDictionary& d, int cls) {
  return class_select(alpha, d.labels, cls);
}

inline ClassificationResult classify_window(const SampleWindow& window,
                                            const LabeledDictionary& dict,
                                            const SolverConfig& cfg,
                                            double conf_th = kDefaultConfidenceThreshold) {
  if (static_cast<Eigen::Index>(window.length()) != dict.n())
    throw PreconditionError("window length " + std::to_string(window.length()) +
                            " != dictionary atom length " + std::to_string(dict.n()));
  ClassificationResult res;
  res.channel = window.channel;
  res.window_start = window.start_index;

  SampleWindow unit;
  try {
    unit = normalize_unit(window);
  } catch (const ZeroEnergyWindow&) {
    res.rejected_reason = RejectReason::ZeroEnergy;
    res.residual_target = res.residual_background = 0.0;
    return res;
  }
  const Eigen::Map<const Eigen::VectorXd> x(unit.values.data(), dict.n());
  res.code = solve_l1ls(x, dict.atoms, cfg);
  res.residual_target = (x - dict.atoms * class_select(res.code.alpha, dict, +1)).norm();
  res.residual_background = (x - dict.atoms * class_select(res.code.alpha, dict, -1)).norm();
  res.confidence = 1.0 - res.residual_target;

  if (!res.code.converged) {
    res.rejected_reason = RejectReason::NonConverged;
    return res;
  }
  // Below the confidence threshold the window is rejected whichever class
  // reconstructs it better; above it, the smaller residual decides.
  if (res.confidence < conf_th)
    res.rejected_reason = RejectReason::LowConfidence;
  else if (res.residual_target < res.residual_background)
    res.label = +1;
  return res;
}

// One optional dictionary per measurement family.
using DictionarySet = std::array<std::optional<LabeledDictionary>, kFamilyCount>;

inline std::vector<ClassificationResult> classify_candidates(
    const WaveformRecord& record, const ScreeningReport& report, const DictionarySet& dicts,
    const SolverConfig& cfg, double conf_th = kDefaultConfidenceThreshold,
    int w_class = kDefaultWindow) {
  std::vector<ClassificationResult> out;
  out.reserve(report.candidates.size());
  for (const auto& cand : report.candidates) {
    const auto& dict = dicts[index_of(family_of(cand.channel))];
    if (!dict) {
      ClassificationResult r;
      r.channel = cand.channel;
      r.window_start = cand.start_index;
      r.error = "no dictionary for family " + std::string(name_of(family_of(cand.channel)));
      out.push_back(std::move(r));
      continue;
    }
    const auto window = slice_window_clamped(record, cand.channel, cand.start_index, w_class);
    out.push_back(classify_window(window, *dict, cfg, conf_th));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tuple(index_of(a.channel), a.window_start) <
           std::tuple(index_of(b.channel), b.window_start);
  });
  return out;
}

}  // namespace pulsesrc
