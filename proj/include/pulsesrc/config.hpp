#pragma once

// Pipeline configuration. Defaults are the standard operating point:
// V_s 4.0 kV, V_p 2.8 kV, I_s 1.0 kA, I_p 0.9 kA, lambda 0.2, confidence 0.4,
// 180-sample windows, 5 + 5 target and 40 background atoms.
//
// File format: one `key = value` per line, `#` comments, keys named after the
// fields below.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>

#include "pulsesrc/classify.hpp"
#include "pulsesrc/dictionary.hpp"
#include "pulsesrc/record_csv.hpp"
#include "pulsesrc/screening.hpp"
#include "pulsesrc/sparse.hpp"

namespace pulsesrc {

struct PipelineConfig {
  Thresholds thresholds;
  SolverConfig solver;
  double conf_th = kDefaultConfidenceThreshold;
  int w_class = kDefaultWindow;
  int k_target = kDefaultTargetClusters;
  int k_background = kDefaultBackgroundClusters;
  std::uint64_t seed = 2017;
  std::filesystem::path dict_dir = "dictionaries";
  std::array<std::optional<std::filesystem::path>, kFamilyCount> dict_paths;

  std::filesystem::path dictionary_path(Family f) const {
    if (const auto& p = dict_paths[index_of(f)]) return *p;
    return dict_dir / ("dict_" + std::string(name_of(f)) + ".json");
  }

  void validate() const {
    thresholds.validate();
    solver.validate();
    if (w_class < 1) throw PreconditionError("w_class must be >= 1");
    if (k_target < 1 || k_background < 1) throw PreconditionError("k values must be >= 1");
  }
};

namespace detail {

template <class T>
T parse_number(std::string_view key, std::string_view text, int line) {
  T v{};
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size())
    throw ParseError("config line " + std::to_string(line) + ": bad value for " +
                     std::string(key) + ": '" + std::string(text) + "'");
  return v;
}

}  // namespace detail

/// Applies one `key = value` setting. Throws ParseError on an unknown key or
/// a malformed value.
inline void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value,
                          int line = 0) {
  using detail::parse_number;
  auto& th = cfg.thresholds;
  if (key == "v_status") th.v_status = parse_number<double>(key, value, line);
  else if (key == "v_pulse") th.v_pulse = parse_number<double>(key, value, line);
  else if (key == "i_status") th.i_status = parse_number<double>(key, value, line);
  else if (key == "i_pulse") th.i_pulse = parse_number<double>(key, value, line);
  else if (key == "status_window") th.status_window = parse_number<int>(key, value, line);
  else if (key == "pulse_window") th.pulse_window = parse_number<int>(key, value, line);
  else if (key == "debounce") th.debounce = parse_number<int>(key, value, line);
  else if (key == "lambda") cfg.solver.lambda = parse_number<double>(key, value, line);
  else if (key == "max_iter") cfg.solver.max_iter = parse_number<int>(key, value, line);
  else if (key == "tol_kkt") cfg.solver.tol_kkt = parse_number<double>(key, value, line);
  else if (key == "tol_obj") cfg.solver.tol_obj = parse_number<double>(key, value, line);
  else if (key == "conf_th") cfg.conf_th = parse_number<double>(key, value, line);
  else if (key == "w_class") cfg.w_class = parse_number<int>(key, value, line);
  else if (key == "k_target") cfg.k_target = parse_number<int>(key, value, line);
  else if (key == "k_background") cfg.k_background = parse_number<int>(key, value, line);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value, line);
  else if (key == "dict_dir") cfg.dict_dir = std::string(value);
  else if (key == "dict_ss_voltage") cfg.dict_paths[index_of(Family::SsVoltage)] = std::string(value);
  else if (key == "dict_ls_voltage") cfg.dict_paths[index_of(Family::LsVoltage)] = std::string(value);
  else if (key == "dict_ls_current") cfg.dict_paths[index_of(Family::LsCurrent)] = std::string(value);
  else
    throw ParseError("config line " + std::to_string(line) + ": unknown key '" +
                     std::string(key) + "'");
}

inline PipelineConfig parse_config(std::istream& in, PipelineConfig cfg = {}) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto text = std::string_view(line);
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = detail::trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(cfg, detail::trim(text.substr(0, eq)), detail::trim(text.substr(eq + 1)), lineno);
  }
  return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig cfg = {}) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("config file not found: " + path.string());
  return parse_config(in, std::move(cfg));
}

}  // namespace pulsesrc
