#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>

#include <unistd.h>

#include "pulsesrc/pulsesrc.hpp"

namespace fixtures {

using namespace pulsesrc;

// Dictionaries trained once per test binary on the seed-1 default corpus.
struct Trained {
  PipelineConfig cfg;
  DictionarySet dicts;
  TrainedDictionaries raw;
};

inline const Trained& trained() {
  static const Trained t = [] {
    Trained out;
    out.raw = train_dictionaries(as_loaded(gen_corpus(100, ScenarioMix{}, 1)), out.cfg);
    for (auto f : kAllFamilies) out.dicts[index_of(f)] = out.raw.builds[index_of(f)].dictionary;
    return out;
  }();
  return t;
}

inline WaveformRecord::Channels dead_channels(std::size_t len) {
  WaveformRecord::Channels ch;
  for (auto& v : ch) v.assign(len, 0.0);
  return ch;
}

inline std::vector<double> sine(double peak, std::size_t len, int spc, double phase = 0.0) {
  std::vector<double> v(len);
  for (std::size_t i = 0; i < len; ++i)
    v[i] = peak * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / spc + phase);
  return v;
}

// Unique scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("pulsesrc_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace fixtures
