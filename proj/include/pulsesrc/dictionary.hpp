#pragma once

// Labeled signature dictionary D = [D_target, D_background]. Target atoms are
// k-means centroids of unit-norm pulse and inverse-pulse windows (k each);
// background atoms are centroids of unit-norm non-pulse windows. Every atom is
// renormalized to unit 2-norm after clustering.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pulsesrc/error.hpp"
#include "pulsesrc/kmeans.hpp"
#include "pulsesrc/seeding.hpp"
#include "pulsesrc/sparse.hpp"
#include "pulsesrc/waveform.hpp"

namespace pulsesrc {

inline constexpr int kDefaultWindow = 180;
inline constexpr int kDefaultTargetClusters = 5;
inline constexpr int kDefaultBackgroundClusters = 40;

struct TrainingSet {
  Family family = Family::LsVoltage;
  int w = kDefaultWindow;
  std::vector<std::vector<double>> target_pulses;
  std::vector<std::vector<double>> target_inverse;
  std::vector<std::vector<double>> background;
};

struct AtomBlock {
  Eigen::MatrixXd atoms;  // w x count
  std::vector<std::string> warnings;
};

struct LabeledDictionary {
  Family family = Family::LsVoltage;
  Eigen::MatrixXd atoms;  // n x p, column-major
  std::vector<int> labels;  // +1 target, -1 background
  int k_target = kDefaultTargetClusters;
  int k_background = kDefaultBackgroundClusters;
  int n_target_atoms = 0;
  int n_background_atoms = 0;
  std::uint64_t seed = 0;

  Eigen::Index n() const { return atoms.rows(); }
  Eigen::Index p() const { return atoms.cols(); }
};

namespace detail {

inline Eigen::MatrixXd to_columns(const std::vector<std::vector<double>>& windows, int w,
                                  const char* what) {
  Eigen::MatrixXd m(w, static_cast<Eigen::Index>(windows.size()));
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& v = windows[i];
    if (v.size() != static_cast<std::size_t>(w))
      throw PreconditionError(std::string(what) + " window " + std::to_string(i) + " has length " +
                              std::to_string(v.size()) + ", expected " + std::to_string(w));
    const double norm = l2_norm(v);
    if (std::abs(norm - 1.0) > 1e-9)
      throw PreconditionError(std::string(what) + " window " + std::to_string(i) +
                              " is not unit-norm (" + std::to_string(norm) + ")");
    m.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(v.data(), w);
  }
  return m;
}

inline AtomBlock cluster_block(const std::vector<std::vector<double>>& windows, int w, int k,
                               std::uint64_t seed, const char* what) {
  if (static_cast<int>(windows.size()) < k)
    throw InsufficientSamples(std::string(what) + ": " + std::to_string(windows.size()) +
                              " windows for k = " + std::to_string(k));
  const auto pts = to_columns(windows, w, what);
  auto km = kmeans(pts, k, seed);
  AtomBlock out;
  out.atoms = km.centroids;
  for (Eigen::Index j = 0; j < out.atoms.cols(); ++j) {
    const double norm = out.atoms.col(j).norm();
    if (!(norm > 1e-12))
      throw Error(std::string(what) + ": centroid " + std::to_string(j) + " has zero norm");
    out.atoms.col(j) /= norm;
  }
  if (km.degenerate > 0)
    out.warnings.push_back(std::string(what) + ": fewer distinct windows than clusters, " +
                           "duplicate atoms kept");
  if (!km.converged)
    out.warnings.push_back(std::string(what) + ": k-means hit the iteration cap");
  return out;
}

}  // namespace detail

/// k pulse centroids followed by k inverse-pulse centroids, unit-norm.
inline AtomBlock build_target_block(const TrainingSet& ts, int k, std::uint64_t seed) {
  auto pulses = detail::cluster_block(ts.target_pulses, ts.w, k, derive_seed(seed, 1), "pulse");
  auto inverse =
      detail::cluster_block(ts.target_inverse, ts.w, k, derive_seed(seed, 2), "inverse pulse");
  AtomBlock out;
  out.atoms.resize(ts.w, 2 * k);
  out.atoms << pulses.atoms, inverse.atoms;
  out.warnings = std::move(pulses.warnings);
  out.warnings.insert(out.warnings.end(), inverse.warnings.begin(), inverse.warnings.end());
  return out;
}

inline AtomBlock build_background_block(const TrainingSet& ts, int k, std::uint64_t seed) {
  return detail::cluster_block(ts.background, ts.w, k, derive_seed(seed, 3), "background");
}

inline LabeledDictionary assemble(const Eigen::MatrixXd& target_atoms,
                                  const Eigen::MatrixXd& background_atoms, Family family,
                                  int k_target = kDefaultTargetClusters,
                                  int k_background = kDefaultBackgroundClusters,
                                  std::uint64_t seed = 0) {
  if (target_atoms.cols() == 0 || background_atoms.cols() == 0)
    throw PreconditionError("dictionary needs both target and background atoms");
  if (target_atoms.rows() != background_atoms.rows())
    throw PreconditionError("atom length mismatch: " + std::to_string(target_atoms.rows()) +
                            " vs " + std::to_string(background_atoms.rows()));
  LabeledDictionary d;
  d.family = family;
  d.atoms.resize(target_atoms.rows(), target_atoms.cols() + background_atoms.cols());
  d.atoms << target_atoms, background_atoms;
  d.n_target_atoms = static_cast<int>(target_atoms.cols());
  d.n_background_atoms = static_cast<int>(background_atoms.cols());
  d.labels.assign(static_cast<std::size_t>(d.n_target_atoms), +1);
  d.labels.insert(d.labels.end(), static_cast<std::size_t>(d.n_background_atoms), -1);
  d.k_target = k_target;
  d.k_background = k_background;
  d.seed = seed;
  for (Eigen::Index j = 0; j < d.p(); ++j) {
    const double norm = d.atoms.col(j).norm();
    if (std::abs(norm - 1.0) > 1e-10)
      throw PreconditionError("atom " + std::to_string(j) + " has norm " + std::to_string(norm));
  }
  return d;
}

struct DictionaryBuild {
  LabeledDictionary dictionary;
  std::vector<std::string> warnings;
};

inline DictionaryBuild build_dictionary(const TrainingSet& ts, int k_target, int k_background,
                                        std::uint64_t seed) {
  auto target = build_target_block(ts, k_target, seed);
  auto background = build_background_block(ts, k_background, seed);
  DictionaryBuild out{assemble(target.atoms, background.atoms, ts.family, k_target, k_background,
                               seed),
                      std::move(target.warnings)};
  out.warnings.insert(out.warnings.end(), background.warnings.begin(), background.warnings.end());
  return out;
}

inline SparseCode solve_l1ls(std::span<const double> x, const LabeledDictionary& dict,
                             const SolverConfig& cfg) {
  if (static_cast<Eigen::Index>(x.size()) != dict.n())
    throw PreconditionError("query length " + std::to_string(x.size()) +
                            " != dictionary atom length " + std::to_string(dict.n()));
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  return solve_l1ls(xv, dict.atoms, cfg);
}

}  // namespace pulsesrc
