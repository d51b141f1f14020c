// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

#include "oracles.hpp"
#include "pulsesrc/pulsesrc.hpp"

namespace fs = std::filesystem;
using namespace pulsesrc;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void rms_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> len(16, 2048);
  std::normal_distribution<double> g(0.0, 5000.0);
  double worst = 0.0;
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t m = t % 2 ? 64 : 16;
    std::vector<double> v(static_cast<std::size_t>(len(rng)));
    for (auto& x : v) x = g(rng) + (t % 3 == 0 ? 7200.0 : 0.0);
    if (v.size() < m) v.resize(m, 1.0);
    const auto fast = sliding_rms(v, m);
    const auto ref = oracle::brute_sliding_rms(v, m);
    for (std::size_t k = 0; k < ref.size(); ++k) worst = std::max(worst, std::abs(fast[k] - ref[k]));
    ++checked;
  }
  const double dt = seconds_since(t0);
  report("rms_oracle", worst <= 1e-10 && dt < 5.0,
         fmt("%d sequences, max |err| = %.3g (<= 1e-10), %.2f s (< 5 s)", checked, worst, dt));
}

void solver_certificate() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(202);
  SolverConfig cfg;
  double worst_kkt = 0.0;
  int converged = 0;
  for (int t = 0; t < 500; ++t) {
    const int n = std::uniform_int_distribution<int>(8, 180)(rng);
    const int p = std::uniform_int_distribution<int>(2, 50)(rng);
    Eigen::MatrixXd D = oracle::random_unit_columns(n, p, rng);
    if (t % 2) {  // coherent atoms, closer to clustered dictionaries
      const Eigen::VectorXd base = oracle::random_vector(n, rng);
      for (int j = 0; j < p; ++j) D.col(j) = (base + 0.3 * D.col(j) * std::sqrt(n)).normalized();
    }
    const Eigen::VectorXd x = oracle::random_vector(n, rng).normalized();
    const double lmax = (D.transpose() * x).lpNorm<Eigen::Infinity>();
    cfg.lambda = std::uniform_real_distribution<double>(0.01, 0.9)(rng) * lmax;
    const auto code = solve_l1ls(x, D, cfg);
    if (code.converged) {
      ++converged;
      worst_kkt = std::max(worst_kkt, kkt_residual(x, D, code.alpha, cfg.lambda));
    }
  }
  double worst_rel = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = std::uniform_int_distribution<int>(2, 12)(rng);
    const int p = std::uniform_int_distribution<int>(1, 8)(rng);
    const auto D = oracle::random_unit_columns(n, p, rng);
    const auto x = oracle::random_vector(n, rng);
    cfg.lambda = std::uniform_real_distribution<double>(0.01, 1.0)(rng) *
                 (D.transpose() * x).lpNorm<Eigen::Infinity>();
    const auto code = solve_l1ls(x, D, cfg);
    const double ref = oracle::sign_pattern_minimum(x, D, cfg.lambda);
    worst_rel = std::max(worst_rel, std::abs(code.objective - ref) / std::max(1.0, std::abs(ref)));
  }
  const double dt = seconds_since(t0);
  report("solver_certificate",
         worst_kkt <= 1e-6 && worst_rel <= 1e-6 && dt < 60.0,
         fmt("%d/500 converged, max kkt = %.3g (<= 1e-6); 100 oracle cases, max rel obj err = "
             "%.3g (<= 1e-6); %.2f s (< 60 s)",
             converged, worst_kkt, worst_rel, dt));
}

void closed_forms() {
  std::mt19937_64 rng(303);
  SolverConfig cfg;
  int zero_ok = 0, ortho_ok = 0;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = std::uniform_int_distribution<int>(4, 180)(rng);
    const int p = std::uniform_int_distribution<int>(1, 50)(rng);
    const auto D = oracle::random_unit_columns(n, p, rng);
    const auto x = oracle::random_vector(n, rng);
    cfg.lambda = (D.transpose() * x).lpNorm<Eigen::Infinity>() *
                 std::uniform_real_distribution<double>(1.0, 3.0)(rng);
    const auto code = solve_l1ls(x, D, cfg);
    if (code.alpha.size() == p && (code.alpha.array() == 0.0).all()) ++zero_ok;
  }
  for (int t = 0; t < 100; ++t) {
    const int n = std::uniform_int_distribution<int>(2, 180)(rng);
    const int p = std::uniform_int_distribution<int>(1, std::min(n, 50))(rng);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(oracle::random_unit_columns(n, n, rng));
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, p);
    const auto x = oracle::random_vector(n, rng);
    const Eigen::VectorXd z = Q.transpose() * x;
    cfg.lambda = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * z.lpNorm<Eigen::Infinity>();
    const auto code = solve_l1ls(x, Q, cfg);
    double err = 0.0;
    for (int k = 0; k < p; ++k) err = std::max(err, std::abs(code.alpha[k] - soft_threshold(z[k], cfg.lambda)));
    worst = std::max(worst, err);
    if (err <= 1e-8) ++ortho_ok;
  }
  report("closed_form_zero_solution", zero_ok == 100,
         fmt("%d/100 cases with lambda >= ||D^T x||_inf return alpha == 0 exactly", zero_ok));
  report("closed_form_orthonormal", ortho_ok == 100,
         fmt("%d/100 cases match soft-threshold, max |err| = %.3g (<= 1e-8)", ortho_ok, worst));
}

void kmeans_properties() {
  std::mt19937_64 rng(404);
  int monotone = 0, fixed = 0, exact = 0;
  const int cases = 50;
  for (int t = 0; t < cases; ++t) {
    const int dim = std::uniform_int_distribution<int>(1, 40)(rng);
    const int n = std::uniform_int_distribution<int>(5, 300)(rng);
    const int k = std::uniform_int_distribution<int>(1, std::min(n, 12))(rng);
    Eigen::MatrixXd pts(dim, n);
    const Eigen::MatrixXd centers = oracle::random_unit_columns(dim, 4, rng) * 5.0;
    std::normal_distribution<double> g;
    for (int i = 0; i < n; ++i)
      pts.col(i) = centers.col(i % 4) + Eigen::VectorXd::NullaryExpr(dim, [&] { return g(rng); });
    const std::uint64_t seed = rng();
    const auto a = kmeans(pts, k, seed);
    const auto b = kmeans(pts, k, seed);

    bool mono = true;
    for (std::size_t i = 1; i < a.wcss_history.size(); ++i)
      mono = mono && a.wcss_history[i] <= a.wcss_history[i - 1];
    monotone += mono;

    // Fixed point: centroids are the means of their clusters, and
    // nearest-centroid reassignment reproduces the assignment.
    bool fp = a.converged;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(dim, k);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      sums.col(a.assignment[static_cast<std::size_t>(i)]) += pts.col(i);
      ++counts[static_cast<std::size_t>(a.assignment[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0)
        fp = fp && (a.centroids.col(c) - sums.col(c) / counts[static_cast<std::size_t>(c)])
                           .lpNorm<Eigen::Infinity>() <= 1e-12;
    for (int i = 0; i < n && fp; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int c = 0; c < k; ++c) {
        const double d = (pts.col(i) - a.centroids.col(c)).squaredNorm();
        if (d < best) best = d, arg = c;
      }
      fp = arg == a.assignment[static_cast<std::size_t>(i)];
    }
    fixed += fp;
    exact += a.centroids == b.centroids && a.assignment == b.assignment && a.wcss == b.wcss &&
             a.wcss_history == b.wcss_history;
  }
  report("kmeans_monotone_wcss", monotone == cases, fmt("%d/%d runs non-increasing", monotone, cases));
  report("kmeans_fixed_point", fixed == cases, fmt("%d/%d runs end at a Lloyd fixed point", fixed, cases));
  report("kmeans_determinism", exact == cases, fmt("%d/%d seeded reruns bit-identical", exact, cases));
}

struct Trained {
  PipelineConfig cfg;
  DictionarySet dicts;
};

Trained train_default(std::uint64_t seed) {
  Trained t;
  const auto corpus = gen_corpus(100, ScenarioMix{}, seed);
  const auto built = train_dictionaries(as_loaded(corpus), t.cfg);
  for (auto f : kAllFamilies) t.dicts[index_of(f)] = built.builds[index_of(f)].dictionary;
  return t;
}

void classifier_identities(const Trained& tr) {
  std::mt19937_64 rng(505);
  // delta partition on random codes and random labelings.
  bool partition = true;
  for (int t = 0; t < 200; ++t) {
    const int p = std::uniform_int_distribution<int>(1, 60)(rng);
    Eigen::VectorXd a = oracle::random_vector(p, rng);
    for (int k = 0; k < p; k += 3) a[k] = 0.0;
    std::vector<int> labels(static_cast<std::size_t>(p));
    for (auto& l : labels) l = rng() & 1 ? 1 : -1;
    const Eigen::VectorXd sum = class_select(a, labels, +1) + class_select(a, labels, -1);
    partition = partition && sum == a;
  }
  report("classifier_delta_partition", partition,
         "delta(+1) + delta(-1) == alpha exactly on 200 random codes");

  // Scale invariance on 50 windows: half real candidates, half random.
  const auto events = gen_corpus(10, ScenarioMix{}, 909);
  std::vector<SampleWindow> windows;
  for (const auto& ev : events) {
    const auto rep = run_screening(ev.event.record, tr.cfg.thresholds, tr.cfg.w_class);
    for (const auto& c : rep.candidates) {
      if (windows.size() >= 25) break;
      windows.push_back(slice_window_clamped(ev.event.record, c.channel, c.start_index, tr.cfg.w_class));
    }
  }
  std::normal_distribution<double> g(0.0, 3000.0);
  while (windows.size() < 50) {
    SampleWindow w{kAllChannels[windows.size() % 9], 0, std::vector<double>(180), false};
    for (auto& v : w.values) v = g(rng);
    windows.push_back(w);
  }
  int same = 0, positives = 0;
  double worst = 0.0;
  for (const auto& w : windows) {
    const auto& d = *tr.dicts[index_of(family_of(w.channel))];
    const auto base = classify_window(w, d, tr.cfg.solver, tr.cfg.conf_th);
    positives += base.label == 1;
    bool ok = true;
    for (double c : {0.5, 2.0, 1000.0}) {
      auto s = w;
      for (auto& v : s.values) v *= c;
      const auto r = classify_window(s, d, tr.cfg.solver, tr.cfg.conf_th);
      const double diff = std::abs(r.confidence - base.confidence);
      worst = std::max(worst, diff);
      ok = ok && r.label == base.label && diff <= 1e-9;
    }
    same += ok;
  }
  report("classifier_scale_invariance", same == 50,
         fmt("%d/50 windows (%d labeled +1) keep label, max |dconf| = %.3g over c in {0.5, 2, 1000}",
             same, positives, worst));
}

void end_to_end(const Trained& tr, double train_seconds) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto test = as_loaded(gen_corpus(100, ScenarioMix{}, 2));
  const auto sum = evaluate_corpus(test, tr.cfg, tr.dicts);
  const double dt = seconds_since(t0) + train_seconds;
  bool ok = dt < 300.0;
  std::string detail;
  for (auto f : kAllFamilies) {
    const auto& fs = sum[f];
    ok = ok && fs.n_true_pulses > 0 && fs.correct_detection_pct() >= 95.0 &&
         fs.false_detection_pct() <= 2.0;
    detail += fmt("%s %d pulses %.2f%%/%.2f%%; ", std::string(name_of(f)).c_str(),
                  fs.n_true_pulses, fs.correct_detection_pct(), fs.false_detection_pct());
  }
  report("e2e_detection", ok, detail + fmt("(>= 95%% correct, <= 2%% false) %.1f s (< 300 s)", dt));

  const auto& lv = sum[Family::LsVoltage];
  const auto& li = sum[Family::LsCurrent];
  report("table_ordering_ls_v_gt_ls_i", lv.n_true_pulses > li.n_true_pulses,
         fmt("LS voltage %d pulses > LS current %d pulses", lv.n_true_pulses, li.n_true_pulses));
}

bool overlaps_any(std::int64_t s, std::int64_t e, ChannelKind c, const auto& spans) {
  for (const auto& p : spans)
    if (p.channel == c && s < p.end && p.start < e) return true;
  return false;
}

void scenario_narratives(const Trained& tr) {
  const auto at_end = [](const AnalysisReport& rep, Phase p) {
    return value_at(rep.screening.timeline[p].pole_status,
                    static_cast<std::int64_t>(rep.screening.length) - 1);
  };
  // Upstream pulse test: every phase tested, none restored.
  {
    int ok = 0, n = 10, detected = 0, pulses = 0;
    for (int i = 0; i < n; ++i) {
      auto sc = draw_scenario(ScenarioMix::only(ScenarioKind::UpstreamPulseTest), derive_seed(7001, i));
      const auto ev = gen_event(sc);
      const auto rep = analyze(ev.record, tr.cfg, tr.dicts);
      const auto s = score_event(ev.truth, detections_from(rep.classifications, tr.cfg.w_class));
      bool open = true;
      for (auto p : kAllPhases) open = open && !at_end(rep, p) && !ev.truth.closed_at_end[index_of(p)];
      ok += open;
      for (const auto& f : s) detected += f.true_positives, pulses += f.n_true_pulses;
    }
    report("narrative_upstream_pulse_test", ok == n,
           fmt("%d/%d events end with all poles open (%d/%d pulses detected)", ok, n, detected, pulses));
  }
  // Temporary fault with inrush: screening candidates produced by inrush
  // bursts are rejected as background.
  {
    int inrush_cands = 0, rejected = 0, events = 20;
    for (int i = 0; i < events; ++i) {
      auto sc = draw_scenario(ScenarioMix::only(ScenarioKind::TemporaryFault), derive_seed(7002, i));
      const auto ev = gen_event(sc);
      const auto rep = analyze(ev.record, tr.cfg, tr.dicts);
      for (const auto& r : rep.classifications) {
        const auto e = r.window_start + tr.cfg.w_class;
        if (!overlaps_any(r.window_start, e, r.channel, ev.truth.inrush) ||
            overlaps_any(r.window_start, e, r.channel, ev.truth.pulses))
          continue;
        ++inrush_cands;
        rejected += r.label == -1;
      }
    }
    report("narrative_inrush_rejected", inrush_cands > 0 && rejected == inrush_cands,
           fmt("%d/%d inrush candidates over %d temporary-fault events labeled background",
               rejected, inrush_cands, events));
  }
  // Permanent fault: every candidate is a pulse, all poles open at the end.
  {
    int ok = 0, n = 10, cands = 0, pos = 0;
    for (int i = 0; i < n; ++i) {
      auto sc = draw_scenario(ScenarioMix::only(ScenarioKind::PermanentFault), derive_seed(7003, i));
      const auto ev = gen_event(sc);
      const auto rep = analyze(ev.record, tr.cfg, tr.dicts);
      bool good = !rep.classifications.empty();
      for (const auto& r : rep.classifications) {
        ++cands;
        pos += r.label == 1;
        good = good && r.label == 1;
      }
      for (auto p : kAllPhases) good = good && !at_end(rep, p);
      ok += good;
    }
    report("narrative_permanent_fault", ok == n,
           fmt("%d/%d events: all candidates +1 (%d/%d overall) and all poles open at end", ok, n,
               pos, cands));
  }
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// synth -> train -> analyze -> eval into `dir`; returns every JSON output.
std::vector<std::pair<std::string, std::string>> pipeline_outputs(const fs::path& dir) {
  fs::remove_all(dir);
  PipelineConfig cfg;
  cfg.seed = 77;
  cfg.dict_dir = dir / "dicts";
  const ScenarioMix mix;
  write_corpus(gen_corpus(100, mix, 11), 11, mix, dir / "train");
  write_corpus(gen_corpus(20, mix, 12), 12, mix, dir / "test");
  const auto trained = train_dictionaries(load_corpus(dir / "train"), cfg);
  fs::create_directories(cfg.dict_dir);
  for (auto f : kAllFamilies)
    save(trained.builds[index_of(f)].dictionary, cfg.dictionary_path(f));
  const auto dicts = load_dictionaries(cfg);
  const auto test = load_corpus(dir / "test");
  std::ofstream(dir / "report.json") << to_json(analyze(test[0].record, cfg, dicts), cfg).dump(1);
  std::ofstream(dir / "eval.json") << to_json(evaluate_corpus(test, cfg, dicts)).dump(1);

  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.path().extension() == ".json")
      out.emplace_back(fs::relative(e.path(), dir).string(), slurp(e.path()));
  std::sort(out.begin(), out.end());
  return out;
}

void determinism() {
  const auto base = fs::temp_directory_path() / ("pulsesrc_accept_" + std::to_string(::getpid()));
  const auto a = pipeline_outputs(base / "a");
  const auto b = pipeline_outputs(base / "b");
  std::size_t same = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) same += a[i] == b[i];
  fs::remove_all(base);
  report("determinism", a.size() == b.size() && same == a.size() && a.size() >= 6,
         fmt("%zu/%zu JSON outputs byte-identical across two seeded runs", same, a.size()));
}

}  // namespace

int main() {
  rms_oracle();
  solver_certificate();
  closed_forms();
  kmeans_properties();
  const auto t0 = std::chrono::steady_clock::now();
  const auto trained = train_default(1);
  const double train_s = seconds_since(t0);
  classifier_identities(trained);
  end_to_end(trained, train_s);
  scenario_narratives(trained);
  determinism();
  std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
