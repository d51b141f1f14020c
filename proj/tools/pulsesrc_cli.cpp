// pulsesrc: screen, classify, train, and evaluate pulse-recloser event records.
//
// Exit codes: 0 success, 2 input/parse error, 3 missing artifact,
// 4 non-convergence with --strict.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "pulsesrc/pulsesrc.hpp"

namespace fs = std::filesystem;
using namespace pulsesrc;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitMissing = 3;
constexpr int kExitNonConverged = 4;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<double> conf_th;
  std::string dict_dir;
  std::string out;
  bool strict = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "key=value configuration file");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--lambda", o.lambda, "l1 regularization weight");
  cmd->add_option("--conf-th", o.conf_th, "pulse confidence threshold");
  cmd->add_option("--dict-dir", o.dict_dir, "directory holding dict_<family>.json");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--strict", o.strict, "fail with exit code 4 on solver non-convergence");
}

PipelineConfig resolve(const CommonOptions& o) {
  PipelineConfig cfg;
  if (!o.config.empty()) cfg = load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.lambda) cfg.solver.lambda = *o.lambda;
  if (o.conf_th) cfg.conf_th = *o.conf_th;
  if (!o.dict_dir.empty()) cfg.dict_dir = o.dict_dir;
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

// Prints to stdout when no output directory was given.
void emit(const CommonOptions& o, const std::string& name, const nlohmann::json& j) {
  const auto text = j.dump(1) + "\n";
  if (o.out.empty())
    std::cout << text;
  else
    write_text(fs::path(o.out) / name, text);
}

std::vector<double> read_window_file(const fs::path& path, std::optional<ChannelKind>& channel) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("window file not found: " + path.string());
  std::vector<double> values;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto text = detail::trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      const auto pos = text.find("channel=");
      if (pos != std::string_view::npos) {
        auto name = detail::trim(text.substr(pos + 8));
        name = name.substr(0, name.find_first_of(", "));
        channel = parse_channel(name);
        if (!channel) throw ParseError("line " + std::to_string(lineno) + ": unknown channel");
      }
      continue;
    }
    for (auto cell : detail::split(text, ',')) {
      if (cell.empty()) continue;
      double v = 0;
      auto [p, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || p != cell.data() + cell.size() || !std::isfinite(v))
        throw ParseError("line " + std::to_string(lineno) + ": non-numeric value '" +
                         std::string(cell) + "'");
      values.push_back(v);
    }
  }
  return values;
}

int cmd_synth(const CommonOptions& o, int n_events, const std::string& mix_text,
              const std::string& kind, int cycles) {
  if (o.out.empty()) throw PreconditionError("synth requires --out");
  auto cfg = resolve(o);
  ScenarioMix mix;
  if (!kind.empty()) {
    const auto k = parse_scenario_kind(kind);
    if (!k) throw ParseError("unknown scenario kind '" + kind + "'");
    mix = ScenarioMix::only(*k);
  } else if (!mix_text.empty()) {
    mix = ScenarioMix::parse(mix_text);
  }
  const auto corpus = gen_corpus(n_events, mix, cfg.seed, cycles);
  write_corpus(corpus, cfg.seed, mix, o.out);
  int pulses = 0;
  for (const auto& e : corpus) pulses += static_cast<int>(e.event.truth.pulses.size());
  std::cerr << "wrote " << corpus.size() << " events (" << pulses << " pulses) to " << o.out << "\n";
  return 0;
}

int cmd_train(const CommonOptions& o, const std::string& corpus_dir) {
  auto cfg = resolve(o);
  const fs::path out = o.out.empty() ? cfg.dict_dir : fs::path(o.out);
  const auto events = load_corpus(corpus_dir);
  const auto trained = train_dictionaries(events, cfg);
  fs::create_directories(out);
  nlohmann::json summary{{"schema_version", kReportSchemaVersion}, {"seed", cfg.seed}};
  for (auto f : kAllFamilies) {
    const auto& build = trained.builds[index_of(f)];
    save(build.dictionary, out / ("dict_" + std::string(name_of(f)) + ".json"));
    const auto& ts = trained.sets[index_of(f)];
    summary["families"][std::string(name_of(f))] = {
        {"pulse_windows", ts.target_pulses.size()},
        {"inverse_windows", ts.target_inverse.size()},
        {"background_windows", ts.background.size()},
        {"p", build.dictionary.p()},
        {"warnings", build.warnings}};
    for (const auto& w : build.warnings) std::cerr << "warning: " << name_of(f) << ": " << w << "\n";
  }
  const auto manifest = read_json(fs::path(corpus_dir) / "manifest.json");
  const auto seeds = manifest_seeds(manifest);
  summary["training_event_seeds"] = std::vector<std::uint64_t>(seeds.begin(), seeds.end());
  write_text(out / "training_manifest.json", summary.dump(1) + "\n");
  std::cerr << "trained 3 dictionaries from " << events.size() << " events into " << out << "\n";
  return 0;
}

int cmd_screen(const CommonOptions& o, const std::string& record_path) {
  auto cfg = resolve(o);
  const auto record = ingest_csv(record_path);
  emit(o, "screening.json", to_json(run_screening(record, cfg.thresholds, cfg.w_class)));
  return 0;
}

int cmd_analyze(const CommonOptions& o, const std::string& record_path) {
  auto cfg = resolve(o);
  const auto record = ingest_csv(record_path);
  const auto dicts = load_dictionaries(cfg);
  const auto rep = analyze(record, cfg, dicts);
  emit(o, "report.json", to_json(rep, cfg));
  if (!o.out.empty()) {
    std::ostringstream csv;
    write_plot_csv(record, rep, cfg.w_class, csv);
    write_text(fs::path(o.out) / "plot.csv", csv.str());
  }
  if (o.strict && rep.any_non_converged()) {
    std::cerr << "error: solver did not converge on at least one candidate window\n";
    return kExitNonConverged;
  }
  return 0;
}

int cmd_classify(const CommonOptions& o, const std::string& window_path, const std::string& family) {
  auto cfg = resolve(o);
  std::optional<ChannelKind> channel;
  auto values = read_window_file(window_path, channel);
  std::optional<Family> fam;
  if (!family.empty()) {
    fam = parse_family(family);
    if (!fam) throw ParseError("unknown family '" + family + "'");
  } else if (channel) {
    fam = family_of(*channel);
  } else {
    throw PreconditionError("classify needs --family or a '# channel=<name>' header");
  }
  if (!channel) channel = channel_of(*fam, Phase::A);
  const auto path = cfg.dictionary_path(*fam);
  if (!fs::exists(path))
    throw MissingArtifact("missing " + std::string(name_of(*fam)) + " dictionary: " + path.string());
  const auto dict = load(path, *fam);
  SampleWindow win{*channel, 0, std::move(values), false};
  const auto res = classify_window(win, dict, cfg.solver, cfg.conf_th);
  auto j = to_json(res);
  j["schema_version"] = kReportSchemaVersion;
  j["confidence_definition"] = std::string(kConfidenceDefinition);
  emit(o, "classification.json", j);
  if (o.strict && res.rejected_reason == RejectReason::NonConverged) return kExitNonConverged;
  return 0;
}

int cmd_eval(const CommonOptions& o, const std::string& corpus_dir) {
  auto cfg = resolve(o);
  const auto manifest = read_json(fs::path(corpus_dir) / "manifest.json");
  const auto training = cfg.dict_dir / "training_manifest.json";
  if (fs::exists(training)) {
    const auto trained_on = read_json(training).at("training_event_seeds").get<std::set<std::uint64_t>>();
    for (auto s : manifest_seeds(manifest))
      if (trained_on.count(s))
        throw PreconditionError("test corpus shares event seed " + std::to_string(s) +
                                " with the training corpus; refusing to evaluate");
  }
  const auto events = load_corpus(corpus_dir);
  const auto dicts = load_dictionaries(cfg);
  EvalSummary sum;
  bool non_converged = false;
  for (const auto& ev : events) {
    const auto rep = analyze(ev.record, cfg, dicts);
    non_converged = non_converged || rep.any_non_converged();
    accumulate(sum, score_event(ev.truth, detections_from(rep.classifications, cfg.w_class)));
  }
  auto j = to_json(sum);
  j["parameters"] = parameters_json(cfg);
  emit(o, "eval.json", j);
  print_eval_table(sum, std::cerr);
  if (o.strict && non_converged) return kExitNonConverged;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pulse-recloser event screening and sparse-representation pulse classification"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string positional, family, mix, kind;
  int n_events = 200, cycles = 40;

  auto* synth = app.add_subcommand("synth", "generate a seeded synthetic corpus");
  add_common(synth, opts);
  synth->add_option("--events", n_events, "number of events")->check(CLI::PositiveNumber);
  synth->add_option("--mix", mix, "scenario weights, e.g. temporary_fault=0.5,quiescent=0.5");
  synth->add_option("--kind", kind, "generate a single scenario kind");
  synth->add_option("--cycles", cycles, "record length in cycles");

  auto* train = app.add_subcommand("train", "build per-family dictionaries from a corpus");
  add_common(train, opts);
  train->add_option("corpus", positional, "corpus directory")->required();

  auto* screen = app.add_subcommand("screen", "RMS screening of one record");
  add_common(screen, opts);
  screen->add_option("record", positional, "record CSV")->required();

  auto* analyze_cmd = app.add_subcommand("analyze", "screen and classify one record");
  add_common(analyze_cmd, opts);
  analyze_cmd->add_option("record", positional, "record CSV")->required();

  auto* classify = app.add_subcommand("classify", "classify a single window file");
  add_common(classify, opts);
  classify->add_option("window", positional, "window file (one or more values per line)")->required();
  classify->add_option("--family", family, "ss_voltage | ls_voltage | ls_current");

  auto* eval = app.add_subcommand("eval", "score detections against corpus ground truth");
  add_common(eval, opts);
  eval->add_option("corpus", positional, "test corpus directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*synth) return cmd_synth(opts, n_events, mix, kind, cycles);
    if (*train) return cmd_train(opts, positional);
    if (*screen) return cmd_screen(opts, positional);
    if (*analyze_cmd) return cmd_analyze(opts, positional);
    if (*classify) return cmd_classify(opts, positional, family);
    if (*eval) return cmd_eval(opts, positional);
  } catch (const MissingArtifact& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissing;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return 0;
}
