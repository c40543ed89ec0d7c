// acr: chord-recognition evaluation and noisy-student experiment driver.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <acr/acr.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> output_dir;
};

/// Writes into the output directory when one is set, otherwise to stdout.
void emit(const Globals& g, const std::string& file, const std::string& content) {
  if (g.output_dir) {
    fs::create_directories(*g.output_dir);
    acr::detail::write_file(*g.output_dir / file, content);
  } else {
    std::cout << content;
  }
}

fs::path require_output_dir(const Globals& g, const char* command) {
  if (!g.output_dir) throw CLI::RequiredError(std::string(command) + " needs --output-dir");
  return *g.output_dir;
}

nlohmann::json read_json(const fs::path& path) {
  const auto j = nlohmann::json::parse(acr::detail::read_file(path), nullptr, false);
  if (j.is_discarded()) throw acr::DataError("invalid JSON in '" + path.string() + "'");
  return j;
}

/// `.lab` files of a directory, sorted by name.
std::vector<fs::path> lab_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw acr::DataError("not a directory: '" + dir.string() + "'");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".lab") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

acr::TimedLabelSequence load_lab(const fs::path& path) {
  try {
    return acr::read_lab(acr::detail::read_file(path), path.stem().string());
  } catch (const acr::DataError& e) {
    throw acr::DataError(path.string() + ": " + e.what());
  }
}

int cmd_parse(const std::vector<std::string>& labels) {
  for (const auto& l : labels) std::cout << acr::to_string(acr::parse_chord_label(l)) << '\n';
  return 0;
}

int cmd_validate(const std::vector<fs::path>& files) {
  for (const auto& f : files) {
    const auto seq = load_lab(f);
    std::cout << f.string() << ": ok, " << seq.segments().size() << " segments\n";
  }
  return 0;
}

int cmd_stats(const Globals& g, const fs::path& dir, const std::string& vocab) {
  std::vector<acr::TimedLabelSequence> seqs;
  for (const auto& f : lab_files(dir)) seqs.push_back(load_lab(f));
  if (seqs.empty()) throw acr::DataError("no .lab files in '" + dir.string() + "'");
  emit(g, "distribution.csv",
       acr::distribution_csv(acr::type_distribution(seqs, acr::Vocabulary::from_name(vocab))));
  return 0;
}

int cmd_evaluate(const Globals& g, const fs::path& pred_dir, const fs::path& ref_dir,
                 const std::string& vocab_name) {
  const auto vocab = acr::Vocabulary::from_name(vocab_name);
  std::vector<acr::TrackPair> pairs;
  for (const auto& ref : lab_files(ref_dir)) {
    const fs::path pred = pred_dir / ref.filename();
    if (!fs::exists(pred)) {
      throw acr::DataError("no prediction for '" + ref.filename().string() + "' in '" +
                           pred_dir.string() + "'");
    }
    pairs.emplace_back(load_lab(pred), load_lab(ref));
  }
  if (pairs.empty()) throw acr::DataError("no .lab files in '" + ref_dir.string() + "'");
  const auto report = acr::evaluate(pairs, vocab);
  if (g.output_dir) {
    emit(g, "metrics.json", acr::to_json(report).dump(2) + "\n");
    emit(g, "per_type.csv", acr::per_type_csv(report));
  } else {
    std::cout << acr::to_json(report).dump(2) << '\n';
  }
  return 0;
}

int cmd_select(const Globals& g, const fs::path& pseudo_path, const fs::path& config_path) {
  const auto pseudo = acr::pseudolabels_from_jsonl(acr::detail::read_file(pseudo_path));
  const auto config = acr::selection_config_from_json(read_json(config_path));
  // Track length is the end of its last pseudo-labeled segment.
  const auto result = acr::select_balanced_subset(pseudo, {}, config);
  if (g.output_dir) {
    emit(g, "excerpts.json", acr::to_json(result.dataset).dump(2) + "\n");
    emit(g, "selection_report.csv", acr::selection_report_csv(result.report));
  } else {
    nlohmann::ordered_json j;
    j["excerpts"] = acr::to_json(result.dataset);
    j["report"] = acr::to_json(result.report);
    std::cout << j.dump(2) << '\n';
  }
  return 0;
}

int cmd_synth(const Globals& g, const fs::path& spec_path) {
  const fs::path out = require_output_dir(g, "synth");
  auto spec = acr::corpus_spec_from_json(read_json(spec_path));
  if (g.seed) spec.seed = *g.seed;
  const auto corpus = acr::generate_corpus(spec);
  acr::save_corpus(out, corpus, acr::to_json(spec));
  std::cout << "wrote " << corpus.size() << " tracks to " << out.string() << '\n';
  return 0;
}

int cmd_run(const Globals& g, const fs::path& config_path) {
  const fs::path out = require_output_dir(g, "run");
  auto config = acr::experiment_config_from_json(read_json(config_path),
                                                 config_path.parent_path());
  if (g.seed) config.seed = *g.seed;
  const auto result = acr::run_experiment(config, out);
  std::cout << acr::compare_runs({{result.name, result.iterations}}).curves;
  return 0;
}

int cmd_compare(const Globals& g, const std::vector<fs::path>& reports) {
  std::vector<acr::ReportSeries> runs;
  for (const auto& r : reports) {
    const auto j = nlohmann::ordered_json::parse(acr::detail::read_file(r), nullptr, false);
    if (j.is_discarded()) throw acr::DataError("invalid JSON in '" + r.string() + "'");
    runs.push_back(acr::series_from_json(j));
  }
  const auto cmp = acr::compare_runs(runs);
  if (g.output_dir) {
    emit(g, "summary.csv", cmp.table);
    emit(g, "curves.csv", cmp.curves);
  } else {
    std::cout << cmp.table;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chord recognition metrics, balanced pseudo-label selection and "
               "noisy-student experiments"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Globals g;
  std::uint64_t seed = 0;
  std::string output_dir;
  auto* seed_opt = app.add_option("--seed", seed, "Override the seed of synth/run");
  auto* out_opt = app.add_option("--output-dir", output_dir, "Directory for all written files");

  std::vector<std::string> labels;
  auto* parse = app.add_subcommand("parse", "Print the canonical form of chord labels");
  parse->add_option("labels", labels, "Chord labels")->required();

  std::vector<fs::path> lab_paths;
  auto* validate = app.add_subcommand("validate", "Check .lab annotation files");
  validate->add_option("files", lab_paths, ".lab files")->required()->check(CLI::ExistingFile);

  fs::path stats_dir;
  std::string vocab = "sevenths";
  auto* stats = app.add_subcommand("stats", "Chord-type distribution of a directory of .lab files");
  stats->add_option("dir", stats_dir, "Directory of .lab files")->required();
  stats->add_option("--vocab", vocab, "Vocabulary: sevenths or full")->capture_default_str();

  fs::path pred_dir, ref_dir;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against references");
  evaluate->add_option("--pred", pred_dir, "Directory of predicted .lab files")->required();
  evaluate->add_option("--ref", ref_dir, "Directory of reference .lab files")->required();
  evaluate->add_option("--vocab", vocab, "Vocabulary: sevenths or full")->capture_default_str();

  fs::path pseudo_path, select_config;
  auto* select = app.add_subcommand("select", "Balanced excerpt selection from pseudo-labels");
  select->add_option("--pseudolabels", pseudo_path, "JSON-lines pseudo-labels")
      ->required()->check(CLI::ExistingFile);
  select->add_option("--config", select_config, "Selection config JSON")
      ->required()->check(CLI::ExistingFile);

  fs::path spec_path;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("--spec", spec_path, "Corpus spec JSON")->required()->check(CLI::ExistingFile);

  fs::path run_config;
  auto* run = app.add_subcommand("run", "Run a noisy-student experiment");
  run->add_option("--config", run_config, "Experiment config JSON")
      ->required()->check(CLI::ExistingFile);

  std::vector<fs::path> report_paths;
  auto* compare = app.add_subcommand("compare", "Table of best iterations across runs");
  compare->add_option("reports", report_paths, "reports.json files")
      ->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }
  if (*seed_opt) g.seed = seed;
  if (*out_opt) g.output_dir = fs::path(output_dir);

  try {
    if (*parse) return cmd_parse(labels);
    if (*validate) return cmd_validate(lab_paths);
    if (*stats) return cmd_stats(g, stats_dir, vocab);
    if (*evaluate) return cmd_evaluate(g, pred_dir, ref_dir, vocab);
    if (*select) return cmd_select(g, pseudo_path, select_config);
    if (*synth) return cmd_synth(g, spec_path);
    if (*run) return cmd_run(g, run_config);
    if (*compare) return cmd_compare(g, report_paths);
  } catch (const CLI::Error& e) {
    std::cerr << "acr: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "acr: error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}
