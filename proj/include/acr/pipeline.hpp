#pragma once

// Noisy-student self-training loop: train a teacher on labeled data,
// pseudo-label the unlabeled pool, select balanced excerpts, augment them,
// retrain a fresh student on labeled + selected data, repeat. Every iteration
// is evaluated on a held-out test corpus.

#include <acr/annotations.hpp>
#include <acr/augment.hpp>
#include <acr/chord.hpp>
#include <acr/error.hpp>
#include <acr/metrics.hpp>
#include <acr/rng.hpp>
#include <acr/selection.hpp>
#include <acr/student.hpp>
#include <acr/synth.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace acr {

/// A corpus on disk, or one generated in memory from a spec.
using CorpusSource = std::variant<std::filesystem::path, CorpusSpec>;

struct ExperimentConfig {
  std::string name = "experiment";
  CorpusSource labeled;
  CorpusSource unlabeled;
  CorpusSource test;
  double train_fraction = 0.8;
  /// Noisy-student iterations after the baseline.
  int iterations = 3;
  Vocabulary vocabulary = Vocabulary::sevenths();
  TrainParams train;
  SelectionConfig selection;
  AugmentSpec augment;
  std::size_t smoothing_window = 5;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
      throw DataError("config: train fraction must lie in (0, 1)");
    }
    if (iterations < 0) throw DataError("config: iterations must be >= 0");
    if (smoothing_window == 0 || smoothing_window % 2 == 0) {
      throw DataError("config: smoothing window must be odd and >= 1");
    }
    augment.validate();
  }
};

struct IterationReport {
  int index = 0;
  MetricsReport metrics;
  std::optional<SelectionReport> selection;
  std::string model_path;
  double wall_seconds = 0.0;
  int epochs_run = 0;
  int best_epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  std::size_t training_tracks = 0;
  double selected_seconds = 0.0;
};

struct ExperimentResult {
  std::string name;
  std::vector<std::string> train_tracks;
  std::vector<std::string> validation_tracks;
  std::vector<IterationReport> iterations;
  std::vector<ExcerptDataset> selections;  // one per noisy-student iteration
};

namespace detail {

inline std::vector<LabeledTrack> load_source(const CorpusSource& source) {
  if (const auto* path = std::get_if<std::filesystem::path>(&source)) {
    return load_corpus(*path);
  }
  return generate_corpus(std::get<CorpusSpec>(source));
}

inline double total_duration(const std::vector<LabeledTrack>& corpus) {
  double total = 0.0;
  for (const auto& t : corpus) total += t.features.duration();
  return total;
}

/// Frames of `track` whose centres fall in `window`, relabeled from
/// `pseudo`, as a standalone track starting at 0.
inline LabeledTrack cut_excerpt(const FeatureTrack& track,
                                const TimedLabelSequence& pseudo, Interval window) {
  const auto labels = frame_labels(track, pseudo);
  char suffix[48];
  std::snprintf(suffix, sizeof suffix, "@%.3f", window.start);
  LabeledTrack out;
  out.features.track_id = track.track_id + suffix;
  out.features.frame_rate = track.frame_rate;
  std::vector<Segment> segs;
  for (std::size_t i = 0; i < track.frames.size(); ++i) {
    const double t = track.frame_center(i);
    if (t < window.start || t >= window.end) continue;
    const std::size_t k = out.features.frames.size();
    out.features.frames.push_back(track.frames[i]);
    const Interval iv{static_cast<double>(k) / track.frame_rate,
                      static_cast<double>(k + 1) / track.frame_rate};
    if (!segs.empty() && segs.back().label == labels[i]) {
      segs.back().interval.end = iv.end;
    } else {
      segs.push_back({iv, labels[i]});
    }
  }
  out.labels = TimedLabelSequence(out.features.track_id, std::move(segs));
  return out;
}

template <typename Fn>
auto stage(const char* name, int iteration, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw DataError(std::string("stage '") + name + "' (iteration " +
                    std::to_string(iteration) + "): " + e.what());
  }
}

}  // namespace detail

/// Predictions for every track of `corpus`, in corpus order.
inline std::vector<PredictedSegments> pseudo_label(const ClassifierModel& model,
                                                   const std::vector<LabeledTrack>& corpus,
                                                   std::size_t window) {
  std::vector<PredictedSegments> out;
  out.reserve(corpus.size());
  for (const auto& t : corpus) out.push_back(predict_segments(model, t.features, window));
  return out;
}

inline MetricsReport evaluate_model(const ClassifierModel& model,
                                    const std::vector<LabeledTrack>& test,
                                    std::size_t window, const Vocabulary& vocabulary) {
  std::vector<TrackPair> pairs;
  pairs.reserve(test.size());
  for (const auto& t : test) {
    pairs.emplace_back(predict_segments(model, t.features, window).sequence, t.labels);
  }
  return evaluate(pairs, vocabulary);
}

/// Runs the baseline plus `config.iterations` noisy-student rounds. With an
/// output directory, writes reports.json, summary.csv, curves.csv,
/// timings.json, models/iter_<k>.json and selection_<k>.jsonl there.
inline ExperimentResult run_experiment(
    const ExperimentConfig& config,
    const std::optional<std::filesystem::path>& output_dir = std::nullopt);

inline nlohmann::ordered_json to_json(const ExperimentResult& result) {
  nlohmann::ordered_json j;
  j["name"] = result.name;
  j["split"] = {{"train", result.train_tracks}, {"validation", result.validation_tracks}};
  auto iters = nlohmann::ordered_json::array();
  for (const auto& it : result.iterations) {
    nlohmann::ordered_json ij;
    ij["iteration"] = it.index;
    ij["model"] = it.model_path;
    ij["training"] = {{"tracks", it.training_tracks},
                      {"selected_seconds", it.selected_seconds},
                      {"epochs_run", it.epochs_run},
                      {"best_epoch", it.best_epoch},
                      {"train_loss", it.train_loss},
                      {"validation_loss", it.validation_loss}};
    ij["metrics"] = to_json(it.metrics);
    if (it.selection) ij["selection"] = to_json(*it.selection);
    iters.push_back(ij);
  }
  j["iterations"] = iters;
  return j;
}

/// Name and (iteration, metrics) series, as read back from reports.json.
struct ReportSeries {
  std::string name;
  std::vector<IterationReport> iterations;
};

inline ReportSeries series_from_json(const nlohmann::ordered_json& j) {
  ReportSeries s;
  try {
    s.name = j.at("name").get<std::string>();
    for (const auto& ij : j.at("iterations")) {
      IterationReport r;
      r.index = ij.at("iteration").get<int>();
      r.metrics = metrics_from_json(ij.at("metrics"));
      s.iterations.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("reports: ") + e.what());
  }
  return s;
}

/// Headline iteration: best ACQA among the noisy-student iterations, or the
/// baseline when there are none. Earlier iterations win ties.
inline const IterationReport& best_iteration(const std::vector<IterationReport>& its) {
  if (its.empty()) throw DataError("empty report series");
  const IterationReport* best = nullptr;
  for (const auto& it : its) {
    if (its.size() > 1 && it.index == 0) continue;
    if (!best || it.metrics.acqa > best->metrics.acqa) best = &it;
  }
  return *best;
}

struct Comparison {
  std::string table;   // experiment,wcsr,acqa,best_iteration
  std::string curves;  // experiment,iteration,wcsr,acqa
};

inline Comparison compare_runs(const std::vector<ReportSeries>& runs) {
  Comparison c;
  c.table = "experiment,wcsr,acqa,best_iteration\n";
  c.curves = "experiment,iteration,wcsr,acqa\n";
  char buf[256];
  for (const auto& run : runs) {
    const auto& best = best_iteration(run.iterations);
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%d\n", run.name.c_str(),
                  best.metrics.wcsr, best.metrics.acqa, best.index);
    c.table += buf;
    for (const auto& it : run.iterations) {
      std::snprintf(buf, sizeof buf, "%s,%d,%.6f,%.6f\n", run.name.c_str(), it.index,
                    it.metrics.wcsr, it.metrics.acqa);
      c.curves += buf;
    }
  }
  return c;
}

inline ExperimentResult run_experiment(
    const ExperimentConfig& config,
    const std::optional<std::filesystem::path>& output_dir) {
  config.validate();
  using Clock = std::chrono::steady_clock;

  const auto labeled = detail::stage("load labeled", 0, [&] { return detail::load_source(config.labeled); });
  const auto unlabeled = detail::stage("load unlabeled", 0, [&] { return detail::load_source(config.unlabeled); });
  const auto test = detail::stage("load test", 0, [&] { return detail::load_source(config.test); });
  if (labeled.empty() || unlabeled.empty() || test.empty()) {
    throw DataError("stage 'load' (iteration 0): corpora must be non-empty");
  }
  {
    std::set<std::string> train_ids;
    for (const auto& t : labeled) train_ids.insert(t.features.track_id);
    for (const auto& t : unlabeled) train_ids.insert(t.features.track_id);
    for (const auto& t : test) {
      if (train_ids.count(t.features.track_id)) {
        throw DataError("stage 'load' (iteration 0): test track '" +
                        t.features.track_id + "' also appears in training corpora");
      }
    }
  }

  // Fixed train/validation split for the whole run.
  std::vector<std::size_t> order(labeled.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 split_rng(derive_seed(config.seed, "split"));
  std::shuffle(order.begin(), order.end(), split_rng);
  std::size_t n_train = static_cast<std::size_t>(
      std::lround(config.train_fraction * static_cast<double>(labeled.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, labeled.size() > 1 ? labeled.size() - 1 : 1);
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::sort(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::vector<LabeledTrack> train_set, val_set;
  ExperimentResult result;
  result.name = config.name;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& t = labeled[order[k]];
    (k < n_train ? train_set : val_set).push_back(t);
    (k < n_train ? result.train_tracks : result.validation_tracks).push_back(t.features.track_id);
  }
  const std::vector<LabeledTrack>* validation = val_set.empty() ? nullptr : &val_set;
  const double labeled_total = detail::total_duration(train_set);

  if (output_dir) std::filesystem::create_directories(*output_dir / "models");
  nlohmann::ordered_json timings = nlohmann::ordered_json::array();

  auto train_params = [&](int k) {
    TrainParams p = config.train;
    p.seed = derive_seed(config.seed, "train/" + std::to_string(k));
    return p;
  };
  auto finish = [&](IterationReport& report, const TrainResult& trained,
                    Clock::time_point t0) {
    report.epochs_run = trained.epochs_run;
    report.best_epoch = trained.best_epoch;
    report.train_loss = trained.final_loss;
    report.validation_loss = trained.validation_loss;
    report.metrics = detail::stage("evaluate", report.index, [&] {
      return evaluate_model(trained.model, test, config.smoothing_window, config.vocabulary);
    });
    report.model_path = "models/iter_" + std::to_string(report.index) + ".json";
    if (output_dir) {
      detail::write_file(*output_dir / report.model_path, trained.model.to_json().dump(1) + "\n");
    }
    report.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    timings.push_back({{"iteration", report.index}, {"wall_seconds", report.wall_seconds}});
  };

  // Baseline: labeled data only.
  auto t0 = Clock::now();
  IterationReport baseline;
  baseline.index = 0;
  baseline.training_tracks = train_set.size();
  TrainResult teacher = detail::stage("train", 0, [&] {
    const TrainParams p = train_params(0);
    return train(ClassifierModel::initialize(config.vocabulary, p), train_set, p, validation);
  });
  finish(baseline, teacher, t0);
  result.iterations.push_back(std::move(baseline));

  for (int k = 1; k <= config.iterations; ++k) {
    t0 = Clock::now();
    IterationReport report;
    report.index = k;

    const auto pseudo = detail::stage("pseudo-label", k, [&] {
      return pseudo_label(teacher.model, unlabeled, config.smoothing_window);
    });

    SelectionConfig sel = config.selection;
    sel.vocabulary = config.vocabulary;
    sel.labeled_total = labeled_total;
    std::map<std::string, double> durations;
    for (const auto& t : unlabeled) durations[t.features.track_id] = t.features.duration();
    const auto selected = detail::stage("select", k, [&] {
      return select_balanced_subset(pseudo, durations, sel);
    });
    report.selection = selected.report;
    report.selected_seconds = selected.dataset.total_duration();

    std::vector<LabeledTrack> student_set = train_set;
    detail::stage("augment", k, [&] {
      AugmentSpec aug = config.augment;
      aug.seed = derive_seed(config.seed, "augment/" + std::to_string(k));
      for (std::size_t i = 0; i < unlabeled.size(); ++i) {
        auto it = selected.dataset.tracks.find(unlabeled[i].features.track_id);
        if (it == selected.dataset.tracks.end()) continue;
        for (const auto& ex : it->second) {
          auto cut = detail::cut_excerpt(unlabeled[i].features, pseudo[i].sequence, ex.interval);
          if (cut.features.frames.empty()) continue;
          student_set.push_back(augment_track(cut, aug));
        }
      }
      return 0;
    });
    report.training_tracks = student_set.size();

    if (output_dir) {
      std::string lines;
      for (const auto& [id, excerpts] : selected.dataset.tracks) {
        for (const auto& ex : excerpts) {
          nlohmann::ordered_json j;
          j["track"] = id;
          j["start"] = ex.interval.start;
          j["end"] = ex.interval.end;
          auto seeds = nlohmann::ordered_json::array();
          for (const auto& s : ex.seeds) seeds.push_back(std::string(class_name(s.cls)));
          j["seed_classes"] = seeds;
          lines += j.dump() + "\n";
        }
      }
      detail::write_file(*output_dir / ("selection_" + std::to_string(k) + ".jsonl"), lines);
    }
    result.selections.push_back(selected.dataset);

    teacher = detail::stage("train", k, [&] {
      const TrainParams p = train_params(k);
      return train(ClassifierModel::initialize(config.vocabulary, p), student_set, p, validation);
    });
    finish(report, teacher, t0);
    result.iterations.push_back(std::move(report));
  }

  if (output_dir) {
    detail::write_file(*output_dir / "reports.json", to_json(result).dump(2) + "\n");
    ReportSeries series{result.name, result.iterations};
    const Comparison cmp = compare_runs({series});
    detail::write_file(*output_dir / "summary.csv", cmp.table);
    detail::write_file(*output_dir / "curves.csv", cmp.curves);
    detail::write_file(*output_dir / "timings.json", timings.dump(2) + "\n");
  }
  return result;
}

/// Relative corpus paths resolve against `base_dir`. A corpus entry is either
/// a directory path or {"synth": <corpus spec>}.
inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                                    const std::filesystem::path& base_dir = {}) {
  ExperimentConfig c;
  auto source = [&](const char* key) -> CorpusSource {
    if (!j.contains(key)) throw DataError(std::string("config: missing '") + key + "'");
    const auto& v = j[key];
    if (v.is_string()) {
      std::filesystem::path p = v.get<std::string>();
      return p.is_absolute() ? p : base_dir / p;
    }
    if (v.is_object() && v.contains("synth")) return corpus_spec_from_json(v["synth"]);
    throw DataError(std::string("config: '") + key + "' must be a path or {\"synth\": {...}}");
  };
  try {
    c.name = j.value("name", c.name);
    c.labeled = source("labeled");
    c.unlabeled = source("unlabeled");
    c.test = source("test");
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.iterations = j.value("iterations", c.iterations);
    if (j.contains("vocabulary")) c.vocabulary = Vocabulary::from_name(j["vocabulary"].get<std::string>());
    c.smoothing_window = j.value("smoothing_window", c.smoothing_window);
    c.seed = j.value("seed", c.seed);
    if (j.contains("train")) {
      const auto& t = j["train"];
      c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
      c.train.epochs = t.value("epochs", c.train.epochs);
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      c.train.patience = t.value("patience", c.train.patience);
      c.train.gamma = t.value("gamma", c.train.gamma);
      if (t.contains("loss")) c.train.loss = loss_kind_from_name(t["loss"].get<std::string>());
    }
    c.selection.vocabulary = c.vocabulary;
    c.selection.rare_classes = default_rare_classes(c.vocabulary);
    if (j.contains("selection")) {
      nlohmann::json s = j["selection"];
      s["vocabulary"] = j.value("vocabulary", std::string("sevenths"));
      if (!s.contains("min_length")) s["min_length"] = c.selection.min_length;
      c.selection = selection_config_from_json(s);
    }
    if (j.contains("augment")) {
      const auto& a = j["augment"];
      if (a.contains("semitones")) {
        c.augment.min_semitones = a["semitones"].at(0).get<int>();
        c.augment.max_semitones = a["semitones"].at(1).get<int>();
      }
      c.augment.noise_sigma = a.value("noise_sigma", c.augment.noise_sigma);
      c.augment.clamp_unit = a.value("clamp_unit", c.augment.clamp_unit);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace acr
