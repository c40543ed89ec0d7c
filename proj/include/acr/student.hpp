#pragma once

// Pluggable frame classifier and the reference linear chroma model.
//
// The reference model keeps one weight row (12 chroma weights + bias) per
// chord class. A class row scores a frame at every root by rotating the frame
// down to root 0 first, so the same row serves all twelve transpositions and
// the softmax runs over (class, root) outcomes plus a single N outcome. The N
// row only sees total frame energy.

#include <acr/annotations.hpp>
#include <acr/chord.hpp>
#include <acr/error.hpp>
#include <acr/features.hpp>
#include <acr/focal.hpp>
#include <acr/rng.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace acr {

enum class LossKind : std::uint8_t { CrossEntropy, Focal };

inline std::string_view loss_kind_name(LossKind k) {
  return k == LossKind::Focal ? "focal" : "cross_entropy";
}

inline LossKind loss_kind_from_name(std::string_view name) {
  if (name == "focal") return LossKind::Focal;
  if (name == "cross_entropy" || name == "ce") return LossKind::CrossEntropy;
  throw DataError("unknown loss kind '" + std::string(name) + "'");
}

struct TrainParams {
  double learning_rate = 0.5;
  int epochs = 200;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::CrossEntropy;
  double gamma = 2.0;
  std::map<ChordClass, double> class_weights{};
  /// Early stopping patience in epochs (used only with a validation set).
  int patience = 5;
  double init_scale = 0.01;

  FocalParams focal() const {
    FocalParams f;
    f.gamma = loss == LossKind::Focal ? gamma : 0.0;
    f.class_weights = class_weights;
    return f;
  }
};

/// Interface the pipeline trains and queries.
class FrameClassifier {
 public:
  virtual ~FrameClassifier() = default;

  /// Number of softmax outcomes.
  virtual std::size_t outcome_count() const = 0;
  virtual ChordLabel outcome_label(std::size_t outcome) const = 0;
  /// Outcome for a label, or nullopt when the label is outside the model.
  virtual std::optional<std::size_t> outcome_of(const ChordLabel& label) const = 0;
  virtual std::vector<double> posteriors(const Chroma& frame) const = 0;
};

class ClassifierModel final : public FrameClassifier {
 public:
  static constexpr std::size_t kRowWidth = kChromaBins + 1;

  ClassifierModel() = default;

  /// Seeded small random weights over the scoreable classes of `vocabulary`.
  static ClassifierModel initialize(const Vocabulary& vocabulary,
                                    const TrainParams& params) {
    ClassifierModel m;
    m.vocabulary_ = vocabulary;
    m.classes_ = vocabulary.scoreable();
    m.params_ = params;
    m.weights_.assign(m.classes_.size() * kRowWidth, 0.0);
    std::mt19937_64 rng(derive_seed(params.seed, "init"));
    std::normal_distribution<double> normal(0.0, params.init_scale);
    for (double& w : m.weights_) w = normal(rng);
    m.build_outcomes();
    return m;
  }

  const std::vector<ChordClass>& classes() const { return classes_; }
  const Vocabulary& vocabulary() const { return vocabulary_; }
  const TrainParams& params() const { return params_; }
  TrainParams& params() { return params_; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& weights() { return weights_; }

  std::size_t outcome_count() const override { return outcomes_.size(); }

  ChordLabel outcome_label(std::size_t o) const override {
    const Outcome& out = outcomes_.at(o);
    if (classes_[out.row] == ChordClass::N) return ChordLabel::no_chord();
    return ChordLabel::chord(PitchClass(out.root),
                             std::string(canonical_quality(classes_[out.row])));
  }

  ChordClass outcome_class(std::size_t o) const {
    return classes_[outcomes_.at(o).row];
  }

  std::optional<std::size_t> outcome_of(const ChordLabel& label) const override {
    const ChordClass c = map_to_class(label, vocabulary_);
    if (c == ChordClass::X) return std::nullopt;
    const auto row = std::find(classes_.begin(), classes_.end(), c);
    if (row == classes_.end()) return std::nullopt;
    const std::size_t first = row_first_outcome_[static_cast<std::size_t>(row - classes_.begin())];
    return c == ChordClass::N ? first
                              : first + static_cast<std::size_t>(label.root.value());
  }

  void logits(const Chroma& x, std::vector<double>& out) const {
    out.resize(outcomes_.size());
    std::size_t o = 0;
    for (std::size_t row = 0; row < classes_.size(); ++row) {
      const double* w = &weights_[row * kRowWidth];
      if (classes_[row] == ChordClass::N) {
        double mean_w = 0.0, energy = 0.0;
        for (std::size_t i = 0; i < kChromaBins; ++i) {
          mean_w += w[i];
          energy += x[i];
        }
        out[o++] = mean_w / static_cast<double>(kChromaBins) * energy + w[kChromaBins];
        continue;
      }
      for (std::size_t r = 0; r < kChromaBins; ++r) {
        double s = w[kChromaBins];
        for (std::size_t i = 0; i < kChromaBins; ++i) {
          s += w[i] * x[(i + r) % kChromaBins];
        }
        out[o++] = s;
      }
    }
  }

  std::vector<double> posteriors(const Chroma& frame) const override {
    std::vector<double> z;
    logits(frame, z);
    return softmax(z);
  }

  /// Adds `scale * dL/dW` for one frame, given dL/dlogits.
  void accumulate_gradient(const Chroma& x, const std::vector<double>& dlogits,
                           double scale, std::vector<double>& grad) const {
    std::size_t o = 0;
    for (std::size_t row = 0; row < classes_.size(); ++row) {
      double* g = &grad[row * kRowWidth];
      if (classes_[row] == ChordClass::N) {
        double energy = 0.0;
        for (std::size_t i = 0; i < kChromaBins; ++i) energy += x[i];
        const double d = scale * dlogits[o++];
        for (std::size_t i = 0; i < kChromaBins; ++i) {
          g[i] += d * energy / static_cast<double>(kChromaBins);
        }
        g[kChromaBins] += d;
        continue;
      }
      for (std::size_t r = 0; r < kChromaBins; ++r) {
        const double d = scale * dlogits[o++];
        if (d == 0.0) continue;
        for (std::size_t i = 0; i < kChromaBins; ++i) {
          g[i] += d * x[(i + r) % kChromaBins];
        }
        g[kChromaBins] += d;
      }
    }
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["format"] = "acr-linear-chroma/1";
    auto names = nlohmann::ordered_json::array();
    for (ChordClass c : classes_) names.push_back(std::string(class_name(c)));
    j["classes"] = names;
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t row = 0; row < classes_.size(); ++row) {
      rows.push_back(std::vector<double>(weights_.begin() + row * kRowWidth,
                                         weights_.begin() + (row + 1) * kRowWidth));
    }
    j["weights"] = rows;
    nlohmann::ordered_json p;
    p["learning_rate"] = params_.learning_rate;
    p["epochs"] = params_.epochs;
    p["batch_size"] = params_.batch_size;
    p["seed"] = params_.seed;
    p["loss"] = std::string(loss_kind_name(params_.loss));
    p["gamma"] = params_.gamma;
    p["patience"] = params_.patience;
    auto cw = nlohmann::ordered_json::object();
    for (const auto& [c, w] : params_.class_weights) cw[std::string(class_name(c))] = w;
    p["class_weights"] = cw;
    j["params"] = p;
    return j;
  }

  static ClassifierModel from_json(const nlohmann::ordered_json& j) {
    if (j.value("format", "") != "acr-linear-chroma/1") {
      throw DataError("unsupported model format");
    }
    ClassifierModel m;
    std::vector<ChordClass> classes;
    for (const auto& name : j.at("classes")) {
      auto c = class_from_name(name.get<std::string>());
      if (!c || *c == ChordClass::X) throw DataError("invalid model class");
      classes.push_back(*c);
    }
    m.vocabulary_ = Vocabulary(classes);
    m.classes_ = m.vocabulary_.scoreable();
    if (m.classes_ != classes) throw DataError("model classes not in canonical order");
    const auto& rows = j.at("weights");
    if (rows.size() != classes.size()) throw DataError("model weight rows mismatch");
    for (const auto& row : rows) {
      if (row.size() != kRowWidth) throw DataError("model weight row width mismatch");
      for (const auto& w : row) {
        const double v = w.get<double>();
        if (!std::isfinite(v)) throw DataError("non-finite model weight");
        m.weights_.push_back(v);
      }
    }
    const auto& p = j.at("params");
    m.params_.learning_rate = p.at("learning_rate").get<double>();
    m.params_.epochs = p.at("epochs").get<int>();
    m.params_.batch_size = p.at("batch_size").get<std::size_t>();
    m.params_.seed = p.at("seed").get<std::uint64_t>();
    m.params_.loss = loss_kind_from_name(p.at("loss").get<std::string>());
    m.params_.gamma = p.at("gamma").get<double>();
    m.params_.patience = p.at("patience").get<int>();
    for (const auto& [name, w] : p.at("class_weights").items()) {
      auto c = class_from_name(name);
      if (!c) throw DataError("unknown class weight '" + name + "'");
      m.params_.class_weights[*c] = w.get<double>();
    }
    m.build_outcomes();
    return m;
  }

  bool operator==(const ClassifierModel& o) const {
    return classes_ == o.classes_ && weights_ == o.weights_;
  }

 private:
  struct Outcome {
    std::size_t row;
    int root;
  };

  void build_outcomes() {
    outcomes_.clear();
    row_first_outcome_.clear();
    for (std::size_t row = 0; row < classes_.size(); ++row) {
      row_first_outcome_.push_back(outcomes_.size());
      if (classes_[row] == ChordClass::N) {
        outcomes_.push_back({row, 0});
      } else {
        for (int r = 0; r < 12; ++r) outcomes_.push_back({row, r});
      }
    }
  }

  Vocabulary vocabulary_;
  std::vector<ChordClass> classes_;
  std::vector<double> weights_;
  TrainParams params_;
  std::vector<Outcome> outcomes_;
  std::vector<std::size_t> row_first_outcome_;
};

/// Frames flattened for training: feature, outcome index, class.
struct FrameSet {
  std::vector<Chroma> x;
  std::vector<std::size_t> target;
  std::vector<ChordClass> cls;

  std::size_t size() const { return x.size(); }
};

/// Frames whose labels fall outside the model (X) are dropped.
inline FrameSet flatten(const ClassifierModel& model,
                        const std::vector<LabeledTrack>& corpus) {
  FrameSet set;
  for (const LabeledTrack& t : corpus) {
    for (const Chroma& f : t.features.frames) {
      if (f.size() != kChromaBins) throw DataError("frame dimension mismatch");
    }
    t.features.validate();
    const auto labels = frame_labels(t.features, t.labels);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto o = model.outcome_of(labels[i]);
      if (!o) continue;
      set.x.push_back(t.features.frames[i]);
      set.target.push_back(*o);
      set.cls.push_back(model.outcome_class(*o));
    }
  }
  return set;
}

inline double corpus_loss(const ClassifierModel& model, const FrameSet& frames,
                          const FocalParams& focal,
                          FocalDiagnostics* diagnostics = nullptr) {
  if (frames.size() == 0) return 0.0;
  std::vector<FrameDistribution> dists;
  dists.reserve(frames.size());
  for (const Chroma& x : frames.x) dists.emplace_back(model.posteriors(x));
  return sequence_loss(dists, frames.target, focal, frames.cls, diagnostics);
}

struct TrainResult {
  ClassifierModel model;
  double final_loss = 0.0;
  double validation_loss = 0.0;
  int epochs_run = 0;
  int best_epoch = 0;
  std::size_t clamped = 0;
};

/// Mini-batch gradient descent on sequence_loss. Deterministic given
/// params.seed. With a validation corpus, keeps the weights of the epoch with
/// the lowest validation loss and stops after `patience` epochs without
/// improvement.
inline TrainResult train(const ClassifierModel& init,
                         const std::vector<LabeledTrack>& corpus,
                         const TrainParams& params,
                         const std::vector<LabeledTrack>* validation = nullptr) {
  if (corpus.empty()) throw DataError("train: empty corpus");
  if (params.epochs < 0) throw DataError("train: negative epoch count");
  if (params.batch_size == 0) throw DataError("train: batch size must be > 0");
  const FocalParams focal = params.focal();
  focal.validate();

  ClassifierModel model = init;
  model.params() = params;
  const FrameSet frames = flatten(model, corpus);
  if (frames.size() == 0) throw DataError("train: corpus has no usable frames");
  FrameSet val_frames;
  if (validation) val_frames = flatten(model, *validation);
  const bool early_stop = validation && val_frames.size() > 0;

  TrainResult result{model};
  double best_val = early_stop ? corpus_loss(model, val_frames, focal)
                               : std::numeric_limits<double>::infinity();
  int since_best = 0;

  std::vector<std::size_t> order(frames.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(params.seed, "shuffle"));
  std::vector<double> grad(model.weights().size());
  std::vector<double> z, dz;

  for (int epoch = 1; epoch <= params.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < order.size(); b += params.batch_size) {
      const std::size_t e = std::min(order.size(), b + params.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = b; k < e; ++k) {
        const std::size_t i = order[k];
        model.logits(frames.x[i], z);
        const std::vector<double> p = softmax(z);
        dz.assign(p.size(), 0.0);
        if (params.loss == LossKind::CrossEntropy) {
          for (std::size_t j = 0; j < p.size(); ++j) dz[j] = p[j];
          dz[frames.target[i]] -= 1.0;
        } else {
          const double g = focal_grad_scale(p, frames.target[i], focal.gamma);
          for (std::size_t j = 0; j < p.size(); ++j) {
            dz[j] = g * ((j == frames.target[i] ? 1.0 : 0.0) - p[j]);
          }
        }
        model.accumulate_gradient(frames.x[i], dz, focal.weight(frames.cls[i]),
                                  grad);
      }
      const double step = params.learning_rate / static_cast<double>(e - b);
      auto& w = model.weights();
      for (std::size_t k = 0; k < w.size(); ++k) w[k] -= step * grad[k];
    }
    result.epochs_run = epoch;

    if (early_stop) {
      const double val = corpus_loss(model, val_frames, focal);
      if (val < best_val) {
        best_val = val;
        result.model = model;
        result.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= params.patience) {
        break;
      }
    }
  }
  if (!early_stop) {
    result.model = model;
    result.best_epoch = result.epochs_run;
  }
  FocalDiagnostics diag;
  result.final_loss = corpus_loss(result.model, frames, focal, &diag);
  result.clamped = diag.clamped;
  result.validation_loss = early_stop ? best_val : 0.0;
  return result;
}

/// Emitted segments with per-segment confidence.
struct PredictedSegments {
  TimedLabelSequence sequence;
  std::vector<double> confidence;
};

namespace detail {

struct Run {
  std::size_t label;
  std::size_t length;
};

inline std::vector<Run> to_runs(const std::vector<std::size_t>& labels) {
  std::vector<Run> runs;
  for (std::size_t l : labels) {
    if (!runs.empty() && runs.back().label == l) {
      ++runs.back().length;
    } else {
      runs.push_back({l, 1});
    }
  }
  return runs;
}

}  // namespace detail

/// Removes label runs shorter than (window + 1) / 2 frames, the runs a
/// median filter of that width would erase. The shortest run (leftmost on
/// ties) is absorbed into its longer neighbour (left on ties) until every run
/// is long enough. The absorption order does not depend on the window, so a
/// wider window continues the same sequence of merges and never yields more
/// runs.
inline std::vector<std::size_t> smooth_labels(std::vector<std::size_t> labels,
                                              std::size_t window) {
  if (window == 0 || window % 2 == 0) {
    throw DataError("smoothing window must be odd and >= 1");
  }
  const std::size_t min_run = (window + 1) / 2;
  auto runs = detail::to_runs(labels);
  while (runs.size() > 1) {
    std::size_t shortest = 0;
    for (std::size_t k = 1; k < runs.size(); ++k) {
      if (runs[k].length < runs[shortest].length) shortest = k;
    }
    if (runs[shortest].length >= min_run) break;
    std::size_t target;
    if (shortest == 0) {
      target = 1;
    } else if (shortest + 1 == runs.size()) {
      target = shortest - 1;
    } else {
      target = runs[shortest + 1].length > runs[shortest - 1].length
                   ? shortest + 1
                   : shortest - 1;
    }
    runs[target].length += runs[shortest].length;
    runs.erase(runs.begin() + static_cast<std::ptrdiff_t>(shortest));
    // Coalesce if the absorber now touches a run with the same label.
    for (std::size_t k = 1; k < runs.size();) {
      if (runs[k].label == runs[k - 1].label) {
        runs[k - 1].length += runs[k].length;
        runs.erase(runs.begin() + static_cast<std::ptrdiff_t>(k));
      } else {
        ++k;
      }
    }
  }
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (const auto& r : runs) out.insert(out.end(), r.length, r.label);
  return out;
}

/// Per-frame argmax, smoothed, merged into constant runs. Segment confidence
/// is the mean posterior of the emitted label over the segment's frames.
inline PredictedSegments predict_segments(const FrameClassifier& model,
                                          const FeatureTrack& track,
                                          std::size_t window) {
  if (track.frames.empty()) {
    throw DataError("predict_segments: empty track '" + track.track_id + "'");
  }
  track.validate();
  std::vector<std::vector<double>> post;
  post.reserve(track.frames.size());
  std::vector<std::size_t> argmax;
  argmax.reserve(track.frames.size());
  for (const Chroma& f : track.frames) {
    post.push_back(model.posteriors(f));
    const auto& p = post.back();
    argmax.push_back(static_cast<std::size_t>(
        std::max_element(p.begin(), p.end()) - p.begin()));
  }
  const auto smoothed = smooth_labels(std::move(argmax), window);

  std::vector<Segment> segments;
  std::vector<double> confidence;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= smoothed.size(); ++i) {
    if (i < smoothed.size() && smoothed[i] == smoothed[begin]) continue;
    double sum = 0.0;
    for (std::size_t k = begin; k < i; ++k) sum += post[k][smoothed[begin]];
    segments.push_back({{static_cast<double>(begin) / track.frame_rate,
                         static_cast<double>(i) / track.frame_rate},
                        model.outcome_label(smoothed[begin])});
    confidence.push_back(sum / static_cast<double>(i - begin));
    begin = i;
  }
  return {TimedLabelSequence(track.track_id, std::move(segments)),
          std::move(confidence)};
}

}  // namespace acr
