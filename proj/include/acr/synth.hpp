#pragma once

// Seeded, imbalanced synthetic corpora: binary chord templates plus Gaussian
// frame noise, with ground-truth .lab annotations.

#include <acr/annotations.hpp>
#include <acr/chord.hpp>
#include <acr/error.hpp>
#include <acr/features.hpp>
#include <acr/rng.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace acr {

/// Energy of every bin in the no-chord template.
inline constexpr double kNoChordLevel = 0.1;

/// Chord tones relative to the root, per class.
inline std::vector<int> chord_intervals(ChordClass c) {
  switch (c) {
    case ChordClass::Maj: return {0, 4, 7};
    case ChordClass::Min: return {0, 3, 7};
    case ChordClass::Dom7: return {0, 4, 7, 10};
    case ChordClass::Min7: return {0, 3, 7, 10};
    case ChordClass::Maj7: return {0, 4, 7, 11};
    case ChordClass::Dim: return {0, 3, 6};
    case ChordClass::Hdim7: return {0, 3, 6, 10};
    case ChordClass::Aug: return {0, 4, 8};
    case ChordClass::Sus: return {0, 5, 7};
    default: return {};
  }
}

/// 1.0 at chord tones, 0.0 elsewhere; N is a uniform low-energy vector.
inline Chroma chord_template(ChordClass c, PitchClass root = PitchClass(0)) {
  Chroma t{};
  if (c == ChordClass::N) {
    t.fill(kNoChordLevel);
    return t;
  }
  for (int i : chord_intervals(c)) {
    t[static_cast<std::size_t>(root.shifted(i).value())] = 1.0;
  }
  return t;
}

inline Chroma chord_template(const ChordLabel& label, const Vocabulary& vocabulary) {
  const ChordClass c = map_to_class(label, vocabulary);
  return chord_template(c, label.is_chord() ? label.root : PitchClass(0));
}

struct Range {
  double min = 0.0;
  double max = 0.0;
};

/// Shares of the seven reported chord types in the imbalanced training set;
/// the remainder is no-chord.
inline std::map<ChordClass, double> imbalanced_train_distribution() {
  return {{ChordClass::Maj, 0.63},   {ChordClass::Min, 0.161},
          {ChordClass::Dom7, 0.069}, {ChordClass::Min7, 0.026},
          {ChordClass::Maj7, 0.01},  {ChordClass::Dim, 0.004},
          {ChordClass::Hdim7, 0.002}, {ChordClass::N, 0.098}};
}

/// Shares of the same types in the test set; remainder is no-chord.
inline std::map<ChordClass, double> imbalanced_test_distribution() {
  return {{ChordClass::Maj, 0.45},   {ChordClass::Min, 0.15},
          {ChordClass::Dom7, 0.072}, {ChordClass::Min7, 0.138},
          {ChordClass::Maj7, 0.074}, {ChordClass::Dim, 0.008},
          {ChordClass::Hdim7, 0.004}, {ChordClass::N, 0.104}};
}

struct CorpusSpec {
  std::size_t tracks = 10;
  Range track_length{60.0, 120.0};
  std::map<ChordClass, double> distribution = imbalanced_train_distribution();
  Range chord_duration{1.0, 4.0};
  double noise_sigma = 0.0;
  double frame_rate = 10.0;
  std::uint64_t seed = 0;
  /// Track ids are `<prefix><index>`; distinct prefixes keep corpora disjoint.
  std::string track_prefix = "track";

  void validate() const {
    if (tracks == 0) throw DataError("corpus spec: need at least one track");
    if (!(track_length.min > 0.0) || track_length.max < track_length.min) {
      throw DataError("corpus spec: invalid track length range");
    }
    if (!(chord_duration.min > 0.0) || chord_duration.max < chord_duration.min) {
      throw DataError("corpus spec: invalid chord duration range");
    }
    if (chord_duration.min > track_length.max) {
      throw DataError("corpus spec: chord duration exceeds track length");
    }
    if (!(frame_rate > 0.0)) throw DataError("corpus spec: frame rate must be > 0");
    if (!(noise_sigma >= 0.0)) throw DataError("corpus spec: noise sigma must be >= 0");
    double sum = 0.0;
    for (const auto& [c, p] : distribution) {
      if (!(p >= 0.0)) throw DataError("corpus spec: negative class share");
      if (c == ChordClass::X) throw DataError("corpus spec: X is not drawable");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw DataError("corpus spec: class shares must sum to 1");
    }
  }
};

inline nlohmann::ordered_json to_json(const CorpusSpec& spec) {
  nlohmann::ordered_json j;
  j["tracks"] = spec.tracks;
  j["track_length"] = {spec.track_length.min, spec.track_length.max};
  auto dist = nlohmann::ordered_json::object();
  for (const auto& [c, p] : spec.distribution) dist[std::string(class_name(c))] = p;
  j["distribution"] = dist;
  j["chord_duration"] = {spec.chord_duration.min, spec.chord_duration.max};
  j["noise_sigma"] = spec.noise_sigma;
  j["frame_rate"] = spec.frame_rate;
  j["seed"] = spec.seed;
  j["track_prefix"] = spec.track_prefix;
  return j;
}

/// Missing keys keep their defaults. `distribution` may be "imbalanced_train",
/// "imbalanced_test" or a class → share object.
inline CorpusSpec corpus_spec_from_json(const nlohmann::json& j) {
  CorpusSpec s;
  auto range = [](const nlohmann::json& v) {
    if (!v.is_array() || v.size() != 2) throw DataError("range must be [min, max]");
    return Range{v[0].get<double>(), v[1].get<double>()};
  };
  try {
    if (j.contains("tracks")) s.tracks = j["tracks"].get<std::size_t>();
    if (j.contains("track_length")) s.track_length = range(j["track_length"]);
    if (j.contains("chord_duration")) s.chord_duration = range(j["chord_duration"]);
    if (j.contains("noise_sigma")) s.noise_sigma = j["noise_sigma"].get<double>();
    if (j.contains("frame_rate")) s.frame_rate = j["frame_rate"].get<double>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("track_prefix")) s.track_prefix = j["track_prefix"].get<std::string>();
    if (j.contains("distribution")) {
      const auto& d = j["distribution"];
      if (d.is_string()) {
        if (d == "imbalanced_train") {
          s.distribution = imbalanced_train_distribution();
        } else if (d == "imbalanced_test") {
          s.distribution = imbalanced_test_distribution();
        } else {
          throw DataError("unknown distribution preset '" + d.get<std::string>() + "'");
        }
      } else {
        s.distribution.clear();
        for (const auto& [name, p] : d.items()) {
          auto c = class_from_name(name);
          if (!c) throw DataError("unknown class '" + name + "' in distribution");
          s.distribution[*c] = p.get<double>();
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("corpus spec: ") + e.what());
  }
  s.validate();
  return s;
}

/// i.i.d. chords with uniform roots and durations, quantized to whole frames,
/// rendered as templates plus clamped Gaussian noise. Every frame is covered
/// by exactly one label.
inline std::vector<LabeledTrack> generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  std::vector<ChordClass> classes;
  std::vector<double> weights;
  for (const auto& [c, p] : spec.distribution) {
    if (p > 0.0) {
      classes.push_back(c);
      weights.push_back(p);
    }
  }
  const auto frames_of = [&](double seconds) {
    return std::max<long>(1, std::lround(seconds * spec.frame_rate));
  };

  std::vector<LabeledTrack> corpus;
  corpus.reserve(spec.tracks);
  for (std::size_t t = 0; t < spec.tracks; ++t) {
    const std::string id = spec.track_prefix + std::to_string(t);
    std::mt19937_64 rng(derive_seed(spec.seed, id));
    std::uniform_real_distribution<double> length(spec.track_length.min,
                                                  spec.track_length.max);
    std::uniform_real_distribution<double> duration(spec.chord_duration.min,
                                                    spec.chord_duration.max);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::uniform_int_distribution<int> root(0, 11);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0 ? spec.noise_sigma : 1.0);

    const long total_frames = frames_of(length(rng));
    LabeledTrack track;
    track.features.track_id = id;
    track.features.frame_rate = spec.frame_rate;
    std::vector<Segment> segments;
    long frame = 0;
    while (frame < total_frames) {
      const long n = std::min(frames_of(duration(rng)), total_frames - frame);
      const ChordClass c = classes[pick(rng)];
      const int r = root(rng);
      ChordLabel label = c == ChordClass::N
                             ? ChordLabel::no_chord()
                             : ChordLabel::chord(PitchClass(r),
                                                 std::string(canonical_quality(c)));
      const Chroma tmpl = chord_template(c, PitchClass(r));
      for (long k = 0; k < n; ++k) {
        Chroma f = tmpl;
        if (spec.noise_sigma > 0.0) {
          for (double& v : f) v = std::clamp(v + noise(rng), 0.0, 1.0);
        }
        track.features.frames.push_back(f);
      }
      segments.push_back({{static_cast<double>(frame) / spec.frame_rate,
                           static_cast<double>(frame + n) / spec.frame_rate},
                          std::move(label)});
      frame += n;
    }
    track.labels = TimedLabelSequence(id, std::move(segments));
    corpus.push_back(std::move(track));
  }
  return corpus;
}

/// The annotations of a corpus, in track order.
inline std::vector<TimedLabelSequence> corpus_labels(
    const std::vector<LabeledTrack>& corpus) {
  std::vector<TimedLabelSequence> out;
  out.reserve(corpus.size());
  for (const auto& t : corpus) out.push_back(t.labels);
  return out;
}

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace detail

/// One row per frame, 12 comma-separated values.
inline std::string features_csv(const FeatureTrack& track) {
  std::string out;
  char buf[32];
  for (const Chroma& f : track.frames) {
    for (std::size_t i = 0; i < kChromaBins; ++i) {
      std::snprintf(buf, sizeof buf, i ? ",%.6f" : "%.6f", f[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

inline FeatureTrack read_features_csv(std::string_view content, std::string track_id,
                                      double frame_rate) {
  FeatureTrack track{std::move(track_id), frame_rate, {}};
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Chroma f{};
    std::size_t col = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string cell = line.substr(start, comma == std::string::npos
                                                      ? std::string::npos
                                                      : comma - start);
      if (col >= kChromaBins) throw DataError("expected 12 columns", line_no);
      char* end = nullptr;
      f[col++] = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size()) {
        throw DataError("non-numeric feature value '" + cell + "'", line_no);
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (col != kChromaBins) throw DataError("expected 12 columns", line_no);
    track.frames.push_back(f);
  }
  return track;
}

/// Writes `<id>.csv` + `<id>.lab` per track and `manifest.json`.
inline void save_corpus(const std::filesystem::path& dir,
                        const std::vector<LabeledTrack>& corpus,
                        const nlohmann::ordered_json& spec_echo = {}) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["format"] = "acr-corpus/1";
  manifest["spec"] = spec_echo;
  if (spec_echo.is_object() && spec_echo.contains("seed")) manifest["seed"] = spec_echo["seed"];
  manifest["frame_rate"] = corpus.empty() ? 10.0 : corpus.front().features.frame_rate;
  auto ids = nlohmann::ordered_json::array();
  for (const auto& t : corpus) {
    ids.push_back(t.features.track_id);
    detail::write_file(dir / (t.features.track_id + ".csv"), features_csv(t.features));
    detail::write_file(dir / (t.features.track_id + ".lab"), write_lab(t.labels));
  }
  manifest["tracks"] = ids;
  detail::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline std::vector<LabeledTrack> load_corpus(const std::filesystem::path& dir) {
  const auto manifest = nlohmann::json::parse(detail::read_file(dir / "manifest.json"),
                                              nullptr, false);
  if (manifest.is_discarded() || !manifest.contains("tracks")) {
    throw DataError("invalid corpus manifest in '" + dir.string() + "'");
  }
  const double frame_rate = manifest.value("frame_rate", 10.0);
  std::vector<LabeledTrack> corpus;
  for (const auto& id_json : manifest["tracks"]) {
    const std::string id = id_json.get<std::string>();
    LabeledTrack t;
    try {
      t.features = read_features_csv(detail::read_file(dir / (id + ".csv")), id, frame_rate);
      t.labels = read_lab(detail::read_file(dir / (id + ".lab")), id);
    } catch (const DataError& e) {
      throw DataError("track '" + id + "': " + e.what());
    }
    corpus.push_back(std::move(t));
  }
  return corpus;
}

}  // namespace acr
