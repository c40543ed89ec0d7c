#pragma once

// Balanced pseudo-label excerpt selection for sequential data.
//
// For each rare chord class, pseudo-labeled segments of that class are ranked
// by confidence. Each one seeds a fixed-length context window centred on it
// (shifted to stay inside the track), and windows are unioned per track. A
// class stops once the time its windows newly covered reaches the desired
// duration: the labeled set's duration divided by the number of rare classes
// present in the pool.

#include <acr/annotations.hpp>
#include <acr/chord.hpp>
#include <acr/error.hpp>
#include <acr/metrics.hpp>
#include <acr/student.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace acr {

/// Every vocabulary class except maj, min, N (and X).
inline std::vector<ChordClass> default_rare_classes(const Vocabulary& vocabulary) {
  std::vector<ChordClass> out;
  for (ChordClass c : vocabulary.scoreable()) {
    if (c != ChordClass::Maj && c != ChordClass::Min && c != ChordClass::N) {
      out.push_back(c);
    }
  }
  return out;
}

struct SelectionConfig {
  double min_length = 8.0;
  std::vector<ChordClass> rare_classes =
      default_rare_classes(Vocabulary::sevenths());
  /// Only segments with confidence strictly above this are candidates.
  double confidence_threshold = 0.0;
  /// Duration of the labeled training set, in seconds.
  double labeled_total = 0.0;
  Vocabulary vocabulary = Vocabulary::sevenths();

  void validate() const {
    if (!(min_length > 0.0)) throw DataError("selection: minLength must be > 0");
    if (rare_classes.empty()) throw DataError("selection: no rare classes configured");
    if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
      throw DataError("selection: confidence threshold must lie in [0, 1]");
    }
    if (!(labeled_total >= 0.0)) throw DataError("selection: labeled total must be >= 0");
  }
};

inline double compute_desired_duration(double labeled_total, std::size_t rare_present) {
  if (rare_present == 0) throw DataError("no rare classes in pseudolabels");
  return labeled_total / static_cast<double>(rare_present);
}

/// A pseudo-labeled segment that seeded a window.
struct SelectionSeed {
  std::string track;
  Interval interval;
  ChordClass cls = ChordClass::X;
  double confidence = 0.0;
  bool operator==(const SelectionSeed&) const = default;
};

struct Excerpt {
  Interval interval;
  std::vector<SelectionSeed> seeds;
  bool operator==(const Excerpt&) const = default;
};

/// Per track (ordered by id): merged, sorted, disjoint excerpts.
struct ExcerptDataset {
  std::map<std::string, std::vector<Excerpt>> tracks;

  bool empty() const {
    for (const auto& [id, ex] : tracks) {
      if (!ex.empty()) return false;
    }
    return true;
  }
  double total_duration() const {
    double total = 0.0;
    for (const auto& [id, ex] : tracks) {
      for (const auto& e : ex) total += e.interval.length();
    }
    return total;
  }
  bool operator==(const ExcerptDataset&) const = default;
};

struct ClassSelection {
  ChordClass cls = ChordClass::X;
  double desired_duration = 0.0;
  double selected_duration = 0.0;
  std::size_t seeds_used = 0;
  std::size_t candidates = 0;
  bool shortfall = false;
  bool operator==(const ClassSelection&) const = default;
};

/// Rare classes in processing order.
struct SelectionReport {
  std::vector<ClassSelection> classes;

  const ClassSelection* find(ChordClass c) const {
    for (const auto& s : classes) {
      if (s.cls == c) return &s;
    }
    return nullptr;
  }
  bool operator==(const SelectionReport&) const = default;
};

struct SelectionResult {
  ExcerptDataset dataset;
  SelectionReport report;
  /// Seeds consumed, per class, in consumption order.
  std::map<ChordClass, std::vector<SelectionSeed>> consumed;
};

/// Window of `length` centred on `seed`, shifted to fit [0, track_duration].
inline Interval centered_window(Interval seed, double length, double track_duration) {
  if (length >= track_duration) return {0.0, track_duration};
  const double mid = 0.5 * (seed.start + seed.end);
  double start = mid - 0.5 * length;
  if (start < 0.0) start = 0.0;
  if (start + length > track_duration) start = track_duration - length;
  return {start, start + length};
}

inline SelectionResult select_balanced_subset(
    const std::vector<PredictedSegments>& pseudolabels,
    const std::map<std::string, double>& track_durations,
    const SelectionConfig& config) {
  config.validate();

  std::map<std::string, double> durations;
  std::map<ChordClass, double> pool_seconds;
  std::map<ChordClass, std::vector<SelectionSeed>> candidates;
  for (const auto& track : pseudolabels) {
    const auto& segs = track.sequence.segments();
    if (track.confidence.size() != segs.size()) {
      throw DataError("selection: confidence count mismatch for track '" +
                      track.sequence.track_id() + "'");
    }
    const std::string& id = track.sequence.track_id();
    if (durations.count(id)) {
      throw DataError("selection: duplicate pseudo-label track '" + id + "'");
    }
    auto known = track_durations.find(id);
    durations[id] = known != track_durations.end() ? known->second
                                                    : track.sequence.duration();
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const double conf = track.confidence[i];
      if (!(conf >= 0.0 && conf <= 1.0)) {
        throw DataError("selection: confidence outside [0, 1] in track '" + id + "'");
      }
      if (segs[i].interval.end > durations[id]) {
        throw DataError("selection: segment beyond track end in '" + id + "'");
      }
      const ChordClass c = map_to_class(segs[i].label, config.vocabulary);
      pool_seconds[c] += segs[i].interval.length();
      if (conf > config.confidence_threshold) {
        candidates[c].push_back({id, segs[i].interval, c, conf});
      }
    }
  }

  // Rarest first by pool duration; absent classes last; ties by class order.
  std::vector<ChordClass> order = config.rare_classes;
  std::sort(order.begin(), order.end());
  order.erase(std::unique(order.begin(), order.end()), order.end());
  std::stable_sort(order.begin(), order.end(), [&](ChordClass a, ChordClass b) {
    const double da = pool_seconds.count(a) ? pool_seconds[a] : 0.0;
    const double db = pool_seconds.count(b) ? pool_seconds[b] : 0.0;
    if ((da > 0.0) != (db > 0.0)) return da > 0.0;
    return da < db;
  });

  std::size_t present = 0;
  for (ChordClass c : order) {
    if (pool_seconds.count(c) && pool_seconds[c] > 0.0) ++present;
  }
  const double desired = present > 0
                             ? compute_desired_duration(config.labeled_total, present)
                             : config.labeled_total;

  SelectionResult result;
  std::map<std::string, IntervalSet> covered;
  std::map<std::string, std::vector<std::pair<Interval, SelectionSeed>>> windows;

  for (ChordClass c : order) {
    ClassSelection cs;
    cs.cls = c;
    cs.desired_duration = desired;
    auto& pool = candidates[c];
    std::sort(pool.begin(), pool.end(), [](const SelectionSeed& a, const SelectionSeed& b) {
      return std::tie(b.confidence, a.track, a.interval.start) <
             std::tie(a.confidence, b.track, b.interval.start);
    });
    cs.candidates = pool.size();
    for (const SelectionSeed& seed : pool) {
      const Interval w = centered_window(seed.interval, config.min_length,
                                         durations.at(seed.track));
      cs.selected_duration += covered[seed.track].insert(w);
      windows[seed.track].push_back({w, seed});
      result.consumed[c].push_back(seed);
      ++cs.seeds_used;
      if (cs.selected_duration >= cs.desired_duration) break;
    }
    cs.shortfall = cs.selected_duration < cs.desired_duration;
    result.report.classes.push_back(cs);
  }

  for (const auto& [id, set] : covered) {
    auto& excerpts = result.dataset.tracks[id];
    for (const Interval& iv : set.intervals()) excerpts.push_back({iv, {}});
    for (const auto& [w, seed] : windows[id]) {
      auto it = std::find_if(excerpts.begin(), excerpts.end(), [&](const Excerpt& e) {
        return e.interval.start <= w.start && w.end <= e.interval.end;
      });
      it->seeds.push_back(seed);
    }
  }
  return result;
}

/// Class shares of pseudo-label time inside the selected excerpts.
inline std::map<ChordClass, double> distribution_of_selection(
    const ExcerptDataset& dataset, const std::vector<PredictedSegments>& pseudolabels,
    const Vocabulary& vocabulary) {
  if (dataset.empty()) throw DataError("distribution_of_selection: empty dataset");
  std::map<ChordClass, double> seconds;
  double total = 0.0;
  for (const auto& track : pseudolabels) {
    auto it = dataset.tracks.find(track.sequence.track_id());
    if (it == dataset.tracks.end()) continue;
    std::vector<Interval> covered;
    for (const auto& e : it->second) covered.push_back(e.interval);
    for (const Segment& s : track.sequence.segments()) {
      const ChordClass c = map_to_class(s.label, vocabulary);
      if (c == ChordClass::X) continue;
      const double overlap = overlap_measure(covered, s.interval);
      if (overlap > 0.0) {
        seconds[c] += overlap;
        total += overlap;
      }
    }
  }
  if (!(total > 0.0)) throw DataError("distribution_of_selection: no labeled time selected");
  for (auto& [c, v] : seconds) v /= total;
  return seconds;
}

/// One JSON object per line: track, start, end, label, confidence.
inline std::string pseudolabels_to_jsonl(const std::vector<PredictedSegments>& tracks) {
  std::string out;
  for (const auto& t : tracks) {
    const auto& segs = t.sequence.segments();
    for (std::size_t i = 0; i < segs.size(); ++i) {
      nlohmann::ordered_json j;
      j["track"] = t.sequence.track_id();
      j["start"] = segs[i].interval.start;
      j["end"] = segs[i].interval.end;
      j["label"] = to_string(segs[i].label);
      j["confidence"] = t.confidence[i];
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

/// Groups lines by track (ordered by id); errors carry the line number.
inline std::vector<PredictedSegments> pseudolabels_from_jsonl(std::string_view content) {
  struct Row {
    Segment segment;
    double confidence;
  };
  std::map<std::string, std::vector<Row>> rows;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DataError("invalid JSON", line_no);
    try {
      Row r{{{j.at("start").get<double>(), j.at("end").get<double>()},
             parse_chord_label(j.at("label").get<std::string>())},
            j.at("confidence").get<double>()};
      if (!r.segment.interval.valid()) throw DataError("invalid interval", line_no);
      if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) {
        throw DataError("confidence outside [0, 1]", line_no);
      }
      rows[j.at("track").get<std::string>()].push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(e.what(), line_no);
    } catch (const ParseError& e) {
      throw DataError(e.what(), line_no);
    }
  }
  std::vector<PredictedSegments> out;
  for (auto& [track, list] : rows) {
    std::stable_sort(list.begin(), list.end(), [](const Row& a, const Row& b) {
      return a.segment.interval.start < b.segment.interval.start;
    });
    std::vector<Segment> segs;
    std::vector<double> conf;
    for (auto& r : list) {
      segs.push_back(std::move(r.segment));
      conf.push_back(r.confidence);
    }
    out.push_back({TimedLabelSequence(track, std::move(segs)), std::move(conf)});
  }
  return out;
}

inline nlohmann::ordered_json to_json(const ExcerptDataset& dataset) {
  nlohmann::ordered_json j;
  j["format"] = "acr-excerpts/1";
  auto tracks = nlohmann::ordered_json::object();
  for (const auto& [id, excerpts] : dataset.tracks) {
    auto list = nlohmann::ordered_json::array();
    for (const auto& e : excerpts) {
      nlohmann::ordered_json ej;
      ej["start"] = e.interval.start;
      ej["end"] = e.interval.end;
      auto seeds = nlohmann::ordered_json::array();
      for (const auto& s : e.seeds) {
        nlohmann::ordered_json sj;
        sj["start"] = s.interval.start;
        sj["end"] = s.interval.end;
        sj["class"] = std::string(class_name(s.cls));
        sj["confidence"] = s.confidence;
        seeds.push_back(sj);
      }
      ej["seeds"] = seeds;
      list.push_back(ej);
    }
    tracks[id] = list;
  }
  j["tracks"] = tracks;
  return j;
}

inline nlohmann::ordered_json to_json(const SelectionReport& report) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : report.classes) {
    nlohmann::ordered_json j;
    j["class"] = std::string(class_name(c.cls));
    j["desired_duration"] = c.desired_duration;
    j["selected_duration"] = c.selected_duration;
    j["seeds_used"] = c.seeds_used;
    j["candidates"] = c.candidates;
    j["shortfall"] = c.shortfall;
    arr.push_back(j);
  }
  return arr;
}

inline std::string selection_report_csv(const SelectionReport& report) {
  std::string out =
      "class,desired_duration,selected_duration,seeds_used,candidates,shortfall\n";
  char buf[160];
  for (const auto& c : report.classes) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%zu,%zu,%s\n",
                  std::string(class_name(c.cls)).c_str(), c.desired_duration,
                  c.selected_duration, c.seeds_used, c.candidates,
                  c.shortfall ? "true" : "false");
    out += buf;
  }
  return out;
}

/// Reads the `select` configuration file. `rare_classes` defaults to the
/// vocabulary's classes other than maj, min and N.
inline SelectionConfig selection_config_from_json(const nlohmann::json& j) {
  SelectionConfig cfg;
  try {
    if (j.contains("vocabulary")) {
      cfg.vocabulary = Vocabulary::from_name(j["vocabulary"].get<std::string>());
    }
    cfg.rare_classes = default_rare_classes(cfg.vocabulary);
    if (!j.contains("min_length")) throw DataError("selection config: min_length is required");
    cfg.min_length = j["min_length"].get<double>();
    if (j.contains("rare_classes")) {
      cfg.rare_classes.clear();
      for (const auto& name : j["rare_classes"]) {
        auto c = class_from_name(name.get<std::string>());
        if (!c || *c == ChordClass::X) {
          throw DataError("selection config: invalid rare class '" +
                          name.get<std::string>() + "'");
        }
        cfg.rare_classes.push_back(*c);
      }
    }
    cfg.confidence_threshold = j.value("confidence_threshold", 0.0);
    cfg.labeled_total = j.value("labeled_total", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("selection config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

}  // namespace acr
