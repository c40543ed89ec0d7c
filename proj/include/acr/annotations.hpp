#pragma once

// Timed label sequences, .lab ingestion, and half-open interval algebra.

#include <acr/chord.hpp>
#include <acr/error.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace acr {

/// Half-open [start, end) in seconds.
struct Interval {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }
  bool valid() const {
    return std::isfinite(start) && std::isfinite(end) && start >= 0.0 &&
           end > start;
  }
  bool operator==(const Interval&) const = default;
};

struct Segment {
  Interval interval;
  ChordLabel label;
  bool operator==(const Segment&) const = default;
};

/// Sorted, non-overlapping labeled segments for one track. Gaps are allowed.
class TimedLabelSequence {
 public:
  TimedLabelSequence() = default;

  /// Sorts `segments` by start and validates them; throws DataError on
  /// invalid intervals or overlaps.
  TimedLabelSequence(std::string track_id, std::vector<Segment> segments)
      : track_id_(std::move(track_id)), segments_(std::move(segments)) {
    std::stable_sort(segments_.begin(), segments_.end(),
                     [](const Segment& a, const Segment& b) {
                       return a.interval.start < b.interval.start;
                     });
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      if (!segments_[i].interval.valid()) {
        throw DataError("invalid interval in track '" + track_id_ + "'");
      }
      if (i > 0 && segments_[i].interval.start < segments_[i - 1].interval.end) {
        throw DataError("overlapping segments in track '" + track_id_ + "'");
      }
    }
  }

  const std::string& track_id() const { return track_id_; }
  const std::vector<Segment>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }

  /// Annotated span from 0 to the last segment end (segments plus gaps).
  double duration() const {
    return segments_.empty() ? 0.0 : segments_.back().interval.end;
  }

  bool operator==(const TimedLabelSequence&) const = default;

 private:
  std::string track_id_;
  std::vector<Segment> segments_;
};

/// Parses `start end label` lines (spaces or tabs). Blank lines and `#`
/// comments are skipped. Errors carry the 1-based line number.
inline TimedLabelSequence read_lab(std::string_view content,
                                   std::string track_id = {}) {
  struct Row {
    Segment segment;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;

  auto parse_time = [&](const std::string& token) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (token.empty() || end != token.c_str() + token.size() || errno != 0 ||
        !std::isfinite(v)) {
      throw DataError("non-numeric time '" + token + "'", line_no);
    }
    return v;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream fields(line);
    std::string t0, t1, text, extra;
    if (!(fields >> t0 >> t1 >> text)) {
      throw DataError("expected 'start end label'", line_no);
    }
    if (fields >> extra) {
      throw DataError("unexpected trailing field '" + extra + "'", line_no);
    }
    Interval iv{parse_time(t0), parse_time(t1)};
    if (iv.start < 0.0) throw DataError("negative start time", line_no);
    if (!(iv.end > iv.start)) throw DataError("end <= start", line_no);
    ChordLabel label;
    try {
      label = parse_chord_label(text);
    } catch (const ParseError& e) {
      throw DataError(e.what(), line_no);
    }
    rows.push_back({{iv, std::move(label)}, line_no});
  }

  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.segment.interval.start < b.segment.interval.start;
  });
  std::vector<Segment> segments;
  segments.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].segment.interval.start < rows[i - 1].segment.interval.end) {
      throw DataError("overlapping segments",
                      std::max(rows[i].line, rows[i - 1].line));
    }
    segments.push_back(std::move(rows[i].segment));
  }
  return TimedLabelSequence(std::move(track_id), std::move(segments));
}

/// One `%.6f %.6f <label>` line per segment.
inline std::string write_lab(const TimedLabelSequence& sequence) {
  std::string out;
  char buf[96];
  for (const Segment& s : sequence.segments()) {
    std::snprintf(buf, sizeof buf, "%.6f %.6f ", s.interval.start,
                  s.interval.end);
    out += buf;
    out += to_string(s.label);
    out += '\n';
  }
  return out;
}

/// Minimal sorted set of disjoint intervals covering the same points.
/// Touching intervals coalesce.
inline std::vector<Interval> merge_intervals(std::vector<Interval> intervals) {
  std::sort(intervals.begin(), intervals.end(),
            [](const Interval& a, const Interval& b) {
              return a.start < b.start || (a.start == b.start && a.end < b.end);
            });
  std::vector<Interval> merged;
  for (const Interval& iv : intervals) {
    if (!(iv.end > iv.start)) continue;
    if (!merged.empty() && iv.start <= merged.back().end) {
      merged.back().end = std::max(merged.back().end, iv.end);
    } else {
      merged.push_back(iv);
    }
  }
  return merged;
}

/// Total length of `window` overlapping the sorted disjoint set `covered`.
inline double overlap_measure(const std::vector<Interval>& covered,
                              Interval window) {
  double total = 0.0;
  auto it = std::lower_bound(
      covered.begin(), covered.end(), window.start,
      [](const Interval& iv, double t) { return iv.end <= t; });
  for (; it != covered.end() && it->start < window.end; ++it) {
    const double lo = std::max(it->start, window.start);
    const double hi = std::min(it->end, window.end);
    if (hi > lo) total += hi - lo;
  }
  return total;
}

/// Growing union of intervals. `insert` reports how much previously
/// uncovered time the new interval added.
class IntervalSet {
 public:
  double insert(Interval iv) {
    if (!(iv.end > iv.start)) return 0.0;
    const double added = iv.length() - overlap_measure(intervals_, iv);
    std::vector<Interval> next;
    next.reserve(intervals_.size() + 1);
    bool placed = false;
    for (const Interval& cur : intervals_) {
      if (cur.end < iv.start) {
        next.push_back(cur);
      } else if (iv.end < cur.start) {
        if (!placed) {
          next.push_back(iv);
          placed = true;
        }
        next.push_back(cur);
      } else {
        iv.start = std::min(iv.start, cur.start);
        iv.end = std::max(iv.end, cur.end);
      }
    }
    if (!placed) next.push_back(iv);
    intervals_ = std::move(next);
    return added;
  }

  double measure() const {
    double total = 0.0;
    for (const Interval& iv : intervals_) total += iv.length();
    return total;
  }

  const std::vector<Interval>& intervals() const { return intervals_; }

 private:
  std::vector<Interval> intervals_;
};

/// Reference time whose class is in the vocabulary (not X).
inline double scoreable_duration(const TimedLabelSequence& ref,
                                 const Vocabulary& vocabulary) {
  double total = 0.0;
  for (const Segment& s : ref.segments()) {
    if (map_to_class(s.label, vocabulary) != ChordClass::X) {
      total += s.interval.length();
    }
  }
  return total;
}

/// Calls `fn(ref_class, pred_class, overlap_seconds)` for every maximal piece
/// of reference time, by a two-pointer boundary sweep. Reference pieces not
/// covered by any prediction are reported with pred_class = X.
template <typename Fn>
void sweep_overlaps(const TimedLabelSequence& pred,
                    const TimedLabelSequence& ref, const Vocabulary& vocabulary,
                    Fn&& fn) {
  const auto& ps = pred.segments();
  std::size_t j = 0;
  for (const Segment& r : ref.segments()) {
    const ChordClass rc = map_to_class(r.label, vocabulary);
    while (j < ps.size() && ps[j].interval.end <= r.interval.start) ++j;
    double cursor = r.interval.start;
    for (std::size_t k = j; k < ps.size() && ps[k].interval.start < r.interval.end;
         ++k) {
      const double lo = std::max(ps[k].interval.start, r.interval.start);
      const double hi = std::min(ps[k].interval.end, r.interval.end);
      if (lo > cursor) fn(rc, ChordClass::X, lo - cursor);
      if (hi > lo) fn(rc, map_to_class(ps[k].label, vocabulary), hi - lo);
      cursor = std::max(cursor, hi);
    }
    if (r.interval.end > cursor) fn(rc, ChordClass::X, r.interval.end - cursor);
  }
}

/// Reference time (X excluded) where predicted and reference classes agree.
inline double matched_duration(const TimedLabelSequence& pred,
                               const TimedLabelSequence& ref,
                               const Vocabulary& vocabulary) {
  double matched = 0.0;
  sweep_overlaps(pred, ref, vocabulary,
                 [&](ChordClass rc, ChordClass pc, double seconds) {
                   if (rc != ChordClass::X && rc == pc) matched += seconds;
                 });
  return matched;
}

}  // namespace acr
