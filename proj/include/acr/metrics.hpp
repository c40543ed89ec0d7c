#pragma once

// Chord symbol recall (CSR), duration-weighted recall (WCSR), per-type recall
// (WCSR_C), average chord quality accuracy (ACQA), and class distributions.
// All durations come from an exact boundary sweep; X reference time is
// excluded everywhere and N is an ordinary scoreable class.

#include <acr/annotations.hpp>
#include <acr/chord.hpp>
#include <acr/error.hpp>

#include <json.hpp>

#include <array>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

namespace acr {

/// Prediction and reference for the same track.
struct TrackPair {
  TimedLabelSequence pred;
  TimedLabelSequence ref;

  TrackPair(TimedLabelSequence p, TimedLabelSequence r)
      : pred(std::move(p)), ref(std::move(r)) {
    if (pred.track_id() != ref.track_id()) {
      throw DataError("track pair mismatch: '" + pred.track_id() + "' vs '" +
                      ref.track_id() + "'");
    }
  }

  /// The track weight T_i: in-vocabulary reference duration.
  double weight(const Vocabulary& vocabulary) const {
    return scoreable_duration(ref, vocabulary);
  }
};

/// Per-class reference duration and matched duration. Merging is
/// associative and commutative.
class PerTypeLedger {
 public:
  struct Entry {
    double total = 0.0;
    double matched = 0.0;
  };

  void add(ChordClass c, double total, double matched) {
    auto& e = entries_[index_of(c)];
    e.total += total;
    e.matched += matched;
  }

  void merge(const PerTypeLedger& other) {
    for (std::size_t i = 0; i < kChordClassCount; ++i) {
      entries_[i].total += other.entries_[i].total;
      entries_[i].matched += other.entries_[i].matched;
    }
  }

  const Entry& entry(ChordClass c) const { return entries_[index_of(c)]; }

  /// Classes with nonzero reference duration, in enum order.
  std::vector<ChordClass> present() const {
    std::vector<ChordClass> out;
    for (ChordClass c : kAllChordClasses) {
      if (entries_[index_of(c)].total > 0.0) out.push_back(c);
    }
    return out;
  }

  /// WCSR_C for every present class.
  std::map<ChordClass, double> recall() const {
    std::map<ChordClass, double> out;
    for (ChordClass c : present()) {
      const Entry& e = entry(c);
      out[c] = e.matched / e.total;
    }
    return out;
  }

  bool empty() const { return present().empty(); }

 private:
  std::array<Entry, kChordClassCount> entries_{};
};

inline PerTypeLedger track_ledger(const TrackPair& pair,
                                  const Vocabulary& vocabulary) {
  PerTypeLedger ledger;
  sweep_overlaps(pair.pred, pair.ref, vocabulary,
                 [&](ChordClass rc, ChordClass pc, double seconds) {
                   if (rc == ChordClass::X) return;
                   ledger.add(rc, seconds, rc == pc ? seconds : 0.0);
                 });
  return ledger;
}

inline double csr(const TrackPair& pair, const Vocabulary& vocabulary) {
  const double total = pair.weight(vocabulary);
  if (!(total > 0.0)) {
    throw DataError("empty reference for track '" + pair.ref.track_id() + "'");
  }
  return matched_duration(pair.pred, pair.ref, vocabulary) / total;
}

/// sum(T_i * CSR_i) / sum(T_i), with T_i the in-vocabulary reference duration.
/// Tracks with T_i = 0 carry no weight; at least one must be scoreable.
inline double wcsr(const std::vector<TrackPair>& pairs,
                   const Vocabulary& vocabulary) {
  if (pairs.empty()) throw DataError("wcsr: no tracks");
  double weighted = 0.0;
  double total = 0.0;
  for (const TrackPair& p : pairs) {
    const double t = p.weight(vocabulary);
    if (t > 0.0) {
      weighted += t * csr(p, vocabulary);
      total += t;
    }
  }
  if (!(total > 0.0)) throw DataError("wcsr: no scoreable tracks");
  return weighted / total;
}

inline PerTypeLedger wcsr_per_type(const std::vector<TrackPair>& pairs,
                                   const Vocabulary& vocabulary) {
  PerTypeLedger ledger;
  for (const TrackPair& p : pairs) ledger.merge(track_ledger(p, vocabulary));
  return ledger;
}

/// Unweighted mean of WCSR_C over classes present in the reference.
inline double acqa(const PerTypeLedger& ledger) {
  const auto recall = ledger.recall();
  if (recall.empty()) throw DataError("acqa: empty ledger");
  double sum = 0.0;
  for (const auto& [c, r] : recall) sum += r;
  return sum / static_cast<double>(recall.size());
}

/// Mean of arbitrary per-type scores, e.g. a published table row.
inline double acqa(const std::map<ChordClass, double>& per_type) {
  if (per_type.empty()) throw DataError("acqa: empty ledger");
  double sum = 0.0;
  for (const auto& [c, r] : per_type) sum += r;
  return sum / static_cast<double>(per_type.size());
}

/// Share of total in-vocabulary duration per class.
inline std::map<ChordClass, double> type_distribution(
    const std::vector<TimedLabelSequence>& sequences,
    const Vocabulary& vocabulary) {
  std::array<double, kChordClassCount> seconds{};
  double total = 0.0;
  for (const auto& seq : sequences) {
    for (const Segment& s : seq.segments()) {
      const ChordClass c = map_to_class(s.label, vocabulary);
      if (c == ChordClass::X) continue;
      seconds[index_of(c)] += s.interval.length();
      total += s.interval.length();
    }
  }
  if (!(total > 0.0)) throw DataError("type_distribution: zero total duration");
  std::map<ChordClass, double> out;
  for (ChordClass c : kAllChordClasses) {
    if (seconds[index_of(c)] > 0.0) out[c] = seconds[index_of(c)] / total;
  }
  return out;
}

struct MetricsReport {
  double wcsr = 0.0;
  double acqa = 0.0;
  std::map<ChordClass, double> per_type;
  std::map<ChordClass, double> distribution;
  PerTypeLedger ledger;
};

inline MetricsReport evaluate(const std::vector<TrackPair>& pairs,
                              const Vocabulary& vocabulary) {
  MetricsReport report;
  report.wcsr = wcsr(pairs, vocabulary);
  report.ledger = wcsr_per_type(pairs, vocabulary);
  report.per_type = report.ledger.recall();
  report.acqa = acqa(report.ledger);
  std::vector<TimedLabelSequence> refs;
  refs.reserve(pairs.size());
  for (const auto& p : pairs) refs.push_back(p.ref);
  report.distribution = type_distribution(refs, vocabulary);
  return report;
}

/// Stable key order: scalars first, then classes in enum order.
inline nlohmann::ordered_json to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["wcsr"] = report.wcsr;
  j["acqa"] = report.acqa;
  auto per_type = nlohmann::ordered_json::object();
  auto distribution = nlohmann::ordered_json::object();
  for (ChordClass c : kAllChordClasses) {
    const std::string name(class_name(c));
    if (auto it = report.per_type.find(c); it != report.per_type.end()) {
      per_type[name] = it->second;
    }
    if (auto it = report.distribution.find(c); it != report.distribution.end()) {
      distribution[name] = it->second;
    }
  }
  j["per_type"] = std::move(per_type);
  j["distribution"] = std::move(distribution);
  return j;
}

inline MetricsReport metrics_from_json(const nlohmann::ordered_json& j) {
  MetricsReport r;
  r.wcsr = j.at("wcsr").get<double>();
  r.acqa = j.at("acqa").get<double>();
  auto read_map = [](const nlohmann::ordered_json& obj) {
    std::map<ChordClass, double> out;
    for (const auto& [key, value] : obj.items()) {
      auto c = class_from_name(key);
      if (!c) throw DataError("unknown class '" + key + "' in metrics");
      out[*c] = value.get<double>();
    }
    return out;
  };
  r.per_type = read_map(j.at("per_type"));
  r.distribution = read_map(j.at("distribution"));
  return r;
}

/// Per-class table: class, reference share, WCSR_C.
inline std::string per_type_csv(const MetricsReport& report) {
  std::string out = "class,reference_share,wcsr_c\n";
  char buf[64];
  for (ChordClass c : kAllChordClasses) {
    auto share = report.distribution.find(c);
    if (share == report.distribution.end()) continue;
    out += class_name(c);
    std::snprintf(buf, sizeof buf, ",%.6f", share->second);
    out += buf;
    if (auto it = report.per_type.find(c); it != report.per_type.end()) {
      std::snprintf(buf, sizeof buf, ",%.6f", it->second);
      out += buf;
    } else {
      out += ",";
    }
    out += '\n';
  }
  return out;
}

inline std::string distribution_csv(const std::map<ChordClass, double>& dist) {
  std::string out = "class,share\n";
  char buf[64];
  for (const auto& [c, share] : dist) {
    std::snprintf(buf, sizeof buf, ",%.6f\n", share);
    out += class_name(c);
    out += buf;
  }
  return out;
}

}  // namespace acr
