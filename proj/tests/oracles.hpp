#pragma once

// Test-only reference implementations. Nothing here calls the sweep-based
// metric code or the analytic gradient it checks.

#include <acr/annotations.hpp>
#include <acr/chord.hpp>
#include <acr/metrics.hpp>

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace acr::oracle {

inline std::optional<ChordLabel> label_at(const TimedLabelSequence& seq, double t) {
  for (const Segment& s : seq.segments()) {
    if (s.interval.start <= t && t < s.interval.end) return s.label;
  }
  return std::nullopt;
}

/// Brute-force metric totals from point samples every `step` seconds.
struct SampledTotals {
  std::array<double, kChordClassCount> total{};
  std::array<double, kChordClassCount> matched{};

  double all_total() const {
    double s = 0;
    for (double v : total) s += v;
    return s;
  }
  double all_matched() const {
    double s = 0;
    for (double v : matched) s += v;
    return s;
  }
  double csr() const { return all_matched() / all_total(); }
  std::map<ChordClass, double> per_type() const {
    std::map<ChordClass, double> out;
    for (ChordClass c : kAllChordClasses) {
      if (total[index_of(c)] > 0) out[c] = matched[index_of(c)] / total[index_of(c)];
    }
    return out;
  }
  double acqa() const {
    auto p = per_type();
    double s = 0;
    for (auto& [c, v] : p) s += v;
    return s / static_cast<double>(p.size());
  }
  void merge(const SampledTotals& o) {
    for (std::size_t i = 0; i < kChordClassCount; ++i) {
      total[i] += o.total[i];
      matched[i] += o.matched[i];
    }
  }
};

inline SampledTotals sample(const TimedLabelSequence& pred, const TimedLabelSequence& ref,
                            const Vocabulary& vocabulary, double step = 0.01) {
  SampledTotals out;
  const auto n = static_cast<long>(std::ceil(ref.duration() / step));
  // Walk both sequences with cursors; label_at per sample would be O(n*m).
  std::size_t ri = 0, pi = 0;
  const auto& rs = ref.segments();
  const auto& ps = pred.segments();
  for (long k = 0; k < n; ++k) {
    const double t = (static_cast<double>(k) + 0.5) * step;
    while (ri < rs.size() && rs[ri].interval.end <= t) ++ri;
    while (pi < ps.size() && ps[pi].interval.end <= t) ++pi;
    if (ri == rs.size() || rs[ri].interval.start > t) continue;
    const ChordClass rc = map_to_class(rs[ri].label, vocabulary);
    if (rc == ChordClass::X) continue;
    ChordClass pc = ChordClass::X;
    if (pi < ps.size() && ps[pi].interval.start <= t) pc = map_to_class(ps[pi].label, vocabulary);
    out.total[index_of(rc)] += step;
    if (pc == rc) out.matched[index_of(rc)] += step;
  }
  return out;
}

/// Labels covering every class of the full vocabulary, several spellings,
/// and out-of-vocabulary qualities.
inline const std::vector<std::string>& label_pool() {
  static const std::vector<std::string> pool = {
      "C:maj", "D:min", "E:7", "F#:min7", "Bb:maj7", "G:dim", "A:hdim7",
      "Eb:aug", "C:sus4", "N", "X", "G:maj(9)", "A:min9", "D:aug7", "C:minmaj7",
      "F:maj/3", "Ab:min7/b7", "B:sus2", "C:13", "Db:dim7"};
  return pool;
}

/// Random sorted non-overlapping sequence with gaps, real-valued boundaries.
inline TimedLabelSequence random_sequence(std::mt19937_64& rng, const std::string& id,
                                          double min_duration,
                                          const std::vector<std::string>& labels = label_pool(),
                                          double gap_probability = 0.1) {
  std::uniform_real_distribution<double> seg(0.3, 6.0);
  std::uniform_real_distribution<double> gap(0.05, 2.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, labels.size() - 1);
  std::vector<Segment> segs;
  double t = u(rng) < 0.3 ? gap(rng) : 0.0;
  while (t < min_duration) {
    const double d = seg(rng);
    segs.push_back({{t, t + d}, parse_chord_label(labels[pick(rng)])});
    t += d;
    if (u(rng) < gap_probability) t += gap(rng);
  }
  return TimedLabelSequence(id, std::move(segs));
}

/// A perturbed copy of `ref`: boundaries jittered, some labels replaced, some
/// segments dropped, as a prediction would look.
inline TimedLabelSequence perturb(std::mt19937_64& rng, const TimedLabelSequence& ref,
                                  const std::vector<std::string>& labels = label_pool()) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, labels.size() - 1);
  std::vector<Segment> segs;
  double t = 0.0;
  for (const Segment& s : ref.segments()) {
    double start = std::max(t, s.interval.start + (u(rng) - 0.5) * 0.6);
    double end = s.interval.end + (u(rng) - 0.5) * 0.6;
    if (end <= start + 0.01) continue;
    if (u(rng) < 0.05) continue;
    ChordLabel l = u(rng) < 0.6 ? s.label : parse_chord_label(labels[pick(rng)]);
    segs.push_back({{start, end}, l});
    t = end;
  }
  return TimedLabelSequence(ref.track_id(), std::move(segs));
}

/// Focal loss of softmax(logits)[target] in extended precision, straight
/// from the definition.
inline long double focal_of_logits(const std::vector<double>& logits, std::size_t target,
                                   double gamma) {
  long double mx = logits[0];
  for (double z : logits) mx = std::max<long double>(mx, z);
  long double sum = 0;
  for (double z : logits) sum += std::exp(static_cast<long double>(z) - mx);
  const long double p = std::exp(static_cast<long double>(logits[target]) - mx) / sum;
  return std::pow(1.0L - p, static_cast<long double>(gamma)) * -std::log(p);
}

/// Central differences of focal_of_logits with step h.
inline std::vector<double> finite_difference_grad(const std::vector<double>& logits,
                                                  std::size_t target, double gamma,
                                                  double h = 1e-5) {
  std::vector<double> g(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) {
    auto plus = logits, minus = logits;
    plus[j] += h;
    minus[j] -= h;
    g[j] = static_cast<double>((focal_of_logits(plus, target, gamma) -
                                focal_of_logits(minus, target, gamma)) /
                               (2.0L * h));
  }
  return g;
}

}  // namespace acr::oracle
