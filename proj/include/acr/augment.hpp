#pragma once

// Feature-space input noise: cyclic pitch shifting and additive Gaussian noise.

#include <acr/annotations.hpp>
#include <acr/error.hpp>
#include <acr/features.hpp>
#include <acr/rng.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <utility>
#include <vector>

namespace acr {

struct AugmentSpec {
  int min_semitones = -5;
  int max_semitones = 6;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  /// Clamp noisy values to [0, 1] (the synthetic corpus is normalized).
  bool clamp_unit = true;

  void validate() const {
    if (min_semitones < -11 || max_semitones > 11 || min_semitones > max_semitones) {
      throw DataError("augment: semitone range must lie within [-11, 11]");
    }
    if (!(noise_sigma >= 0.0)) throw DataError("augment: noise sigma must be >= 0");
  }
};

/// Rotates every frame up by `semitones` and transposes every label by the
/// same amount. Timing is untouched.
inline std::pair<FeatureTrack, TimedLabelSequence> pitch_shift(
    const FeatureTrack& track, const TimedLabelSequence& labels, int semitones) {
  FeatureTrack shifted = track;
  for (Chroma& f : shifted.frames) f = rotate(f, -semitones);
  std::vector<Segment> segs = labels.segments();
  for (Segment& s : segs) s.label = transpose(s.label, semitones);
  return {std::move(shifted), TimedLabelSequence(labels.track_id(), std::move(segs))};
}

inline FeatureTrack add_noise(const FeatureTrack& track, double sigma,
                              std::uint64_t seed, bool clamp_unit = true) {
  if (!(sigma >= 0.0)) throw DataError("add_noise: sigma must be >= 0");
  if (sigma == 0.0) return track;
  FeatureTrack out = track;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  for (Chroma& f : out.frames) {
    for (double& v : f) {
      v += normal(rng);
      if (clamp_unit) v = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

/// Uniform nonzero shift from the configured range (0 only if the range is {0}).
inline int draw_semitones(const AugmentSpec& spec, std::mt19937_64& rng) {
  std::vector<int> choices;
  for (int s = spec.min_semitones; s <= spec.max_semitones; ++s) {
    if (s != 0) choices.push_back(s);
  }
  if (choices.empty()) return 0;
  std::uniform_int_distribution<std::size_t> pick(0, choices.size() - 1);
  return choices[pick(rng)];
}

/// Random pitch shift followed by noise, seeded per track id so results do
/// not depend on processing order.
inline LabeledTrack augment_track(const LabeledTrack& track,
                                  const AugmentSpec& spec) {
  spec.validate();
  const std::uint64_t seed = derive_seed(spec.seed, track.features.track_id);
  std::mt19937_64 rng(seed);
  const int shift = draw_semitones(spec, rng);
  auto [features, labels] = pitch_shift(track.features, track.labels, shift);
  features = add_noise(features, spec.noise_sigma, splitmix64(seed), spec.clamp_unit);
  return {std::move(features), std::move(labels)};
}

}  // namespace acr
