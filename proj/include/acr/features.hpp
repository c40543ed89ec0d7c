#pragma once

#include <acr/annotations.hpp>
#include <acr/error.hpp>

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace acr {

inline constexpr std::size_t kChromaBins = 12;

/// One 12-bin pitch-class energy frame, bin 0 = C.
using Chroma = std::array<double, kChromaBins>;

/// `x` rotated so that bin `i` of the result is bin `i + shift` of the input.
/// rotate(x, r) brings a chord rooted at r down to root 0.
inline Chroma rotate(const Chroma& x, int shift) {
  Chroma out{};
  const int s = ((shift % 12) + 12) % 12;
  for (std::size_t i = 0; i < kChromaBins; ++i) {
    out[i] = x[(i + static_cast<std::size_t>(s)) % kChromaBins];
  }
  return out;
}

/// Fixed-rate sequence of chroma frames. Frame i spans
/// [i / frame_rate, (i + 1) / frame_rate).
struct FeatureTrack {
  std::string track_id;
  double frame_rate = 10.0;
  std::vector<Chroma> frames;

  double duration() const {
    return static_cast<double>(frames.size()) / frame_rate;
  }
  double frame_center(std::size_t i) const {
    return (static_cast<double>(i) + 0.5) / frame_rate;
  }
  void validate() const {
    if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) {
      throw DataError("feature track '" + track_id + "': frame rate must be > 0");
    }
  }
  bool operator==(const FeatureTrack&) const = default;
};

/// Features with their frame-aligned annotation.
struct LabeledTrack {
  FeatureTrack features;
  TimedLabelSequence labels;
};

/// Label covering each frame center; frames in gaps get N.
inline std::vector<ChordLabel> frame_labels(const FeatureTrack& track,
                                            const TimedLabelSequence& labels) {
  std::vector<ChordLabel> out(track.frames.size(), ChordLabel::no_chord());
  const auto& segs = labels.segments();
  std::size_t j = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double t = track.frame_center(i);
    while (j < segs.size() && segs[j].interval.end <= t) ++j;
    if (j < segs.size() && segs[j].interval.start <= t) out[i] = segs[j].label;
  }
  return out;
}

}  // namespace acr
