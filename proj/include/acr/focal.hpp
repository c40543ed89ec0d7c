#pragma once

// Focal loss FL(p_t) = -(1 - p_t)^gamma * log(p_t).
//
// Sign: the loss is written here with the leading minus of the original focal
// loss formulation so that it is nonnegative and gamma = 0 reduces exactly to
// cross-entropy. A version without the minus is nonpositive and cannot be
// minimized as a training objective.

#include <acr/chord.hpp>
#include <acr/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace acr {

struct FocalParams {
  double gamma = 0.0;
  /// Per target class; classes not listed weigh 1.
  std::map<ChordClass, double> class_weights{};
  /// Lower clamp applied to p_t before taking the log.
  double probability_floor = 1e-12;

  /// Values the study evaluated.
  static constexpr std::array<double, 3> kGammaPresets = {1.0, 2.0, 5.0};

  double weight(ChordClass c) const {
    auto it = class_weights.find(c);
    return it == class_weights.end() ? 1.0 : it->second;
  }

  void validate() const {
    if (!std::isfinite(gamma) || gamma < 0.0) {
      throw Error("focal loss gamma must be finite and >= 0");
    }
    for (const auto& [c, w] : class_weights) {
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw Error("class weights must be finite and > 0");
      }
    }
  }
};

/// Running count of probabilities clamped at the floor.
struct FocalDiagnostics {
  std::size_t clamped = 0;
};

inline double focal_loss(double p_t, const FocalParams& params,
                         FocalDiagnostics* diagnostics = nullptr) {
  if (!(p_t > params.probability_floor)) {
    p_t = params.probability_floor;
    if (diagnostics) ++diagnostics->clamped;
  }
  p_t = std::min(p_t, 1.0);
  const double modulator =
      params.gamma == 0.0 ? 1.0 : std::pow(1.0 - p_t, params.gamma);
  return modulator * -std::log(p_t);
}

/// Numerically stable softmax.
inline std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

/// Scalar factor g with dFL/dz_j = g * (onehot_j - p_j), given the softmax
/// `probs` and the target index.
inline double focal_grad_scale(std::span<const double> probs, std::size_t target,
                               double gamma) {
  const double p_t = probs[target];
  // 1 - p_t summed from the other entries keeps precision when p_t ~ 1.
  double q = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (j != target) q += probs[j];
  }
  if (gamma == 0.0) return -1.0;
  if (q <= 0.0) return 0.0;
  const double log_p = std::log(std::max(p_t, 1e-300));
  return gamma * std::pow(q, gamma - 1.0) * p_t * log_p - std::pow(q, gamma);
}

/// Gradient of focal_loss(softmax(logits)[target]) with respect to logits.
inline std::vector<double> focal_loss_grad(std::span<const double> logits,
                                           std::size_t target,
                                           const FocalParams& params) {
  if (target >= logits.size()) throw Error("focal_loss_grad: target out of range");
  std::vector<double> p = softmax(logits);
  const double g = focal_grad_scale(p, target, params.gamma);
  std::vector<double> grad(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    grad[j] = g * ((j == target ? 1.0 : 0.0) - p[j]);
  }
  return grad;
}

/// A probability vector over the model's outcomes; sums to 1 within 1e-9.
class FrameDistribution {
 public:
  explicit FrameDistribution(std::vector<double> probabilities)
      : p_(std::move(probabilities)) {
    double sum = 0.0;
    for (double v : p_) {
      if (!(v >= 0.0) || v > 1.0) throw Error("probability out of range");
      sum += v;
    }
    if (p_.empty() || std::abs(sum - 1.0) > 1e-9) {
      throw Error("frame distribution must sum to 1");
    }
  }

  double operator[](std::size_t i) const { return p_.at(i); }
  std::size_t size() const { return p_.size(); }
  std::span<const double> values() const { return p_; }

 private:
  std::vector<double> p_;
};

/// Class-weight-scaled mean of per-frame focal losses:
/// sum_i w(class_i) * FL(p_i[target_i]) / n.
/// `target_classes`, when given, supplies the class of each target for
/// weighting; otherwise all weights are 1.
inline double sequence_loss(std::span<const FrameDistribution> frames,
                            std::span<const std::size_t> targets,
                            const FocalParams& params,
                            std::span<const ChordClass> target_classes = {},
                            FocalDiagnostics* diagnostics = nullptr) {
  if (frames.size() != targets.size()) {
    throw Error("sequence_loss: frame/target length mismatch");
  }
  if (!target_classes.empty() && target_classes.size() != targets.size()) {
    throw Error("sequence_loss: target class length mismatch");
  }
  if (frames.empty()) throw Error("sequence_loss: empty sequence");
  double total = 0.0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (targets[i] >= frames[i].size()) {
      throw Error("sequence_loss: target out of range");
    }
    const double w =
        target_classes.empty() ? 1.0 : params.weight(target_classes[i]);
    total += w * focal_loss(frames[i][targets[i]], params, diagnostics);
  }
  return total / static_cast<double>(frames.size());
}

/// Weights proportional to 1 / share, normalized to mean 1 over the classes
/// present in `distribution`.
inline std::map<ChordClass, double> inverse_frequency_weights(
    const std::map<ChordClass, double>& distribution) {
  std::map<ChordClass, double> w;
  double sum = 0.0;
  for (const auto& [c, share] : distribution) {
    if (share > 0.0) {
      w[c] = 1.0 / share;
      sum += w[c];
    }
  }
  if (w.empty()) return w;
  const double mean = sum / static_cast<double>(w.size());
  for (auto& [c, v] : w) v /= mean;
  return w;
}

}  // namespace acr
