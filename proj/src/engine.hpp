// SPDX-License-Identifier: Apache-2.0
//
// Internal path engine shared by the path generators and the estimators.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mgbound/martingales.hpp"
#include "mgbound/rng.hpp"

namespace mgbound::detail {

/// Step law together with its conjugate-measure summaries and thresholds.
struct TiltedLaw {
  StepLaw base;
  double lambda = 0.0;
  TiltedMoments moments;
  BernoulliThreshold nonzero_plain;
  BernoulliThreshold nonzero_tilted;
  BernoulliThreshold up_tilted;
};

TiltedLaw make_tilted_law(const StepLaw& law, double lambda);

/// Two-entry cache: deterministic-environment families use at most two
/// distinct step laws, so lookups are almost always hits.
class TiltCache {
 public:
  explicit TiltCache(double lambda) : lambda_(lambda) {}

  const TiltedLaw& get(const StepLaw& law) {
    if (valid_[0] && entries_[0].base == law) return entries_[0];
    if (valid_[1] && entries_[1].base == law) return entries_[1];
    const int slot = next_;
    next_ ^= 1;
    entries_[slot] = make_tilted_law(law, lambda_);
    valid_[slot] = true;
    return entries_[slot];
  }

 private:
  double lambda_;
  TiltedLaw entries_[2];
  bool valid_[2] = {false, false};
  int next_ = 0;
};

/// Draws one step outcome in {-1, 0, +1}. With tilted == false, or a zero tilt,
/// the draw is the untilted one and consumes exactly the same random words.
inline int sample_step(CounterRng& rng, const TiltedLaw& t, bool tilted) {
  if (!tilted || t.lambda == 0.0) {
    if (t.base.nonzero_prob < 1.0 && !rng.bernoulli(t.nonzero_plain)) return 0;
    return rng.next_bit() ? 1 : -1;
  }
  if (t.base.nonzero_prob < 1.0 && !rng.bernoulli(t.nonzero_tilted)) return 0;
  return rng.bernoulli(t.up_tilted) ? 1 : -1;
}

/// Produces the conditional step laws of a model along one path.
class LawSource {
 public:
  explicit LawSource(const MartingaleModel& model);

  /// Draws the per-path environment (no-op for deterministic environments).
  void begin_path(std::uint64_t seed, std::uint64_t path_index);

  /// Law of step i (0-based) given S_{i-1} = s_prev.
  StepLaw law(std::size_t i, double s_prev) const {
    switch (kind_) {
      case ModelKind::scaled_rademacher:
        return {scales_[i], 1.0};
      case ModelKind::variance_switch:
        return {s_prev >= 0.0 ? hi_ : lo_, 1.0};
      default:
        return {scales_[i], nonzero_prob_};
    }
  }

  std::size_t steps() const noexcept { return n_; }
  const std::vector<double>& environment() const noexcept { return env_; }

 private:
  void fill_scales();

  ModelKind kind_;
  std::size_t n_;
  bool random_env_ = false;
  double env_low_ = 1.0, env_high_ = 1.0;
  double support_ratio_ = 1.0;
  double nonzero_prob_ = 1.0;
  double hi_ = 0.0, lo_ = 0.0;
  std::vector<double> env_;
  std::vector<double> scales_;
};

/// Terminal summary of one simulated path.
struct PathSummary {
  double s = 0.0;
  double qc = 0.0;
  double psi = 0.0;    ///< sum of log conditional MGFs at the engine's tilt
  double drift = 0.0;  ///< B_n at the engine's tilt
};

/// Simulates one path; psi is accumulated at the cache's tilt.
inline PathSummary run_path(LawSource& src, TiltCache& cache, bool tilted, std::uint64_t seed,
                            std::uint64_t path_index) {
  src.begin_path(seed, path_index);
  CounterRng rng(seed, path_index, RngStream::steps);
  PathSummary r;
  const std::size_t n = src.steps();
  for (std::size_t i = 0; i < n; ++i) {
    const TiltedLaw& t = cache.get(src.law(i, r.s));
    const int o = sample_step(rng, t, tilted);
    r.s += o * t.base.scale;
    r.qc += t.base.variance();
    r.psi += t.moments.log_mgf;
    r.drift += t.moments.drift;
  }
  return r;
}

/// One leaf of the exhaustive enumeration.
struct Leaf {
  double s;
  double qc;
  double prob;         ///< probability under P
  double tilted_prob;  ///< probability under P_lambda (product of tilted step probabilities)
  double psi;          ///< Psi_n at the enumeration tilt
  double drift;        ///< B_n at the enumeration tilt
};

/// All leaves of a model with a deterministic environment, in lexicographic
/// order of the outcome sequence. Throws UnsupportedModel when the
/// environment is random or the tree has more than max_leaves leaves.
std::vector<Leaf> enumerate_leaves(const MartingaleModel& model, double lambda,
                                   std::size_t max_leaves = std::size_t{1} << 20);

/// Number of leaves of the enumeration tree, saturating at SIZE_MAX.
std::size_t leaf_count(const MartingaleModel& model) noexcept;

}  // namespace mgbound::detail
