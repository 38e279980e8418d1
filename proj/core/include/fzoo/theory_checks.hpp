#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fzoo/objectives.hpp"
#include "fzoo/param_vector.hpp"

// Monte-Carlo validation of the second-moment identities behind the
// sigma-normalized estimator. Everything here is deterministic given
// (seed, samples) and independent of worker count.

namespace fzoo {

struct MomentCheckReport {
  std::string identity;
  double theoretical = 0.0;
  double empirical = 0.0;
  double std_error = 0.0;   // standard error of the empirical mean
  std::int64_t samples = 0;
  double tolerance = 0.0;   // absolute threshold actually applied
  bool pass = false;
  bool inconclusive = false;
  std::string note;
};

// Pass rule shared by all moment checks: |empirical - theoretical| <=
// max(rel_tol * |theoretical|, 3 * std_error), and never on fewer than 1e4
// samples. rel_tol defaults to 2%.
MomentCheckReport compare_moments(std::string identity, double theoretical,
                                  double empirical, double std_error,
                                  std::int64_t samples, double rel_tol = 0.02);

// E | sum_i u_i u_i' x |^2 = N (N + d - 1) |x|^2 over N iid Rademacher
// directions.
MomentCheckReport check_lemma_sum_outer(const std::vector<double>& x,
                                        int n_directions, std::int64_t samples,
                                        std::uint64_t seed, std::size_t workers = 1);

// sum_i E <g, u_i - mean(u)>^2 = (N - 1) |g|^2.
MomentCheckReport check_lemma_centered_inner(const std::vector<double>& g,
                                             int n_directions, std::int64_t samples,
                                             std::uint64_t seed,
                                             std::size_t workers = 1);

// Injectable spread statistic, so a corrupted formula can be shown to break
// exactly the sigma moment check and nothing else.
using SigmaFn = std::function<double(std::span<const double>)>;

struct Proposition1Report {
  MomentCheckReport grad_second_moment;  // E|g|^2 vs (N+d-1)/N |grad L|^2
  MomentCheckReport sigma_second_moment; // E[sigma^2] vs eps^2 |grad L|^2
  MomentCheckReport moment_ratio;        // ratio vs (N+d-1)/(N eps^2), 5%
  bool pass = false;
  bool inconclusive = false;
};

// Resamples direction batches at fixed theta through the real query path
// (reconstruct_g + the sigma statistic). Requires a gradient oracle. When
// the objective's curvature bound says eps is too large for the leading
// terms to dominate, the report is flagged inconclusive instead of failed.
Proposition1Report check_proposition1(const Objective& objective,
                                      const ParamVector& theta, int n_directions,
                                      double epsilon, std::int64_t samples,
                                      std::uint64_t seed, SigmaFn sigma_fn = {},
                                      std::size_t workers = 1);

// Slope thresholds for the remainder-term scaling check (theory: the sigma
// remainder is O(eps^3) and the gradient remainder O(eps); measured slopes
// must clear these with room for mixed-order contamination).
inline constexpr double kSigmaRemainderSlopeMin = 2.5;
inline constexpr double kGradRemainderSlopeMin = 0.8;

struct ScalingPoint {
  double epsilon = 0.0;
  double g_remainder = 0.0;      // mean of |g|^2 minus its same-sample leading term
  double g_std_error = 0.0;
  double sigma_remainder = 0.0;  // mean of sigma^2 minus its leading term
  double sigma_std_error = 0.0;
  bool g_usable = false;         // above the 3-SE Monte Carlo noise floor
  bool sigma_usable = false;
};

struct ScalingReport {
  std::vector<ScalingPoint> points;
  double g_slope = 0.0;
  double sigma_slope = 0.0;
  int g_usable_points = 0;
  int sigma_usable_points = 0;
  bool g_inconclusive = false;      // fewer than 2 points above the noise floor
  bool sigma_inconclusive = false;
  bool pass = false;
};

// Measures the remainders with a same-sample control variate: each sample
// subtracts the exactly-known leading term computed from its own directions,
// which removes the dominant Monte-Carlo variance. Points still below the
// noise floor are excluded from the log-log slope fit.
ScalingReport check_epsilon_scaling(const Objective& objective,
                                    const ParamVector& theta, int n_directions,
                                    std::span<const double> epsilons,
                                    std::int64_t samples, std::uint64_t seed,
                                    std::size_t workers = 1);

}  // namespace fzoo
