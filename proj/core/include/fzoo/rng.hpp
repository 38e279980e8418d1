#pragma once

#include <cmath>
#include <cstdint>

// Deterministic random streams.
//
// Every random quantity in this library comes from SplitMix64. The state
// advances by a fixed odd constant and each output is a pure function of the
// state, which makes the sequence counter-based: element i of a stream can be
// computed directly as finalize(seed + (i+1)*GAMMA) without generating the
// first i elements. Direction slices (e.g. one layer's sign block) can
// therefore be regenerated independently of the rest of the vector.
//
// The stream layout below is frozen. Checkpoints and recorded runs encode
// raw 64-bit seeds, so changing the finalizer, GAMMA, the u01 mapping, the
// normal inverse CDF, or the derive() chain is a breaking format change.

namespace fzoo::rng {

inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

// splitmix64 output function (Stafford variant 13).
constexpr std::uint64_t finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    state_ += kGamma;
    return finalize(state_);
  }

  // Output i (0-based) of the stream started at the construction seed.
  static constexpr std::uint64_t at(std::uint64_t seed, std::uint64_t i) {
    return finalize(seed + (i + 1) * kGamma);
  }

 private:
  std::uint64_t state_;
};

// Uniform double in the open interval (0,1): 53 high bits plus a half-ulp
// offset, so 0 and 1 are never produced and the inverse CDF below is total.
// For the very top words the +0.5 rounds up to exactly 1.0; clamping to the
// largest double below 1 keeps the interval open (all other words unchanged).
inline double u01(std::uint64_t word) {
  const double x = (static_cast<double>(word >> 11) + 0.5) * 0x1.0p-53;
  return x < 1.0 ? x : 0x1.fffffffffffffp-1;
}

// Inverse of the standard normal CDF (Acklam's rational approximation,
// relative error below 1.2e-9 across (0,1)). One uniform word in, one
// normal deviate out, so normal streams are counter-based too.
inline double inverse_normal_cdf(double p) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  static constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Stream-seed derivation. Each stage xors the parent seed with the finalized
// (value + tag) and re-finalizes; finalize() is a bijection, so distinct
// values yield distinct child seeds under a fixed parent.
inline constexpr std::uint64_t kTagStep = 0x5354455021ULL;       // "STEP!"
inline constexpr std::uint64_t kTagDirection = 0x44495221ULL;    // "DIR!"
inline constexpr std::uint64_t kTagEpoch = 0x45504f4348ULL;      // "EPOCH"
inline constexpr std::uint64_t kTagClassicalZo = 0x475a4f21ULL;  // "GZO!"
inline constexpr std::uint64_t kTagInit = 0x494e4954ULL;         // "INIT"

constexpr std::uint64_t derive(std::uint64_t parent, std::uint64_t value,
                               std::uint64_t tag) {
  return finalize(parent ^ finalize(value + tag));
}

// Seed of the Rademacher stream for direction `index` at step `step`.
constexpr std::uint64_t direction_stream_seed(std::uint64_t run_seed,
                                              std::uint64_t step,
                                              std::uint64_t index) {
  return derive(derive(run_seed, step, kTagStep), index, kTagDirection);
}

// Seed of the Gaussian probe stream for a two-point estimate at step `step`.
constexpr std::uint64_t gaussian_stream_seed(std::uint64_t run_seed,
                                             std::uint64_t step) {
  return derive(derive(run_seed, step, kTagStep), 0, kTagClassicalZo);
}

// Seed of the epoch-shuffle stream for minibatch sampling.
constexpr std::uint64_t epoch_stream_seed(std::uint64_t run_seed,
                                          std::uint64_t epoch) {
  return derive(run_seed, epoch, kTagEpoch);
}

}  // namespace fzoo::rng
