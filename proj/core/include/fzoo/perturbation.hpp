#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fzoo/param_vector.hpp"
#include "fzoo/rng.hpp"

// Seed-addressed perturbation directions.
//
// A direction is never stored with the model state; it is regenerated on
// demand from its DirectionSeed. Perturbing, restoring, and applying updates
// all replay the same stream, so memory stays O(d) no matter how many
// directions a step uses.

namespace fzoo {

enum class DirectionKind : std::uint8_t {
  kRademacher = 0,  // entries +/-1, one uniform bit each (bit 1 -> +1)
  kGaussian = 1,    // standard normal entries, one uniform word each
};

struct DirectionSeed {
  std::uint64_t seed = 0;
  DirectionKind kind = DirectionKind::kRademacher;

  friend bool operator==(const DirectionSeed&, const DirectionSeed&) = default;
};

// Entry i of the direction addressed by `seed`, computed in O(1).
double direction_entry(const DirectionSeed& seed, std::size_t i);

// Regenerates the full direction. Throws std::invalid_argument if d == 0.
std::vector<double> generate_direction(const DirectionSeed& seed, std::size_t d);

// Same, writing into caller storage (out.size() defines d, must be > 0).
void fill_direction(const DirectionSeed& seed, std::span<double> out);

// theta += scale * u(seed). scale == 0 leaves theta bitwise untouched;
// restoring is perturbing again with -scale (regenerate-and-subtract), which
// matches the original to ~1e-12 relative but not necessarily bitwise.
// Throws std::invalid_argument on non-finite scale.
void perturb_in_place(ParamVector& theta, const DirectionSeed& seed, double scale);

// theta -= sum_i coefficients[i] * u(seeds[i]), regenerating each direction
// in turn; scratch stays O(1) per entry. Zero coefficients are skipped so an
// all-zero update leaves theta bitwise untouched. Throws on size mismatch or
// non-finite coefficients.
void apply_update_from_seeds(ParamVector& theta,
                             std::span<const DirectionSeed> seeds,
                             std::span<const double> coefficients);

}  // namespace fzoo
