#include "fzoo/perturbation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fzoo {

namespace {

inline double entry_from_word(DirectionKind kind, std::uint64_t word) {
  if (kind == DirectionKind::kRademacher) {
    return (word >> 63) ? 1.0 : -1.0;
  }
  return rng::inverse_normal_cdf(rng::u01(word));
}

}  // namespace

double direction_entry(const DirectionSeed& seed, std::size_t i) {
  return entry_from_word(seed.kind, rng::SplitMix64::at(seed.seed, i));
}

std::vector<double> generate_direction(const DirectionSeed& seed, std::size_t d) {
  if (d == 0) {
    throw std::invalid_argument("generate_direction: dimension must be positive");
  }
  std::vector<double> out(d);
  fill_direction(seed, out);
  return out;
}

void fill_direction(const DirectionSeed& seed, std::span<double> out) {
  if (out.empty()) {
    throw std::invalid_argument("fill_direction: dimension must be positive");
  }
  rng::SplitMix64 stream(seed.seed);
  for (double& v : out) v = entry_from_word(seed.kind, stream.next());
}

void perturb_in_place(ParamVector& theta, const DirectionSeed& seed, double scale) {
  if (!std::isfinite(scale)) {
    throw std::invalid_argument("perturb_in_place: non-finite scale");
  }
  if (scale == 0.0) return;  // adding +/-0.0 could still flip signed zeros
  rng::SplitMix64 stream(seed.seed);
  for (double& v : theta.values()) {
    v += scale * entry_from_word(seed.kind, stream.next());
  }
}

void apply_update_from_seeds(ParamVector& theta,
                             std::span<const DirectionSeed> seeds,
                             std::span<const double> coefficients) {
  if (seeds.size() != coefficients.size()) {
    throw std::invalid_argument(
        "apply_update_from_seeds: " + std::to_string(seeds.size()) +
        " seeds vs " + std::to_string(coefficients.size()) + " coefficients");
  }
  for (double c : coefficients) {
    if (!std::isfinite(c)) {
      throw std::invalid_argument("apply_update_from_seeds: non-finite coefficient");
    }
  }
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    const double c = coefficients[k];
    if (c == 0.0) continue;
    rng::SplitMix64 stream(seeds[k].seed);
    for (double& v : theta.values()) {
      v -= c * entry_from_word(seeds[k].kind, stream.next());
    }
  }
}

}  // namespace fzoo
