#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "fzoo/perturbation.hpp"
#include "test_util.hpp"

using namespace fzoo;

namespace {

DirectionSeed rad(std::uint64_t s) { return DirectionSeed{s, DirectionKind::kRademacher}; }
DirectionSeed gauss(std::uint64_t s) { return DirectionSeed{s, DirectionKind::kGaussian}; }

// Smallest seed whose Rademacher direction at dimension d equals `pattern`.
std::uint64_t find_seed_with_signs(const std::vector<double>& pattern) {
  for (std::uint64_t s = 0; s < 100000; ++s) {
    bool match = true;
    for (std::size_t i = 0; i < pattern.size() && match; ++i)
      match = direction_entry(rad(s), i) == pattern[i];
    if (match) return s;
  }
  REQUIRE(false);
  return 0;
}

}  // namespace

TEST_CASE("direction generation is deterministic") {
  const auto a = generate_direction(rad(42), 5);
  const auto b = generate_direction(rad(42), 5);
  CHECK(a == b);
  const auto c = generate_direction(gauss(42), 5);
  const auto d = generate_direction(gauss(42), 5);
  CHECK(c == d);
  CHECK(a != c);
}

TEST_CASE("rademacher entries are balanced signs") {
  const std::size_t d = 10000;
  const auto u = generate_direction(rad(901), d);
  double sum = 0.0;
  for (double x : u) {
    CHECK((x == 1.0 || x == -1.0));
    sum += x;
  }
  CHECK(std::abs(sum / static_cast<double>(d)) <= 4.0 / std::sqrt(static_cast<double>(d)));
}

TEST_CASE("gaussian directions have unit-ish sample variance") {
  const std::size_t d = 100000;
  const auto z = generate_direction(gauss(7), d);
  double sum = 0.0;
  double sq = 0.0;
  for (double x : z) {
    sum += x;
    sq += x * x;
  }
  const double mean = sum / static_cast<double>(d);
  const double var = sq / static_cast<double>(d) - mean * mean;
  CHECK(var > 0.97);
  CHECK(var < 1.03);
}

TEST_CASE("zero dimension is rejected") {
  CHECK_THROWS_AS((void)generate_direction(rad(1), 0), std::invalid_argument);
}

TEST_CASE("zero-scale perturbation is a bitwise no-op") {
  ParamVector theta = ParamVector::flat({1.5, -0.0, 3e100, -7.25});
  const std::vector<double> before = theta.values();
  perturb_in_place(theta, rad(5), 0.0);
  for (std::size_t i = 0; i < before.size(); ++i) {
    // Compare representations, not values: -0.0 must stay -0.0.
    CHECK(std::signbit(theta.values()[i]) == std::signbit(before[i]));
    CHECK(theta.values()[i] == before[i]);
  }
}

TEST_CASE("non-finite scale is rejected") {
  ParamVector theta = ParamVector::flat({1.0, 2.0});
  CHECK_THROWS_AS(perturb_in_place(theta, rad(5), std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(perturb_in_place(theta, rad(5), INFINITY), std::invalid_argument);
}

TEST_CASE("perturb then restore drifts below 1e-12 relative") {
  rng::SplitMix64 gen(31337);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 1 + gen.next() % 30;
    std::vector<double> values(d);
    for (double& v : values)
      v = 10.0 * (rng::u01(gen.next()) - 0.5);
    ParamVector theta = ParamVector::flat(values);
    const std::vector<double> snapshot = theta.values();
    const DirectionSeed seed =
        (gen.next() & 1) ? rad(gen.next()) : gauss(gen.next());
    const double eps = std::pow(10.0, -6.0 + 6.0 * rng::u01(gen.next()));
    perturb_in_place(theta, seed, eps);
    perturb_in_place(theta, seed, -eps);
    for (std::size_t i = 0; i < d; ++i) {
      CHECK(std::abs(theta.values()[i] - snapshot[i]) <=
            1e-12 * std::max(1.0, std::abs(snapshot[i])));
    }
  }
}

TEST_CASE("hand-sized perturbation matches the direction signs") {
  const std::uint64_t s = find_seed_with_signs({1.0, -1.0});
  ParamVector theta = ParamVector::flat({0.0, 0.0});
  perturb_in_place(theta, rad(s), 0.5);
  CHECK(theta.values()[0] == 0.5);
  CHECK(theta.values()[1] == -0.5);
}

TEST_CASE("zero coefficients leave theta bitwise unchanged") {
  ParamVector theta = ParamVector::flat({1.0, -2.0, 3.0});
  const std::vector<double> before = theta.values();
  const std::vector<DirectionSeed> seeds = {rad(1), rad(2), gauss(3)};
  const std::vector<double> coeffs = {0.0, 0.0, 0.0};
  apply_update_from_seeds(theta, seeds, coeffs);
  CHECK(theta.values() == before);
}

TEST_CASE("update with c then -c round-trips") {
  ParamVector theta = ParamVector::flat({0.25, -4.0, 12.0, 0.5});
  const std::vector<double> snapshot = theta.values();
  const std::vector<DirectionSeed> seeds = {rad(77)};
  apply_update_from_seeds(theta, seeds, std::vector<double>{0.125});
  apply_update_from_seeds(theta, seeds, std::vector<double>{-0.125});
  for (std::size_t i = 0; i < snapshot.size(); ++i)
    CHECK(std::abs(theta.values()[i] - snapshot[i]) <=
          1e-12 * std::max(1.0, std::abs(snapshot[i])));
}

TEST_CASE("opposite directions with equal coefficients cancel") {
  // Seed search at d=4: find u_a = -u_b among small seeds.
  const std::size_t d = 4;
  std::uint64_t sa = 0;
  std::uint64_t sb = 0;
  bool found = false;
  for (std::uint64_t a = 0; a < 200 && !found; ++a) {
    const auto ua = generate_direction(rad(a), d);
    for (std::uint64_t b = a + 1; b < 400 && !found; ++b) {
      const auto ub = generate_direction(rad(b), d);
      bool opposite = true;
      for (std::size_t i = 0; i < d; ++i) opposite = opposite && (ua[i] == -ub[i]);
      if (opposite) {
        sa = a;
        sb = b;
        found = true;
      }
    }
  }
  REQUIRE(found);
  ParamVector theta = ParamVector::flat({1.0, 2.0, 3.0, 4.0});
  const std::vector<double> before = theta.values();
  const std::vector<DirectionSeed> seeds = {rad(sa), rad(sb)};
  const std::vector<double> coeffs = {0.375, 0.375};
  apply_update_from_seeds(theta, seeds, coeffs);
  for (std::size_t i = 0; i < d; ++i)
    CHECK(std::abs(theta.values()[i] - before[i]) <= 1e-15 * std::max(1.0, std::abs(before[i])));
}

TEST_CASE("mismatched seed and coefficient counts are rejected") {
  ParamVector theta = ParamVector::flat({1.0});
  const std::vector<DirectionSeed> seeds = {rad(1), rad(2)};
  const std::vector<double> coeffs = {1.0};
  CHECK_THROWS_AS(apply_update_from_seeds(theta, seeds, coeffs), std::invalid_argument);
}

TEST_CASE("non-finite coefficients are rejected") {
  ParamVector theta = ParamVector::flat({1.0});
  const std::vector<DirectionSeed> seeds = {rad(1)};
  const std::vector<double> coeffs = {std::nan("")};
  CHECK_THROWS_AS(apply_update_from_seeds(theta, seeds, coeffs), std::invalid_argument);
}

TEST_CASE("direction entries are O(1) addressable") {
  const DirectionSeed s = rad(321);
  const auto full = generate_direction(s, 64);
  for (std::size_t i = 0; i < 64; ++i) CHECK(direction_entry(s, i) == full[i]);
  const DirectionSeed g = gauss(321);
  const auto gfull = generate_direction(g, 64);
  for (std::size_t i = 0; i < 64; ++i) CHECK(direction_entry(g, i) == gfull[i]);
}
