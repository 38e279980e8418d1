#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "fzoo/estimators.hpp"
#include "fzoo/rng.hpp"
#include "test_util.hpp"

using namespace fzoo;

namespace {

const BatchSpec kNoData = full_batch(0);

DirectionSeed rad(std::uint64_t s) { return DirectionSeed{s, DirectionKind::kRademacher}; }
DirectionSeed gauss(std::uint64_t s) { return DirectionSeed{s, DirectionKind::kGaussian}; }

Objective spd_quadratic(std::size_t dim, std::uint64_t seed) {
  QuadraticSpec spec;
  spec.kind = QuadraticSpec::Kind::kRandomSpd;
  spec.dim = dim;
  spec.seed = seed;
  return quadratic_objective(spec);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("two-point estimate is exact on linear objectives") {
  const std::vector<double> c = {1.5, -2.0, 0.25};
  const Objective obj = linear_objective(c);
  ParamVector theta = ParamVector::flat({0.3, 0.4, -0.7});
  const std::vector<double> before = theta.values();

  for (double eps : {1e-1, 1e-3, 1e-6}) {
    const ClassicalZoEstimate est =
        classical_zo_gradient(obj, theta, kNoData, 12345, eps);
    const auto z = generate_direction(est.seed, 3);
    CHECK(est.projected == doctest::Approx(dot(c, z)).epsilon(1e-9));
    CHECK(est.forward_passes == 2);
    const auto dense = est.dense(3);
    for (std::size_t i = 0; i < 3; ++i)
      CHECK(dense[i] == doctest::Approx(dot(c, z) * z[i]).epsilon(1e-9));
  }
  // Perturb/restore leaves theta within drift tolerance.
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(std::abs(theta.values()[i] - before[i]) <= 1e-12);
}

TEST_CASE("averaged two-point estimates recover the gradient per coordinate") {
  // Point chosen so every gradient coordinate has the same magnitude. The
  // acceptance band is four standard errors, measured from the sample itself.
  QuadraticSpec spec;
  spec.kind = QuadraticSpec::Kind::kDiagonal;
  spec.dim = 3;
  spec.diagonal = {1.0, 2.0, 4.0};
  const Objective obj = quadratic_objective(spec);
  ParamVector theta = ParamVector::flat({1.0, 0.5, 0.25});
  const std::vector<double> grad = obj.gradient(theta, kNoData);  // (1,1,1)

  const int samples = 200000;
  std::vector<double> mean(3, 0.0);
  std::vector<double> sq(3, 0.0);
  for (int s = 0; s < samples; ++s) {
    const ClassicalZoEstimate est = classical_zo_gradient(
        obj, theta, kNoData, rng::gaussian_stream_seed(5, static_cast<std::uint64_t>(s)),
        1e-4);
    const auto z = generate_direction(est.seed, 3);
    for (std::size_t i = 0; i < 3; ++i) {
      const double v = est.projected * z[i];
      mean[i] += v;
      sq[i] += v * v;
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    mean[i] /= samples;
    const double var = sq[i] / samples - mean[i] * mean[i];
    const double se = std::sqrt(var / samples);
    CHECK(std::abs(mean[i] - grad[i]) <= std::max(0.02 * std::abs(grad[i]), 4.0 * se));
  }
}

TEST_CASE("two-point truncation error shrinks quadratically in epsilon") {
  // Richardson check on a smooth nonlinearity with nonzero third derivative:
  // proj(eps) = f'(0) + f'''(0) eps^2/6 + ..., so successive differences of
  // an eps, eps/2, eps/4 ladder shrink by about 4x.
  const Objective obj = rosenbrock_objective(2);
  ParamVector theta = ParamVector::flat({-0.3, 0.4});
  const std::uint64_t seed = 42;
  auto projected = [&](double eps) {
    return classical_zo_gradient(obj, theta, kNoData, seed, eps).projected;
  };
  const double d1 = projected(1e-2) - projected(5e-3);
  const double d2 = projected(5e-3) - projected(2.5e-3);
  CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("failed evaluations carry which side broke") {
  // Loss turns NaN on one side of the starting point.
  Objective obj;
  obj.name = "poisoned";
  obj.dim = 1;
  obj.shapes = {LayerShape{"theta", 1, 1}};
  obj.evaluate = [](const ParamVector& theta, const BatchSpec&) {
    return theta.values()[0] < 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                   : theta.values()[0];
  };
  ParamVector theta = ParamVector::flat({0.0});
  try {
    (void)classical_zo_gradient(obj, theta, kNoData, 9, 0.5);
    CHECK(false);
  } catch (const EvaluationError& e) {
    // One of the two probes lands at -0.5 regardless of the z sign.
    CHECK((e.which == "plus" || e.which == "minus"));
  }
  // theta is restored even on the failure path.
  CHECK(theta.values()[0] == 0.0);
}

TEST_CASE("loss queries: zero epsilon collapses to the base loss") {
  const Objective obj = spd_quadratic(6, 3);
  ParamVector theta(testutil::gaussian_vector(10, 6), obj.shapes);
  const std::vector<DirectionSeed> seeds = {rad(1), rad(2), rad(3), rad(4)};
  const LossQueryResult q = query_losses(obj, theta, kNoData, seeds, 0.0);
  for (double l : q.perturbed) CHECK(l == q.base_loss);
}

TEST_CASE("loss queries on a linear objective are exactly linear") {
  const std::vector<double> c = {0.5, -1.25, 2.0, 0.75};
  const Objective obj = linear_objective(c);
  ParamVector theta = ParamVector::flat({1.0, 2.0, 3.0, 4.0});
  const std::vector<DirectionSeed> seeds = {rad(11), rad(12), rad(13)};
  const double eps = 1e-3;
  const LossQueryResult q = query_losses(obj, theta, kNoData, seeds, eps);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto u = generate_direction(seeds[i], 4);
    CHECK(q.perturbed[i] - q.base_loss ==
          doctest::Approx(eps * dot(c, u)).epsilon(1e-10));
  }
}

TEST_CASE("query engines agree through a real multilayer objective") {
  auto data = std::make_shared<const Dataset>(two_gaussians(16, 4, 3.0, 31));
  ScorerSpec scorer;
  scorer.kind = ScorerSpec::Kind::kMlp;
  scorer.hidden = 5;
  const Objective obj = mlp_softmax_objective(data, scorer);
  ParamVector theta(testutil::gaussian_vector(77, obj.dim, 0.4), obj.shapes);

  std::vector<DirectionSeed> seeds;
  for (std::uint64_t i = 0; i < 8; ++i) seeds.push_back(rad(500 + i));
  ParamVector t1 = theta;
  ParamVector t2 = theta;
  const LossQueryResult seq =
      query_losses(obj, t1, full_batch(16), seeds, 1e-3, QueryEngine::kSequential);
  const LossQueryResult bat =
      query_losses(obj, t2, full_batch(16), seeds, 1e-3, QueryEngine::kBatched);
  CHECK(seq.base_loss == doctest::Approx(bat.base_loss).epsilon(1e-12));
  for (std::size_t i = 0; i < seeds.size(); ++i)
    CHECK(seq.perturbed[i] == doctest::Approx(bat.perturbed[i]).epsilon(1e-9));
}

TEST_CASE("failed perturbed evaluations name the direction") {
  Objective obj;
  obj.name = "poisoned";
  obj.dim = 2;
  obj.shapes = {LayerShape{"theta", 2, 1}};
  // Finite only at the unperturbed point.
  obj.evaluate = [](const ParamVector& theta, const BatchSpec&) {
    return (theta.values()[0] == 0.0 && theta.values()[1] == 0.0)
               ? 1.0
               : std::numeric_limits<double>::quiet_NaN();
  };
  ParamVector theta = ParamVector::zeros(2);
  const std::vector<DirectionSeed> seeds = {rad(1), rad(2)};
  try {
    (void)query_losses(obj, theta, kNoData, seeds, 0.5);
    CHECK(false);
  } catch (const EvaluationError& e) {
    CHECK(e.which == "direction 0");
    CHECK(e.direction_index == 0);
  }
  CHECK(theta.values()[0] == 0.0);
}

TEST_CASE("sigma is the Bessel deviation of the perturbed losses") {
  CHECK(sigma_of(std::vector<double>{1.0, 2.0, 3.0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sigma_of(std::vector<double>{4.0, 4.0, 4.0, 4.0}) == 0.0);
  CHECK_THROWS_AS((void)sigma_of(std::vector<double>{1.0}), std::invalid_argument);

  // Shift robustness of the two-pass formula: residuals against the mean keep
  // absolute error near ulp(shift) ~ 1e-10, so unit-scale spread survives a
  // 1e6 offset to ~1e-9 (a naive sum-of-squares formula would lose ~12 digits).
  const std::vector<double> base = {0.11, 0.47, 0.32, 0.91, 0.26};
  std::vector<double> shifted = base;
  for (double& v : shifted) v += 1e6;
  CHECK(std::abs(sigma_of(base) - sigma_of(shifted)) <= 1e-9);
}

TEST_CASE("sigma never reads the base loss") {
  const Objective obj = spd_quadratic(5, 8);
  ParamVector theta(testutil::gaussian_vector(3, 5), obj.shapes);
  const std::vector<DirectionSeed> seeds = {rad(1), rad(2), rad(3)};
  LossQueryResult q = query_losses(obj, theta, kNoData, seeds, 1e-3);
  const double sigma_before = sigma_of(q.perturbed);
  q.base_loss = std::numeric_limits<double>::quiet_NaN();
  CHECK(sigma_of(q.perturbed) == sigma_before);
}

TEST_CASE("projected gradients: linear closed form at d=2, N=2") {
  const std::vector<double> c = {2.0, -0.5};
  const Objective obj = linear_objective(c);
  ParamVector theta = ParamVector::flat({0.1, 0.2});
  const std::vector<DirectionSeed> seeds = {rad(6), rad(7)};
  const double eps = 0.01;
  const LossQueryResult q = query_losses(obj, theta, kNoData, seeds, eps);
  const FzooEstimate est = fzoo_estimate(q);

  const auto u1 = generate_direction(seeds[0], 2);
  const auto u2 = generate_direction(seeds[1], 2);
  const double d1 = eps * dot(c, u1);
  const double d2 = eps * dot(c, u2);
  const double mean = 0.5 * (d1 + d2);
  const double sigma =
      std::sqrt((d1 - mean) * (d1 - mean) + (d2 - mean) * (d2 - mean));
  CHECK(est.sigma == doctest::Approx(sigma).epsilon(1e-10));
  CHECK(est.projected_grads[0] == doctest::Approx(d1 / (2.0 * sigma)).epsilon(1e-9));
  CHECK(est.projected_grads[1] == doctest::Approx(d2 / (2.0 * sigma)).epsilon(1e-9));
  CHECK(est.forward_passes == 3);
}

TEST_CASE("projected gradients are invariant under positive affine loss maps") {
  const Objective obj = spd_quadratic(8, 5);
  ParamVector theta(testutil::gaussian_vector(21, 8), obj.shapes);
  std::vector<DirectionSeed> seeds;
  for (std::uint64_t i = 0; i < 6; ++i) seeds.push_back(rad(40 + i));
  const LossQueryResult q = query_losses(obj, theta, kNoData, seeds, 1e-3);

  LossQueryResult scaled = q;
  const double a = 7.5;
  const double b = -3.25;
  scaled.base_loss = a * q.base_loss + b;
  for (double& l : scaled.perturbed) l = a * l + b;

  const FzooEstimate e1 = fzoo_estimate(q);
  const FzooEstimate e2 = fzoo_estimate(scaled);
  for (std::size_t i = 0; i < e1.projected_grads.size(); ++i)
    CHECK(e2.projected_grads[i] ==
          doctest::Approx(e1.projected_grads[i]).epsilon(1e-12));
}

TEST_CASE("flat batches floor sigma instead of dividing by zero") {
  LossQueryResult q;
  q.base_loss = 2.0;
  q.perturbed = {2.0, 2.0, 2.0};
  q.seeds = {rad(1), rad(2), rad(3)};
  q.epsilon = 1e-3;
  q.dim = 4;
  const FzooEstimate est = fzoo_estimate(q);
  CHECK(est.sigma == 0.0);
  CHECK(est.sigma_floored);
  for (double pg : est.projected_grads) CHECK(pg == 0.0);
}

TEST_CASE("sigma override skips the two-sample requirement") {
  LossQueryResult q;
  q.base_loss = 1.0;
  q.perturbed = {1.5};
  q.seeds = {rad(1)};
  q.epsilon = 0.1;
  q.dim = 2;
  CHECK_THROWS_AS((void)fzoo_estimate(q), std::invalid_argument);
  const FzooEstimate est = fzoo_estimate(q, 0.25);
  CHECK(est.projected_grads[0] == doctest::Approx(0.5 / (1.0 * 0.25)));
}

TEST_CASE("reconstructed estimate has closed form on linear objectives") {
  const std::vector<double> c = {1.0, -2.0, 3.0};
  const Objective obj = linear_objective(c);
  ParamVector theta = ParamVector::zeros(3);
  std::vector<DirectionSeed> seeds = {rad(3), rad(4), rad(5), rad(6)};
  const LossQueryResult q = query_losses(obj, theta, kNoData, seeds, 1e-2);
  const std::vector<double> g = reconstruct_g(q);

  // (1/N) sum_i u_i u_i' c, epsilon cancels.
  std::vector<double> want(3, 0.0);
  for (const auto& s : seeds) {
    const auto u = generate_direction(s, 3);
    const double proj = dot(c, u);
    for (std::size_t k = 0; k < 3; ++k) want[k] += proj * u[k];
  }
  for (double& v : want) v /= static_cast<double>(seeds.size());
  for (std::size_t k = 0; k < 3; ++k)
    CHECK(g[k] == doctest::Approx(want[k]).epsilon(1e-10));
}

TEST_CASE("reconstruction at N=1, d=1 is the signed difference quotient") {
  const Objective obj = linear_objective({2.0});
  ParamVector theta = ParamVector::flat({1.0});
  const std::vector<DirectionSeed> seeds = {rad(9)};
  const double eps = 0.125;
  const LossQueryResult q = query_losses(obj, theta, kNoData, seeds, eps);
  const std::vector<double> g = reconstruct_g(q);
  const double u = generate_direction(seeds[0], 1)[0];
  CHECK(g[0] == doctest::Approx(u * (q.perturbed[0] - q.base_loss) / eps).epsilon(1e-12));
}

TEST_CASE("seed-form update and dense reconstruction agree") {
  const Objective obj = spd_quadratic(10, 2);
  ParamVector theta(testutil::gaussian_vector(55, 10), obj.shapes);
  std::vector<DirectionSeed> seeds;
  for (std::uint64_t i = 0; i < 8; ++i) seeds.push_back(rad(70 + i));
  const LossQueryResult q = query_losses(obj, theta, kNoData, seeds, 1e-4);
  const FzooEstimate est = fzoo_estimate(q);
  const std::vector<double> g = reconstruct_g(q);

  // g = (sigma_eff / eps) * sum_i pg_i u_i.
  const double sigma_eff = std::max(est.sigma, kSigmaFloor);
  std::vector<double> from_seeds(10, 0.0);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto u = generate_direction(seeds[i], 10);
    for (std::size_t k = 0; k < 10; ++k)
      from_seeds[k] += est.projected_grads[i] * u[k];
  }
  for (double& v : from_seeds) v *= sigma_eff / q.epsilon;
  CHECK(testutil::rel_vec_error(from_seeds, g) <= 1e-10);
}

TEST_CASE("mean reconstructed estimate aligns with the true gradient") {
  const Objective obj = spd_quadratic(20, 6);
  ParamVector theta(testutil::gaussian_vector(91, 20), obj.shapes);
  const std::vector<double> grad = obj.gradient(theta, kNoData);

  std::vector<double> mean(20, 0.0);
  const int resamples = 10000;
  for (int s = 0; s < resamples; ++s) {
    std::vector<DirectionSeed> seeds;
    for (std::uint64_t i = 0; i < 8; ++i)
      seeds.push_back(
          rad(rng::direction_stream_seed(123, static_cast<std::uint64_t>(s), i)));
    const LossQueryResult q = query_losses(obj, theta, kNoData, seeds, 1e-4);
    const std::vector<double> g = reconstruct_g(q);
    for (std::size_t k = 0; k < 20; ++k) mean[k] += g[k];
  }
  for (double& v : mean) v /= resamples;

  const double cosine =
      dot(mean, grad) / (testutil::norm2(mean) * testutil::norm2(grad));
  CHECK(cosine > 0.95);
}
