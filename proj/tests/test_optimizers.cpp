#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "fzoo/optimizers.hpp"
#include "fzoo/rng.hpp"
#include "test_util.hpp"

using namespace fzoo;

namespace {

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

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  return dot(a, b) / (testutil::norm2(a) * testutil::norm2(b));
}

// First run seed whose two step-0 directions differ in their single entry.
std::uint64_t seed_with_opposed_pair() {
  for (std::uint64_t r = 1; r < 200; ++r) {
    const double u0 = generate_direction(
        DirectionSeed{rng::direction_stream_seed(r, 0, 0), DirectionKind::kRademacher},
        1)[0];
    const double u1 = generate_direction(
        DirectionSeed{rng::direction_stream_seed(r, 0, 1), DirectionKind::kRademacher},
        1)[0];
    if (u0 != u1) return r;
  }
  return 0;
}

}  // namespace

TEST_CASE("spread-normalized step has closed form at d=1, N=2") {
  // Linear loss 2*theta. With one +1 and one -1 direction the two perturbed
  // losses straddle the base loss symmetrically, so sigma = 2*sqrt(2)*eps and
  // the update is exactly eta/sqrt(2) downhill, independent of eps.
  const std::uint64_t run_seed = seed_with_opposed_pair();
  REQUIRE(run_seed != 0);

  const Objective obj = linear_objective({2.0});
  OptimizerConfig config;
  config.kind = OptimizerKind::kFzoo;
  config.eta = 0.1;
  config.epsilon = 1e-3;
  config.n_directions = 2;
  config.run_seed = run_seed;

  OptimizerState state{ParamVector::flat({0.25})};
  const StepReport report = fzoo_step(config, obj, state);

  CHECK(state.theta.values()[0] ==
        doctest::Approx(0.25 - 0.1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(report.loss == doctest::Approx(2.0 * 0.25).epsilon(1e-12));
  CHECK(*report.sigma == doctest::Approx(2.0 * std::sqrt(2.0) * 1e-3).epsilon(1e-10));
  CHECK(report.step_norm == doctest::Approx(0.1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(report.forward_passes == 3);
  CHECK(report.forward_cum == 3);
  CHECK(report.step == 1);
  CHECK(state.degenerate_sigma_batches == 0);
}

TEST_CASE("flat losses leave the parameters bitwise untouched") {
  const Objective obj = linear_objective({0.0, 0.0});
  OptimizerConfig config;
  config.kind = OptimizerKind::kFzoo;
  config.eta = 0.5;
  config.epsilon = 0.1;
  config.n_directions = 4;
  config.run_seed = 3;

  const std::vector<double> start = {0.125, -2.75};
  OptimizerState state{ParamVector::flat(start)};
  const StepReport report = fzoo_step(config, obj, state);

  CHECK(state.theta.values() == start);  // exact, update skipped entirely
  CHECK(*report.sigma == 0.0);
  CHECK(report.step_norm == 0.0);
  CHECK(state.degenerate_sigma_batches == 1);
}

TEST_CASE("variance-reuse first step matches the plain optimizer at half N") {
  const Objective obj = spd_quadratic(6, 14);
  const ParamVector theta0(testutil::gaussian_vector(8, 6), obj.shapes);

  OptimizerConfig plain;
  plain.kind = OptimizerKind::kFzoo;
  plain.eta = 0.05;
  plain.epsilon = 1e-4;
  plain.n_directions = 4;
  plain.run_seed = 21;

  OptimizerConfig reuse = plain;
  reuse.kind = OptimizerKind::kFzooR;
  reuse.n_directions = 8;

  OptimizerState sp{theta0};
  OptimizerState sr{theta0};
  const StepReport rp = fzoo_step(plain, obj, sp);
  const StepReport rr = fzoo_r_step(reuse, obj, sr);

  CHECK(sp.theta.values() == sr.theta.values());  // bitwise
  CHECK(rp.loss == rr.loss);
  CHECK(*rp.sigma == *rr.sigma);
  CHECK(rp.forward_passes == 5);
  CHECK(rr.forward_passes == 5);
  CHECK(sr.previous_losses.size() == 4);
  CHECK(sp.previous_losses.empty());
}

TEST_CASE("variance reuse pools current and stored losses") {
  const Objective obj = spd_quadratic(5, 9);
  OptimizerConfig config;
  config.kind = OptimizerKind::kFzooR;
  config.eta = 0.02;
  config.epsilon = 1e-4;
  config.n_directions = 8;
  config.run_seed = 33;

  OptimizerState state{ParamVector(testutil::gaussian_vector(12, 5), obj.shapes)};
  (void)fzoo_r_step(config, obj, state);
  const std::vector<double> stored = state.previous_losses;

  // Replay step 2's queries by hand before taking it.
  ParamVector probe = state.theta;
  std::vector<DirectionSeed> seeds;
  for (std::uint64_t i = 0; i < 4; ++i) {
    seeds.push_back(DirectionSeed{rng::direction_stream_seed(33, 1, i),
                                  DirectionKind::kRademacher});
  }
  const LossQueryResult q =
      query_losses(obj, probe, full_batch(0), seeds, config.epsilon);
  std::vector<double> pool = q.perturbed;
  pool.insert(pool.end(), stored.begin(), stored.end());

  const StepReport second = fzoo_r_step(config, obj, state);
  CHECK(*second.sigma == sigma_of(pool));
  CHECK(second.forward_passes == 5);  // still N/2 + 1
  CHECK(state.previous_losses == q.perturbed);
}

TEST_CASE("two-point step moves along the sampled direction") {
  const std::vector<double> c = {1.5, -2.0, 0.25};
  const Objective obj = linear_objective(c);
  OptimizerConfig config;
  config.kind = OptimizerKind::kZoSgd;
  config.eta = 0.05;
  config.epsilon = 1e-3;
  config.run_seed = 77;

  const std::vector<double> start = {0.3, 0.4, -0.7};
  OptimizerState state{ParamVector::flat(start)};
  const StepReport report = zo_sgd_step(config, obj, state);

  const auto z = generate_direction(
      DirectionSeed{rng::gaussian_stream_seed(77, 0), DirectionKind::kGaussian}, 3);
  const double proj = dot(c, z);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(state.theta.values()[i] ==
          doctest::Approx(start[i] - 0.05 * proj * z[i]).epsilon(1e-10));
  }
  CHECK(report.loss == doctest::Approx(dot(c, start)).epsilon(1e-10));
  CHECK(report.forward_passes == 2);
  CHECK(*report.grad_norm == doctest::Approx(testutil::norm2(c)).epsilon(1e-12));
}

TEST_CASE("normalized steps have length eta and ignore loss scale") {
  const Objective obj = spd_quadratic(8, 4);
  OptimizerConfig config;
  config.kind = OptimizerKind::kNormalizedSgd;
  config.eta = 0.01;

  OptimizerState state{ParamVector(testutil::gaussian_vector(5, 8), obj.shapes)};
  const StepReport report = normalized_sgd_step(config, obj, state);
  CHECK(report.step_norm == doctest::Approx(0.01).epsilon(1e-12));

  // Multiplying the loss by 40 must not change the trajectory.
  const Objective scaled = affine_transform(obj, 40.0, -3.0);
  OptimizerState s1{ParamVector(testutil::gaussian_vector(5, 8), obj.shapes)};
  OptimizerState s2{s1.theta};
  for (int k = 0; k < 5; ++k) {
    (void)normalized_sgd_step(config, obj, s1);
    (void)normalized_sgd_step(config, scaled, s2);
  }
  CHECK(testutil::max_rel_diff(s1.theta.values(), s2.theta.values()) <= 1e-12);
}

TEST_CASE("normalized descent decreases a well-conditioned quadratic") {
  QuadraticSpec spec;
  spec.kind = QuadraticSpec::Kind::kDiagonal;
  spec.dim = 3;
  spec.diagonal = {1.0, 2.0, 4.0};
  const Objective obj = quadratic_objective(spec);

  OptimizerConfig config;
  config.kind = OptimizerKind::kNormalizedSgd;
  config.eta = 0.01;
  OptimizerState state{ParamVector::flat({1.0, 1.0, 1.0})};
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 20; ++k) {
    const StepReport r = normalized_sgd_step(config, obj, state);
    CHECK(r.loss < prev);
    prev = r.loss;
  }
  CHECK(obj.evaluate(state.theta, full_batch(0)) < prev);
}

TEST_CASE("plain gradient descent contracts each mode geometrically") {
  QuadraticSpec spec;
  spec.kind = QuadraticSpec::Kind::kDiagonal;
  spec.dim = 2;
  spec.diagonal = {1.0, 4.0};
  const Objective obj = quadratic_objective(spec);

  OptimizerConfig config;
  config.kind = OptimizerKind::kSgd;
  config.eta = 0.4;  // stable: eta < 2 / lambda_max = 0.5
  OptimizerState state{ParamVector::flat({1.0, 1.0})};
  for (int k = 0; k < 5; ++k) (void)sgd_step(config, obj, state);

  // theta_i(k) = (1 - eta * lambda_i)^k * theta_i(0)
  CHECK(state.theta.values()[0] ==
        doctest::Approx(std::pow(1.0 - 0.4 * 1.0, 5)).epsilon(1e-12));
  CHECK(state.theta.values()[1] ==
        doctest::Approx(std::pow(1.0 - 0.4 * 4.0, 5)).epsilon(1e-12));
}

TEST_CASE("adaptive moments: first step and forward-equivalent billing") {
  const Objective obj = linear_objective({3.0});
  OptimizerConfig config;
  config.kind = OptimizerKind::kAdam;
  config.eta = 0.05;

  OptimizerState state{ParamVector::flat({0.5})};
  const StepReport r1 = adam_step(config, obj, state);
  // mhat = g, vhat = g^2 after bias correction, so the first step is
  // eta * g / (|g| + 1e-8) = eta * sign(g), up to the 1e-8 damping.
  CHECK(state.theta.values()[0] ==
        doctest::Approx(0.5 - 0.05 * 3.0 / (3.0 + 1e-8)).epsilon(1e-9));
  CHECK(r1.forward_passes == 4);

  const RunResult rest = run_from(config, obj, std::move(state),
                                  Budget{Budget::Unit::kSteps, 7});
  CHECK(rest.state.step == 7);
  CHECK(rest.state.forward_passes == 28);
  for (const StepReport& r : rest.reports) CHECK(r.forward_passes == 4);
}

TEST_CASE("rate cap: a capped large eta equals an uncapped eta of cap*sigma") {
  const Objective obj = spd_quadratic(7, 18);
  const ParamVector theta0(testutil::gaussian_vector(40, 7), obj.shapes);

  OptimizerConfig base;
  base.kind = OptimizerKind::kFzoo;
  base.eta = 0.1;
  base.epsilon = 1e-3;
  base.n_directions = 6;
  base.run_seed = 55;

  OptimizerState probe{theta0};
  const StepReport first = fzoo_step(base, obj, probe);
  const double sigma = *first.sigma;
  REQUIRE(sigma > kSigmaFloor);

  OptimizerConfig capped = base;
  capped.eta = 1e9;
  capped.eta_over_sigma_cap = 0.25;
  OptimizerConfig manual = base;
  manual.eta = 0.25 * sigma;

  OptimizerState sc{theta0};
  OptimizerState sm{theta0};
  (void)fzoo_step(capped, obj, sc);
  (void)fzoo_step(manual, obj, sm);
  CHECK(sc.theta.values() == sm.theta.values());  // bitwise
}

TEST_CASE("config validation names the offending field") {
  const Objective quad = spd_quadratic(3, 1);
  OptimizerConfig c;

  c.eta = 0.0;
  CHECK_THROWS_AS(validate_config(c, quad), std::invalid_argument);
  c.eta = 0.1;

  c.epsilon = 0.0;
  CHECK_THROWS_AS(validate_config(c, quad), std::invalid_argument);
  c.epsilon = 1e-3;

  c.n_directions = 1;
  CHECK_THROWS_AS(validate_config(c, quad), std::invalid_argument);

  c.kind = OptimizerKind::kFzooR;
  c.n_directions = 2;
  CHECK_THROWS_AS(validate_config(c, quad), std::invalid_argument);
  c.n_directions = 5;
  CHECK_THROWS_AS(validate_config(c, quad), std::invalid_argument);
  c.n_directions = 8;
  CHECK_NOTHROW(validate_config(c, quad));

  c.eta_over_sigma_cap = -1.0;
  CHECK_THROWS_AS(validate_config(c, quad), std::invalid_argument);
  c.eta_over_sigma_cap.reset();

  // Gradient-based kinds refuse objectives without an oracle.
  Objective no_oracle = linear_objective({1.0});
  no_oracle.gradient = nullptr;
  c.kind = OptimizerKind::kSgd;
  CHECK_THROWS_AS(validate_config(c, no_oracle), std::invalid_argument);

  auto data = std::make_shared<const Dataset>(two_gaussians(6, 2, 3.0, 1));
  const Objective logit = logistic_objective(data, 0.0);
  OptimizerConfig cb;
  cb.kind = OptimizerKind::kZoSgd;
  cb.batch_size = 7;  // dataset only has 6 rows
  CHECK_THROWS_AS(validate_config(cb, logit), std::invalid_argument);
}

TEST_CASE("runs respect both budget units") {
  const Objective obj = spd_quadratic(4, 6);
  OptimizerConfig config;
  config.kind = OptimizerKind::kFzoo;
  config.eta = 0.01;
  config.epsilon = 1e-3;
  config.n_directions = 8;
  config.run_seed = 2;
  const ParamVector theta0(testutil::gaussian_vector(7, 4), obj.shapes);

  const RunResult empty = run(config, obj, theta0, Budget{Budget::Unit::kSteps, 0});
  CHECK(empty.reports.empty());
  CHECK(empty.complete);
  CHECK(empty.state.step == 0);

  const RunResult steps = run(config, obj, theta0, Budget{Budget::Unit::kSteps, 5});
  CHECK(steps.reports.size() == 5);
  CHECK(steps.state.step == 5);
  CHECK(steps.state.forward_passes == 45);

  // 9 forwards per step: the run may overshoot 20 by at most one step.
  const RunResult fw = run(config, obj, theta0, Budget{Budget::Unit::kForwards, 20});
  CHECK(fw.reports.size() == 3);
  CHECK(fw.state.forward_passes == 27);
  CHECK(fw.state.forward_passes - fw.reports.back().forward_passes < 20);

  std::int64_t total = 0;
  for (const StepReport& r : fw.reports) total += r.forward_passes;
  CHECK(total == fw.state.forward_passes);
}

TEST_CASE("identical configurations reproduce runs bitwise") {
  const Objective obj = spd_quadratic(6, 11);
  OptimizerConfig config;
  config.kind = OptimizerKind::kFzoo;
  config.eta = 0.02;
  config.epsilon = 1e-4;
  config.n_directions = 4;
  config.run_seed = 101;
  const ParamVector theta0(testutil::gaussian_vector(31, 6), obj.shapes);
  const Budget budget{Budget::Unit::kSteps, 10};

  const RunResult a = run(config, obj, theta0, budget);
  const RunResult b = run(config, obj, theta0, budget);
  REQUIRE(a.reports.size() == b.reports.size());
  CHECK(a.state.theta.values() == b.state.theta.values());
  for (std::size_t i = 0; i < a.reports.size(); ++i) {
    CHECK(a.reports[i].loss == b.reports[i].loss);
    CHECK(*a.reports[i].sigma == *b.reports[i].sigma);
    CHECK(a.reports[i].step_norm == b.reports[i].step_norm);
    CHECK(a.reports[i].forward_cum == b.reports[i].forward_cum);
  }
}

TEST_CASE("a failing evaluation stops the run and keeps partial reports") {
  int calls = 0;
  Objective obj;
  obj.name = "fails-later";
  obj.dim = 2;
  obj.shapes = {LayerShape{"theta", 2, 1}};
  obj.evaluate = [&calls](const ParamVector&, const BatchSpec&) {
    return ++calls <= 6 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
  };

  OptimizerConfig config;
  config.kind = OptimizerKind::kFzoo;
  config.eta = 0.1;
  config.epsilon = 0.5;
  config.n_directions = 2;
  config.run_seed = 8;

  // 3 evaluations per step: steps 1-2 succeed (flat => no movement), the
  // third step's base evaluation returns NaN.
  const RunResult r = run(config, obj, ParamVector::zeros(2),
                          Budget{Budget::Unit::kSteps, 10});
  CHECK_FALSE(r.complete);
  CHECK(r.reports.size() == 2);
  CHECK(r.error.find("base") != std::string::npos);
  CHECK(r.state.step == 2);
  CHECK(r.state.degenerate_sigma_batches == 2);
}

TEST_CASE("run rejects mismatched starting dimensions") {
  const Objective obj = spd_quadratic(3, 1);
  OptimizerConfig config;
  config.kind = OptimizerKind::kFzoo;
  CHECK_THROWS_AS(
      (void)run(config, obj, ParamVector::zeros(2), Budget{Budget::Unit::kSteps, 1}),
      std::invalid_argument);
}

TEST_CASE("many-direction updates align with the true gradient") {
  const Objective obj = spd_quadratic(10, 4);
  const ParamVector theta0(testutil::gaussian_vector(9, 10), obj.shapes);
  const std::vector<double> grad = obj.gradient(theta0, full_batch(0));

  OptimizerConfig config;
  config.kind = OptimizerKind::kFzoo;
  config.eta = 1e-3;
  config.epsilon = 1e-5;
  config.n_directions = 64;

  double mean_cos = 0.0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    config.run_seed = 500 + static_cast<std::uint64_t>(t);
    OptimizerState state{theta0};
    (void)fzoo_step(config, obj, state);
    std::vector<double> descent(10);
    for (std::size_t i = 0; i < 10; ++i) {
      descent[i] = theta0.values()[i] - state.theta.values()[i];
    }
    mean_cos += cosine(descent, grad);
  }
  mean_cos /= trials;
  CHECK(mean_cos > 0.9);
}
