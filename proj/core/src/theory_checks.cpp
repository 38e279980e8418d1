#include "fzoo/theory_checks.hpp"

#include <cmath>
#include <stdexcept>

#include "fzoo/estimators.hpp"
#include "fzoo/parallel.hpp"
#include "fzoo/rng.hpp"

namespace fzoo {

namespace {

constexpr std::int64_t kMinSamples = 10000;

struct MeanAcc {
  double sum = 0.0;
  double sumsq = 0.0;
  std::int64_t n = 0;

  void add(double v) {
    sum += v;
    sumsq += v * v;
    ++n;
  }
  void merge(const MeanAcc& o) {
    sum += o.sum;
    sumsq += o.sumsq;
    n += o.n;
  }
  double mean() const { return sum / static_cast<double>(n); }
  double std_error() const {
    const double m = mean();
    const double var = std::max(0.0, sumsq / static_cast<double>(n) - m * m);
    return std::sqrt(var / static_cast<double>(n));
  }
};

std::vector<DirectionSeed> sample_seeds(std::uint64_t seed, std::int64_t sample,
                                        int n_directions) {
  std::vector<DirectionSeed> seeds;
  seeds.reserve(static_cast<std::size_t>(n_directions));
  for (int i = 0; i < n_directions; ++i) {
    seeds.push_back(DirectionSeed{
        rng::direction_stream_seed(seed, static_cast<std::uint64_t>(sample),
                                   static_cast<std::uint64_t>(i)),
        DirectionKind::kRademacher});
  }
  return seeds;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_sq(const std::vector<double>& v) { return dot(v, v); }

void require_sample_budget(std::int64_t samples, const char* who) {
  if (samples < kMinSamples) {
    throw std::invalid_argument(std::string(who) + ": needs at least " +
                                std::to_string(kMinSamples) + " samples");
  }
}

}  // namespace

MomentCheckReport compare_moments(std::string identity, double theoretical,
                                  double empirical, double std_error,
                                  std::int64_t samples, double rel_tol) {
  MomentCheckReport r;
  r.identity = std::move(identity);
  r.theoretical = theoretical;
  r.empirical = empirical;
  r.std_error = std_error;
  r.samples = samples;
  r.tolerance = std::max(rel_tol * std::abs(theoretical), 3.0 * std_error);
  r.pass = samples >= kMinSamples &&
           std::abs(empirical - theoretical) <= r.tolerance;
  return r;
}

MomentCheckReport check_lemma_sum_outer(const std::vector<double>& x,
                                        int n_directions, std::int64_t samples,
                                        std::uint64_t seed, std::size_t workers) {
  if (x.empty()) {
    throw std::invalid_argument("check_lemma_sum_outer: x must be non-empty");
  }
  if (n_directions < 1) {
    throw std::invalid_argument("check_lemma_sum_outer: need n_directions >= 1");
  }
  require_sample_budget(samples, "check_lemma_sum_outer");
  const std::size_t d = x.size();
  const auto n = static_cast<double>(n_directions);

  MeanAcc acc = chunked_reduce<MeanAcc>(
      samples, workers,
      [&](MeanAcc& a, std::int64_t s) {
        std::vector<double> v(d, 0.0);
        std::vector<double> u(d);
        for (int i = 0; i < n_directions; ++i) {
          fill_direction(DirectionSeed{rng::direction_stream_seed(
                             seed, static_cast<std::uint64_t>(s),
                             static_cast<std::uint64_t>(i)),
                         DirectionKind::kRademacher},
                         u);
          const double si = dot(u, x);
          for (std::size_t e = 0; e < d; ++e) v[e] += si * u[e];
        }
        a.add(norm_sq(v));
      },
      [](MeanAcc& total, const MeanAcc& a) { total.merge(a); });

  const double theoretical =
      n * (n + static_cast<double>(d) - 1.0) * norm_sq(x);
  return compare_moments("sum-outer second moment (d=" + std::to_string(d) +
                             ", N=" + std::to_string(n_directions) + ")",
                         theoretical, acc.mean(), acc.std_error(), acc.n);
}

MomentCheckReport check_lemma_centered_inner(const std::vector<double>& g,
                                             int n_directions, std::int64_t samples,
                                             std::uint64_t seed,
                                             std::size_t workers) {
  if (g.empty()) {
    throw std::invalid_argument("check_lemma_centered_inner: g must be non-empty");
  }
  if (n_directions < 2) {
    throw std::invalid_argument("check_lemma_centered_inner: need n_directions >= 2");
  }
  require_sample_budget(samples, "check_lemma_centered_inner");
  const std::size_t d = g.size();
  const auto n = static_cast<double>(n_directions);

  MeanAcc acc = chunked_reduce<MeanAcc>(
      samples, workers,
      [&](MeanAcc& a, std::int64_t s) {
        std::vector<double> u(d);
        std::vector<double> si(static_cast<std::size_t>(n_directions));
        double mean = 0.0;
        for (int i = 0; i < n_directions; ++i) {
          fill_direction(DirectionSeed{rng::direction_stream_seed(
                             seed, static_cast<std::uint64_t>(s),
                             static_cast<std::uint64_t>(i)),
                         DirectionKind::kRademacher},
                         u);
          si[static_cast<std::size_t>(i)] = dot(u, g);
          mean += si[static_cast<std::size_t>(i)];
        }
        mean /= n;
        double total = 0.0;
        for (double v : si) total += (v - mean) * (v - mean);
        a.add(total);
      },
      [](MeanAcc& total, const MeanAcc& a) { total.merge(a); });

  const double theoretical = (n - 1.0) * norm_sq(g);
  return compare_moments("centered inner-product moment (d=" + std::to_string(d) +
                             ", N=" + std::to_string(n_directions) + ")",
                         theoretical, acc.mean(), acc.std_error(), acc.n);
}

namespace {

struct PairAcc {
  MeanAcc first;
  MeanAcc second;

  void merge(const PairAcc& o) {
    first.merge(o.first);
    second.merge(o.second);
  }
};

}  // namespace

Proposition1Report check_proposition1(const Objective& objective,
                                      const ParamVector& theta, int n_directions,
                                      double epsilon, std::int64_t samples,
                                      std::uint64_t seed, SigmaFn sigma_fn,
                                      std::size_t workers) {
  if (!objective.gradient) {
    throw std::invalid_argument("check_proposition1: objective has no gradient oracle");
  }
  if (n_directions < 2 || !(epsilon > 0.0)) {
    throw std::invalid_argument("check_proposition1: need n_directions >= 2, epsilon > 0");
  }
  require_sample_budget(samples, "check_proposition1");

  const BatchSpec batch = full_batch(objective.n_samples);
  const std::vector<double> grad = objective.gradient(theta, batch);
  const double gsq = norm_sq(grad);
  const auto d = static_cast<double>(objective.dim);
  const auto n = static_cast<double>(n_directions);

  PairAcc acc = chunked_reduce<PairAcc>(
      samples, workers,
      [&](PairAcc& a, std::int64_t s) {
        const std::vector<DirectionSeed> seeds = sample_seeds(seed, s, n_directions);
        ParamVector local = theta;
        const LossQueryResult query =
            query_losses(objective, local, batch, seeds, epsilon);
        a.first.add(norm_sq(reconstruct_g(query)));
        const double sg =
            sigma_fn ? sigma_fn(query.perturbed) : sigma_of(query.perturbed);
        a.second.add(sg * sg);
      },
      [](PairAcc& total, const PairAcc& a) { total.merge(a); });

  Proposition1Report report;
  report.grad_second_moment =
      compare_moments("E|g|^2 vs (N+d-1)/N |grad|^2", (n + d - 1.0) / n * gsq,
                      acc.first.mean(), acc.first.std_error(), acc.first.n, 0.02);
  report.sigma_second_moment =
      compare_moments("E[sigma^2] vs eps^2 |grad|^2", epsilon * epsilon * gsq,
                      acc.second.mean(), acc.second.std_error(), acc.second.n, 0.02);

  const double ratio_theoretical = (n + d - 1.0) / (n * epsilon * epsilon);
  const double ratio = acc.first.mean() / acc.second.mean();
  const double ratio_se =
      std::abs(ratio) *
      std::sqrt(std::pow(acc.first.std_error() / acc.first.mean(), 2) +
                std::pow(acc.second.std_error() / acc.second.mean(), 2));
  report.moment_ratio = compare_moments("moment ratio vs (N+d-1)/(N eps^2)",
                                        ratio_theoretical, ratio, ratio_se,
                                        samples, 0.05);

  // If the curvature term eps*d*L/2 is not far below |grad|, the leading
  // terms cannot be expected to dominate at this epsilon.
  if (objective.smoothness && gsq > 0.0) {
    const double contamination =
        epsilon * d * (*objective.smoothness) / (2.0 * std::sqrt(gsq));
    if (contamination > 0.005) {
      report.inconclusive = true;
      const std::string note = "epsilon too large for the asymptotic regime "
                               "(curvature/gradient ratio " +
                               std::to_string(contamination) + ")";
      report.grad_second_moment.inconclusive = true;
      report.grad_second_moment.note = note;
      report.sigma_second_moment.inconclusive = true;
      report.sigma_second_moment.note = note;
      report.moment_ratio.inconclusive = true;
      report.moment_ratio.note = note;
    }
  }
  report.pass = report.grad_second_moment.pass && report.sigma_second_moment.pass &&
                report.moment_ratio.pass;
  return report;
}

ScalingReport check_epsilon_scaling(const Objective& objective,
                                    const ParamVector& theta, int n_directions,
                                    std::span<const double> epsilons,
                                    std::int64_t samples, std::uint64_t seed,
                                    std::size_t workers) {
  if (!objective.gradient) {
    throw std::invalid_argument("check_epsilon_scaling: objective has no gradient oracle");
  }
  if (epsilons.size() < 4) {
    throw std::invalid_argument("check_epsilon_scaling: need a ladder of >= 4 epsilons");
  }
  double lo = epsilons[0], hi = epsilons[0];
  for (double e : epsilons) {
    if (!(e > 0.0)) {
      throw std::invalid_argument("check_epsilon_scaling: epsilons must be positive");
    }
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  if (hi / lo < 100.0) {
    throw std::invalid_argument(
        "check_epsilon_scaling: ladder must span at least two decades");
  }
  if (n_directions < 2) {
    throw std::invalid_argument("check_epsilon_scaling: need n_directions >= 2");
  }
  require_sample_budget(samples, "check_epsilon_scaling");

  const BatchSpec batch = full_batch(objective.n_samples);
  const std::vector<double> grad = objective.gradient(theta, batch);
  const std::size_t d = objective.dim;
  const auto n = static_cast<double>(n_directions);

  ScalingReport report;
  for (double eps : epsilons) {
    // Same sample seeds for every epsilon: common directions cancel most of
    // the sampling noise out of the slope fit.
    PairAcc acc = chunked_reduce<PairAcc>(
        samples, workers,
        [&](PairAcc& a, std::int64_t s) {
          const std::vector<DirectionSeed> seeds = sample_seeds(seed, s, n_directions);
          ParamVector local = theta;
          const LossQueryResult query =
              query_losses(objective, local, batch, seeds, eps);

          std::vector<double> u(d);
          std::vector<double> lead(d, 0.0);
          std::vector<double> si(seeds.size());
          double si_mean = 0.0;
          for (std::size_t i = 0; i < seeds.size(); ++i) {
            fill_direction(seeds[i], u);
            si[i] = dot(u, grad);
            si_mean += si[i];
            for (std::size_t e = 0; e < d; ++e) lead[e] += si[i] * u[e];
          }
          si_mean /= n;
          for (std::size_t e = 0; e < d; ++e) lead[e] /= n;

          a.first.add(norm_sq(reconstruct_g(query)) - norm_sq(lead));

          double centered = 0.0;
          for (double v : si) centered += (v - si_mean) * (v - si_mean);
          centered /= (n - 1.0);
          const double sg = sigma_of(query.perturbed);
          a.second.add(sg * sg - eps * eps * centered);
        },
        [](PairAcc& total, const PairAcc& a) { total.merge(a); });

    ScalingPoint p;
    p.epsilon = eps;
    p.g_remainder = acc.first.mean();
    p.g_std_error = acc.first.std_error();
    p.sigma_remainder = acc.second.mean();
    p.sigma_std_error = acc.second.std_error();
    p.g_usable = std::abs(p.g_remainder) > 3.0 * p.g_std_error;
    p.sigma_usable = std::abs(p.sigma_remainder) > 3.0 * p.sigma_std_error;
    report.points.push_back(p);
  }

  auto fit_slope = [&](bool sigma_side, int& usable_out, bool& inconclusive_out) {
    std::vector<double> lx, ly;
    for (const ScalingPoint& p : report.points) {
      const bool usable = sigma_side ? p.sigma_usable : p.g_usable;
      const double r = sigma_side ? p.sigma_remainder : p.g_remainder;
      if (!usable) continue;
      lx.push_back(std::log(p.epsilon));
      ly.push_back(std::log(std::abs(r)));
    }
    usable_out = static_cast<int>(lx.size());
    if (lx.size() < 2) {
      inconclusive_out = true;  // remainder below the Monte Carlo noise floor
      return 0.0;
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += ly[i];
    }
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(lx.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      num += (lx[i] - mx) * (ly[i] - my);
      den += (lx[i] - mx) * (lx[i] - mx);
    }
    return num / den;
  };

  report.sigma_slope = fit_slope(true, report.sigma_usable_points,
                                 report.sigma_inconclusive);
  report.g_slope = fit_slope(false, report.g_usable_points, report.g_inconclusive);
  report.pass = !report.sigma_inconclusive && !report.g_inconclusive &&
                report.sigma_slope >= kSigmaRemainderSlopeMin &&
                report.g_slope >= kGradRemainderSlopeMin;
  return report;
}

}  // namespace fzoo
