#include "fzoo/estimators.hpp"

#include <cmath>

namespace fzoo {

namespace {

double checked_eval(const Objective& objective, const ParamVector& theta,
                    const BatchSpec& batch, const std::string& which, int index) {
  const double v = objective.evaluate(theta, batch);
  if (!std::isfinite(v)) throw EvaluationError(which, index);
  return v;
}

}  // namespace

std::vector<double> ClassicalZoEstimate::dense(std::size_t d) const {
  std::vector<double> g = generate_direction(seed, d);
  for (double& v : g) v *= projected;
  return g;
}

ClassicalZoEstimate classical_zo_gradient(const Objective& objective,
                                          ParamVector& theta, const BatchSpec& batch,
                                          std::uint64_t gaussian_seed, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("classical_zo_gradient: epsilon must be positive");
  }
  ClassicalZoEstimate est;
  est.seed = DirectionSeed{gaussian_seed, DirectionKind::kGaussian};

  perturb_in_place(theta, est.seed, epsilon);
  try {
    est.loss_plus = checked_eval(objective, theta, batch, "plus", -1);
    perturb_in_place(theta, est.seed, -2.0 * epsilon);
  } catch (...) {
    perturb_in_place(theta, est.seed, -epsilon);
    throw;
  }
  try {
    est.loss_minus = checked_eval(objective, theta, batch, "minus", -1);
  } catch (...) {
    perturb_in_place(theta, est.seed, epsilon);
    throw;
  }
  perturb_in_place(theta, est.seed, epsilon);

  est.projected = (est.loss_plus - est.loss_minus) / (2.0 * epsilon);
  return est;
}

LossQueryResult query_losses(const Objective& objective, ParamVector& theta,
                             const BatchSpec& batch,
                             std::span<const DirectionSeed> seeds, double epsilon,
                             QueryEngine engine) {
  if (epsilon < 0.0 || !std::isfinite(epsilon)) {
    throw std::invalid_argument("query_losses: epsilon must be finite and >= 0");
  }
  LossQueryResult out;
  out.epsilon = epsilon;
  out.dim = theta.dim();
  out.seeds.assign(seeds.begin(), seeds.end());
  out.base_loss = checked_eval(objective, theta, batch, "base", -1);

  if (engine == QueryEngine::kBatched && objective.batched_losses) {
    out.perturbed = objective.batched_losses(theta, batch, seeds, epsilon);
    if (out.perturbed.size() != seeds.size()) {
      throw std::runtime_error("query_losses: batched path returned " +
                               std::to_string(out.perturbed.size()) + " losses for " +
                               std::to_string(seeds.size()) + " directions");
    }
    for (std::size_t i = 0; i < out.perturbed.size(); ++i) {
      if (!std::isfinite(out.perturbed[i])) {
        throw EvaluationError("direction " + std::to_string(i), static_cast<int>(i));
      }
    }
    return out;
  }

  out.perturbed.reserve(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    perturb_in_place(theta, seeds[i], epsilon);
    double v;
    try {
      v = checked_eval(objective, theta, batch,
                       "direction " + std::to_string(i), static_cast<int>(i));
    } catch (...) {
      perturb_in_place(theta, seeds[i], -epsilon);
      throw;
    }
    perturb_in_place(theta, seeds[i], -epsilon);
    out.perturbed.push_back(v);
  }
  return out;
}

double sigma_of(std::span<const double> losses) {
  if (losses.size() < 2) {
    throw std::invalid_argument("sigma_of: need at least 2 losses, got " +
                                std::to_string(losses.size()));
  }
  double mean = 0.0;
  for (double l : losses) mean += l;
  mean /= static_cast<double>(losses.size());
  double sq = 0.0;
  for (double l : losses) {
    const double c = l - mean;
    sq += c * c;
  }
  return std::sqrt(sq / static_cast<double>(losses.size() - 1));
}

FzooEstimate fzoo_estimate(const LossQueryResult& query,
                           std::optional<double> sigma_override) {
  if (!std::isfinite(query.base_loss)) {
    throw std::invalid_argument("fzoo_estimate: non-finite base loss");
  }
  for (double l : query.perturbed) {
    if (!std::isfinite(l)) {
      throw std::invalid_argument("fzoo_estimate: non-finite perturbed loss");
    }
  }
  if (query.perturbed.empty() ||
      (query.perturbed.size() < 2 && !sigma_override.has_value())) {
    throw std::invalid_argument(
        "fzoo_estimate: need at least 2 perturbed losses (or a sigma override)");
  }

  FzooEstimate est;
  est.seeds = query.seeds;
  est.epsilon = query.epsilon;
  est.sigma = sigma_override ? *sigma_override : sigma_of(query.perturbed);
  if (!(est.sigma >= 0.0) || !std::isfinite(est.sigma)) {
    throw std::invalid_argument("fzoo_estimate: sigma must be finite and >= 0");
  }
  est.sigma_floored = est.sigma < kSigmaFloor;
  const double denom =
      static_cast<double>(query.perturbed.size()) * std::max(est.sigma, kSigmaFloor);
  est.projected_grads.reserve(query.perturbed.size());
  for (double l : query.perturbed) {
    est.projected_grads.push_back((l - query.base_loss) / denom);
  }
  est.forward_passes = static_cast<int>(query.perturbed.size()) + 1;
  return est;
}

std::vector<double> reconstruct_g(const LossQueryResult& query) {
  if (!(query.epsilon > 0.0)) {
    throw std::invalid_argument("reconstruct_g: epsilon must be positive");
  }
  if (query.dim == 0 || query.perturbed.size() != query.seeds.size() ||
      query.seeds.empty()) {
    throw std::invalid_argument("reconstruct_g: malformed query");
  }
  std::vector<double> g(query.dim, 0.0);
  const double scale =
      1.0 / (query.epsilon * static_cast<double>(query.perturbed.size()));
  std::vector<double> u(query.dim);
  for (std::size_t i = 0; i < query.seeds.size(); ++i) {
    fill_direction(query.seeds[i], u);
    const double w = (query.perturbed[i] - query.base_loss) * scale;
    for (std::size_t e = 0; e < query.dim; ++e) g[e] += w * u[e];
  }
  return g;
}

}  // namespace fzoo
