#include "fzoo/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fzoo/matrix.hpp"
#include "fzoo/rng.hpp"

namespace fzoo {

namespace {

constexpr std::uint64_t kTagSpd = 0x535044ULL;     // "SPD"
constexpr std::uint64_t kTagPower = 0x504f57ULL;   // "POW"

double stable_softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_batch(const BatchSpec& batch, std::size_t n, const char* who) {
  if (batch.indices.empty()) {
    throw std::invalid_argument(std::string(who) + ": empty batch");
  }
  for (std::size_t idx : batch.indices) {
    if (idx >= n) {
      throw std::invalid_argument(std::string(who) + ": batch index " +
                                  std::to_string(idx) + " out of range (n=" +
                                  std::to_string(n) + ")");
    }
  }
}

// Columns of the result are the batch's samples.
Matrix batch_matrix(const Dataset& data, const BatchSpec& batch) {
  Matrix x(data.dim, batch.indices.size());
  for (std::size_t c = 0; c < batch.indices.size(); ++c) {
    const std::size_t row = batch.indices[c];
    for (std::size_t r = 0; r < data.dim; ++r) {
      x.at(r, c) = data.feature(row, r);
    }
  }
  return x;
}

double lambda_max_power_iteration(const Matrix& a, std::uint64_t seed) {
  const std::size_t d = a.rows;
  rng::SplitMix64 stream(rng::derive(seed, 0, kTagPower));
  std::vector<double> v(d);
  for (double& e : v) e = rng::inverse_normal_cdf(rng::u01(stream.next()));
  std::vector<double> av(d);
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    for (std::size_t r = 0; r < d; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += a.at(r, c) * v[c];
      av[r] = s;
    }
    double norm = 0.0;
    for (double e : av) norm += e * e;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    for (std::size_t r = 0; r < d; ++r) v[r] = av[r] / norm;
    lambda = norm;
  }
  return lambda;
}

std::size_t argmax_lowest_tie(const Matrix& scores, std::size_t col) {
  std::size_t best = 0;
  for (std::size_t r = 1; r < scores.rows; ++r) {
    if (scores.at(r, col) > scores.at(best, col)) best = r;
  }
  return best;
}

struct ScorerCore {
  LayerStack stack;  // weights are placeholders; loaded from theta per call
  std::shared_ptr<const Dataset> data;

  LayerStack stack_for(const ParamVector& theta) const {
    LayerStack s = stack;
    load_weights(s, theta.values());
    return s;
  }
};

}  // namespace

Objective linear_objective(std::vector<double> c) {
  if (c.empty()) {
    throw std::invalid_argument("linear_objective: dimension must be positive");
  }
  auto coeffs = std::make_shared<const std::vector<double>>(std::move(c));
  Objective obj;
  obj.name = "linear";
  obj.dim = coeffs->size();
  obj.shapes = {LayerShape{"theta", coeffs->size(), 1}};
  obj.evaluate = [coeffs](const ParamVector& theta, const BatchSpec&) {
    double s = 0.0;
    for (std::size_t i = 0; i < coeffs->size(); ++i) {
      s += (*coeffs)[i] * theta.values()[i];
    }
    return s;
  };
  obj.gradient = [coeffs](const ParamVector&, const BatchSpec&) { return *coeffs; };
  obj.smoothness = 0.0;
  return obj;
}

Objective quadratic_objective(const QuadraticSpec& spec) {
  if (spec.dim == 0) {
    throw std::invalid_argument("quadratic_objective: dimension must be positive");
  }
  const std::size_t d = spec.dim;
  if (!spec.b.empty() && spec.b.size() != d) {
    throw std::invalid_argument("quadratic_objective: b has wrong dimension");
  }
  auto b = std::make_shared<const std::vector<double>>(
      spec.b.empty() ? std::vector<double>(d, 0.0) : spec.b);

  // Diagonal representation when possible, dense otherwise.
  std::shared_ptr<const std::vector<double>> diag;
  std::shared_ptr<const Matrix> dense;
  double lambda_max = 0.0;
  switch (spec.kind) {
    case QuadraticSpec::Kind::kIdentity: {
      diag = std::make_shared<const std::vector<double>>(d, 1.0);
      lambda_max = 1.0;
      break;
    }
    case QuadraticSpec::Kind::kDiagonal: {
      if (spec.diagonal.size() != d) {
        throw std::invalid_argument("quadratic_objective: diagonal has wrong dimension");
      }
      for (double v : spec.diagonal) {
        if (!(v > 0.0)) {
          throw std::invalid_argument(
              "quadratic_objective: diagonal entries must be positive (non-SPD)");
        }
      }
      diag = std::make_shared<const std::vector<double>>(spec.diagonal);
      lambda_max = *std::max_element(spec.diagonal.begin(), spec.diagonal.end());
      break;
    }
    case QuadraticSpec::Kind::kRandomSpd: {
      Matrix g(d, d);
      rng::SplitMix64 stream(rng::derive(spec.seed, d, kTagSpd));
      for (double& e : g.data) e = rng::inverse_normal_cdf(rng::u01(stream.next()));
      Matrix a(d, d);
      for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t c = 0; c < d; ++c) {
          double s = 0.0;
          for (std::size_t k = 0; k < d; ++k) s += g.at(k, r) * g.at(k, c);
          a.at(r, c) = s / static_cast<double>(d) + (r == c ? 0.5 : 0.0);
        }
      }
      lambda_max = lambda_max_power_iteration(a, spec.seed);
      dense = std::make_shared<const Matrix>(std::move(a));
      break;
    }
  }

  Objective obj;
  obj.name = "quadratic";
  obj.dim = d;
  obj.shapes = {LayerShape{"theta", d, 1}};
  obj.smoothness = lambda_max;
  obj.evaluate = [diag, dense, b, d](const ParamVector& theta, const BatchSpec&) {
    const auto& t = theta.values();
    double quad = 0.0;
    if (diag) {
      for (std::size_t i = 0; i < d; ++i) quad += (*diag)[i] * t[i] * t[i];
    } else {
      for (std::size_t r = 0; r < d; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += dense->at(r, c) * t[c];
        quad += t[r] * s;
      }
    }
    double lin = 0.0;
    for (std::size_t i = 0; i < d; ++i) lin += (*b)[i] * t[i];
    return 0.5 * quad - lin;
  };
  obj.gradient = [diag, dense, b, d](const ParamVector& theta, const BatchSpec&) {
    const auto& t = theta.values();
    std::vector<double> g(d);
    if (diag) {
      for (std::size_t i = 0; i < d; ++i) g[i] = (*diag)[i] * t[i] - (*b)[i];
    } else {
      for (std::size_t r = 0; r < d; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += dense->at(r, c) * t[c];
        g[r] = s - (*b)[r];
      }
    }
    return g;
  };
  return obj;
}

Objective rosenbrock_objective(std::size_t dim) {
  if (dim < 2) {
    throw std::invalid_argument("rosenbrock_objective: dimension must be >= 2");
  }
  Objective obj;
  obj.name = "rosenbrock";
  obj.dim = dim;
  obj.shapes = {LayerShape{"theta", dim, 1}};
  obj.evaluate = [dim](const ParamVector& theta, const BatchSpec&) {
    const auto& t = theta.values();
    double loss = 0.0;
    for (std::size_t i = 0; i + 1 < dim; ++i) {
      const double gap = t[i + 1] - t[i] * t[i];
      const double miss = 1.0 - t[i];
      loss += 100.0 * gap * gap + miss * miss;
    }
    return loss;
  };
  obj.gradient = [dim](const ParamVector& theta, const BatchSpec&) {
    const auto& t = theta.values();
    std::vector<double> g(dim, 0.0);
    for (std::size_t i = 0; i + 1 < dim; ++i) {
      const double gap = t[i + 1] - t[i] * t[i];
      g[i] += -400.0 * t[i] * gap - 2.0 * (1.0 - t[i]);
      g[i + 1] += 200.0 * gap;
    }
    return g;
  };
  return obj;
}

Objective logistic_objective(std::shared_ptr<const Dataset> data, double l2) {
  if (!data || data->n == 0) {
    throw std::invalid_argument("logistic_objective: empty dataset");
  }
  if (l2 < 0.0) {
    throw std::invalid_argument("logistic_objective: l2 must be >= 0");
  }
  for (double y : data->labels) {
    if (y != 0.0 && y != 1.0) {
      throw std::invalid_argument("logistic_objective: labels must be 0 or 1");
    }
  }
  const std::size_t d = data->dim;
  Objective obj;
  obj.name = "logistic";
  obj.dim = d;
  obj.n_samples = data->n;
  obj.shapes = {LayerShape{"theta", d, 1}};
  double max_sq = 0.0;
  for (std::size_t r = 0; r < data->n; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += data->feature(r, c) * data->feature(r, c);
    max_sq = std::max(max_sq, s);
  }
  obj.smoothness = 0.25 * max_sq + l2;
  obj.evaluate = [data, d, l2](const ParamVector& theta, const BatchSpec& batch) {
    check_batch(batch, data->n, "logistic");
    const auto& t = theta.values();
    double loss = 0.0;
    for (std::size_t idx : batch.indices) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += t[c] * data->feature(idx, c);
      loss += stable_softplus(s) - data->labels[idx] * s;
    }
    loss /= static_cast<double>(batch.indices.size());
    if (l2 > 0.0) {
      double sq = 0.0;
      for (double v : t) sq += v * v;
      loss += 0.5 * l2 * sq;
    }
    return loss;
  };
  obj.gradient = [data, d, l2](const ParamVector& theta, const BatchSpec& batch) {
    check_batch(batch, data->n, "logistic");
    const auto& t = theta.values();
    std::vector<double> g(d, 0.0);
    for (std::size_t idx : batch.indices) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += t[c] * data->feature(idx, c);
      const double err = sigmoid(s) - data->labels[idx];
      for (std::size_t c = 0; c < d; ++c) g[c] += err * data->feature(idx, c);
    }
    const double inv = 1.0 / static_cast<double>(batch.indices.size());
    for (std::size_t c = 0; c < d; ++c) g[c] = g[c] * inv + l2 * t[c];
    return g;
  };
  return obj;
}

LayerStack make_scorer_stack(const ScorerSpec& spec, std::size_t input_dim) {
  if (input_dim == 0) {
    throw std::invalid_argument("make_scorer_stack: input_dim must be positive");
  }
  if (spec.classes < 2) {
    throw std::invalid_argument("make_scorer_stack: need at least 2 classes");
  }
  const std::size_t bias = spec.bias ? 1 : 0;
  LayerStack stack;
  if (spec.kind == ScorerSpec::Kind::kLinear) {
    stack.layers.push_back(
        Layer{Matrix(spec.classes, input_dim + bias), Activation::kIdentity, spec.bias});
  } else {
    if (spec.hidden == 0) {
      throw std::invalid_argument("make_scorer_stack: hidden width must be positive");
    }
    stack.layers.push_back(
        Layer{Matrix(spec.hidden, input_dim + bias), Activation::kTanh, spec.bias});
    stack.layers.push_back(
        Layer{Matrix(spec.classes, spec.hidden + bias), Activation::kIdentity, spec.bias});
  }
  return stack;
}

namespace {

void check_class_labels(const Dataset& data, std::size_t classes, const char* who) {
  for (double y : data.labels) {
    const double r = std::round(y);
    if (y != r || r < 0.0 || r >= static_cast<double>(classes)) {
      throw std::invalid_argument(std::string(who) +
                                  ": labels must be integers in [0, classes)");
    }
  }
}

double zero_one_from_scores(const Matrix& scores, const Dataset& data,
                            const BatchSpec& batch) {
  std::size_t wrong = 0;
  for (std::size_t c = 0; c < batch.indices.size(); ++c) {
    const auto pred = argmax_lowest_tie(scores, c);
    if (static_cast<double>(pred) != data.labels[batch.indices[c]]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(batch.indices.size());
}

double softmax_ce_from_scores(const Matrix& scores, const Dataset& data,
                              const BatchSpec& batch) {
  double loss = 0.0;
  for (std::size_t c = 0; c < batch.indices.size(); ++c) {
    double m = scores.at(0, c);
    for (std::size_t r = 1; r < scores.rows; ++r) m = std::max(m, scores.at(r, c));
    double lse = 0.0;
    for (std::size_t r = 0; r < scores.rows; ++r) {
      lse += std::exp(scores.at(r, c) - m);
    }
    lse = m + std::log(lse);
    const auto label = static_cast<std::size_t>(data.labels[batch.indices[c]]);
    loss += lse - scores.at(label, c);
  }
  return loss / static_cast<double>(batch.indices.size());
}

Objective scorer_objective(std::shared_ptr<const Dataset> data, const ScorerSpec& spec,
                           const char* name,
                           double (*loss_fn)(const Matrix&, const Dataset&,
                                             const BatchSpec&)) {
  if (!data || data->n == 0) {
    throw std::invalid_argument(std::string(name) + ": empty dataset");
  }
  check_class_labels(*data, spec.classes, name);
  auto core = std::make_shared<const ScorerCore>(
      ScorerCore{make_scorer_stack(spec, data->dim), data});

  Objective obj;
  obj.name = name;
  obj.dim = core->stack.param_dim();
  obj.n_samples = data->n;
  obj.shapes = core->stack.shapes();
  obj.evaluate = [core, loss_fn](const ParamVector& theta, const BatchSpec& batch) {
    check_batch(batch, core->data->n, "scorer");
    const Matrix x = batch_matrix(*core->data, batch);
    const Matrix scores = clean_forward(core->stack_for(theta), x);
    return loss_fn(scores, *core->data, batch);
  };
  obj.batched_losses = [core, loss_fn](const ParamVector& theta, const BatchSpec& batch,
                                       std::span<const DirectionSeed> seeds,
                                       double epsilon) {
    check_batch(batch, core->data->n, "scorer");
    const Matrix x = batch_matrix(*core->data, batch);
    const BatchedActivations acts =
        batched_perturbed_forward(core->stack_for(theta), x, seeds, epsilon);
    std::vector<double> losses;
    losses.reserve(acts.slices.size());
    for (const Matrix& scores : acts.slices) {
      losses.push_back(loss_fn(scores, *core->data, batch));
    }
    return losses;
  };
  return obj;
}

}  // namespace

Objective zero_one_objective(std::shared_ptr<const Dataset> data,
                             const ScorerSpec& spec) {
  return scorer_objective(std::move(data), spec, "zero_one", zero_one_from_scores);
}

Objective mlp_softmax_objective(std::shared_ptr<const Dataset> data,
                                const ScorerSpec& spec) {
  return scorer_objective(std::move(data), spec, "mlp_softmax", softmax_ce_from_scores);
}

Objective affine_transform(Objective inner, double a, double b) {
  if (!(a > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw std::invalid_argument("affine_transform: need finite a > 0 and finite b");
  }
  Objective obj = inner;
  obj.name = inner.name + "_affine";
  auto base = std::make_shared<const Objective>(std::move(inner));
  obj.evaluate = [base, a, b](const ParamVector& theta, const BatchSpec& batch) {
    return a * base->evaluate(theta, batch) + b;
  };
  if (base->gradient) {
    obj.gradient = [base, a](const ParamVector& theta, const BatchSpec& batch) {
      std::vector<double> g = base->gradient(theta, batch);
      for (double& v : g) v *= a;
      return g;
    };
  }
  if (base->batched_losses) {
    obj.batched_losses = [base, a, b](const ParamVector& theta, const BatchSpec& batch,
                                      std::span<const DirectionSeed> seeds,
                                      double epsilon) {
      std::vector<double> losses = base->batched_losses(theta, batch, seeds, epsilon);
      for (double& v : losses) v = a * v + b;
      return losses;
    };
  }
  if (base->smoothness) obj.smoothness = a * (*base->smoothness);
  return obj;
}

}  // namespace fzoo
