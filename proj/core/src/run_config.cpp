#include "fzoo/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fzoo/rng.hpp"

namespace fzoo {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw std::invalid_argument("config." + field + ": " + message);
}

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

std::string elem(const std::string& parent, std::size_t i) {
  return parent + "[" + std::to_string(i) + "]";
}

void check_keys(const json& j, const std::string& field,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) fail(join(field, it.key()), "unknown field");
  }
}

const json& require(const json& j, const std::string& parent, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(join(parent, key), "missing required field");
  return *it;
}

std::string get_string(const json& j, const std::string& field) {
  if (!j.is_string()) fail(field, "expected a string");
  return j.get<std::string>();
}

double get_double(const json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) fail(field, "must be finite");
  return v;
}

double get_positive(const json& j, const std::string& field) {
  double v = get_double(j, field);
  if (v <= 0.0) fail(field, "must be > 0");
  return v;
}

std::int64_t get_int(const json& j, const std::string& field) {
  if (!j.is_number_integer()) fail(field, "expected an integer");
  return j.get<std::int64_t>();
}

std::uint64_t get_uint(const json& j, const std::string& field) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
    fail(field, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

std::size_t get_size(const json& j, const std::string& field) {
  return static_cast<std::size_t>(get_uint(j, field));
}

bool get_bool(const json& j, const std::string& field) {
  if (!j.is_boolean()) fail(field, "expected a boolean");
  return j.get<bool>();
}

std::vector<double> get_double_array(const json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(get_double(j[i], elem(field, i)));
  return out;
}

bool safe_name(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

// A bare scalar "eta" and a one-point "eta_grid" are equivalent.
std::vector<double> parse_grid(const json& j, const std::string& field,
                               const char* scalar_key, const char* grid_key) {
  const bool has_scalar = j.contains(scalar_key);
  const bool has_grid = j.contains(grid_key);
  if (has_scalar && has_grid)
    fail(join(field, grid_key),
         std::string("give either ") + scalar_key + " or " + grid_key + ", not both");
  if (!has_scalar && !has_grid)
    fail(join(field, scalar_key),
         std::string("missing required field (or ") + grid_key + ")");
  std::vector<double> grid;
  if (has_scalar) {
    grid.push_back(get_positive(j[scalar_key], join(field, scalar_key)));
  } else {
    const std::string gf = join(field, grid_key);
    if (!j[grid_key].is_array() || j[grid_key].empty())
      fail(gf, "expected a non-empty array of numbers");
    for (std::size_t i = 0; i < j[grid_key].size(); ++i)
      grid.push_back(get_positive(j[grid_key][i], elem(gf, i)));
    std::set<double> unique(grid.begin(), grid.end());
    if (unique.size() != grid.size()) fail(gf, "grid values must be distinct");
  }
  return grid;
}

ThetaInitSpec parse_theta0(const json& j, const std::string& field) {
  if (!j.is_object()) fail(field, "expected an object");
  check_keys(j, field, {"kind", "seed", "scale", "values"});
  ThetaInitSpec spec;
  const std::string kind = get_string(require(j, field, "kind"), join(field, "kind"));
  if (kind == "zeros") {
    spec.kind = ThetaInitSpec::Kind::kZeros;
    check_keys(j, field, {"kind"});
  } else if (kind == "gaussian") {
    spec.kind = ThetaInitSpec::Kind::kGaussian;
    check_keys(j, field, {"kind", "seed", "scale"});
    if (j.contains("seed")) spec.seed = get_uint(j["seed"], join(field, "seed"));
    if (j.contains("scale"))
      spec.scale = get_positive(j["scale"], join(field, "scale"));
  } else if (kind == "explicit") {
    spec.kind = ThetaInitSpec::Kind::kExplicit;
    check_keys(j, field, {"kind", "values"});
    spec.values =
        get_double_array(require(j, field, "values"), join(field, "values"));
    if (spec.values.empty()) fail(join(field, "values"), "must be non-empty");
  } else {
    fail(join(field, "kind"), "expected one of zeros|gaussian|explicit");
  }
  return spec;
}

DatasetSpec parse_dataset(const json& j, const std::string& field) {
  if (!j.is_object()) fail(field, "expected an object");
  DatasetSpec spec;
  if (j.contains("path")) {
    check_keys(j, field, {"path", "label_column"});
    spec.from_file = true;
    spec.path = get_string(j["path"], join(field, "path"));
    if (spec.path.empty()) fail(join(field, "path"), "must be non-empty");
    if (j.contains("label_column"))
      spec.label_column =
          get_string(j["label_column"], join(field, "label_column"));
  } else {
    check_keys(j, field, {"generator", "n", "dim", "separation", "seed"});
    spec.generator =
        get_string(require(j, field, "generator"), join(field, "generator"));
    if (spec.generator != "two_gaussians")
      fail(join(field, "generator"), "unknown generator (expected two_gaussians)");
    spec.n = get_size(require(j, field, "n"), join(field, "n"));
    if (spec.n == 0) fail(join(field, "n"), "must be > 0");
    spec.dim = get_size(require(j, field, "dim"), join(field, "dim"));
    if (spec.dim == 0) fail(join(field, "dim"), "must be > 0");
    if (j.contains("separation"))
      spec.separation = get_positive(j["separation"], join(field, "separation"));
    if (j.contains("seed")) spec.seed = get_uint(j["seed"], join(field, "seed"));
  }
  return spec;
}

ScorerSpec parse_scorer(const json& j, const std::string& field) {
  if (!j.is_object()) fail(field, "expected an object");
  check_keys(j, field, {"kind", "classes", "hidden", "bias"});
  ScorerSpec spec;
  const std::string kind = get_string(require(j, field, "kind"), join(field, "kind"));
  if (kind == "linear") {
    spec.kind = ScorerSpec::Kind::kLinear;
  } else if (kind == "mlp") {
    spec.kind = ScorerSpec::Kind::kMlp;
  } else {
    fail(join(field, "kind"), "expected linear or mlp");
  }
  if (j.contains("classes")) {
    spec.classes = get_size(j["classes"], join(field, "classes"));
    if (spec.classes < 2) fail(join(field, "classes"), "must be >= 2");
  }
  if (j.contains("hidden")) {
    if (spec.kind == ScorerSpec::Kind::kLinear)
      fail(join(field, "hidden"), "only valid for the mlp scorer");
    spec.hidden = get_size(j["hidden"], join(field, "hidden"));
    if (spec.hidden == 0) fail(join(field, "hidden"), "must be > 0");
  }
  if (j.contains("bias")) spec.bias = get_bool(j["bias"], join(field, "bias"));
  return spec;
}

ObjectiveSpec parse_objective(const json& j, const std::string& field) {
  if (!j.is_object()) fail(field, "expected an object");
  ObjectiveSpec spec;
  spec.type = get_string(require(j, field, "type"), join(field, "type"));
  if (spec.type == "linear") {
    check_keys(j, field, {"type", "c"});
    spec.c = get_double_array(require(j, field, "c"), join(field, "c"));
    if (spec.c.empty()) fail(join(field, "c"), "must be non-empty");
  } else if (spec.type == "quadratic") {
    check_keys(j, field, {"type", "dim", "matrix", "diagonal", "matrix_seed", "b"});
    std::string matrix = "identity";
    if (j.contains("matrix")) matrix = get_string(j["matrix"], join(field, "matrix"));
    if (matrix == "identity") {
      spec.quad.kind = QuadraticSpec::Kind::kIdentity;
    } else if (matrix == "diagonal") {
      spec.quad.kind = QuadraticSpec::Kind::kDiagonal;
    } else if (matrix == "random_spd") {
      spec.quad.kind = QuadraticSpec::Kind::kRandomSpd;
    } else {
      fail(join(field, "matrix"), "expected one of identity|diagonal|random_spd");
    }
    if (spec.quad.kind == QuadraticSpec::Kind::kDiagonal) {
      spec.quad.diagonal =
          get_double_array(require(j, field, "diagonal"), join(field, "diagonal"));
      if (spec.quad.diagonal.empty())
        fail(join(field, "diagonal"), "must be non-empty");
    } else if (j.contains("diagonal")) {
      fail(join(field, "diagonal"), "only valid with matrix = diagonal");
    }
    if (spec.quad.kind == QuadraticSpec::Kind::kRandomSpd) {
      spec.quad.seed =
          get_uint(require(j, field, "matrix_seed"), join(field, "matrix_seed"));
    } else if (j.contains("matrix_seed")) {
      fail(join(field, "matrix_seed"), "only valid with matrix = random_spd");
    }
    if (j.contains("dim")) {
      spec.quad.dim = get_size(j["dim"], join(field, "dim"));
      if (spec.quad.dim == 0) fail(join(field, "dim"), "must be > 0");
    }
    if (spec.quad.dim == 0) {
      if (spec.quad.diagonal.empty())
        fail(join(field, "dim"), "missing required field");
      spec.quad.dim = spec.quad.diagonal.size();
    }
    if (!spec.quad.diagonal.empty() &&
        spec.quad.diagonal.size() != spec.quad.dim)
      fail(join(field, "diagonal"), "length must equal dim");
    if (j.contains("b")) {
      spec.quad.b = get_double_array(j["b"], join(field, "b"));
      if (spec.quad.b.size() != spec.quad.dim)
        fail(join(field, "b"), "length must equal dim");
    }
  } else if (spec.type == "rosenbrock") {
    check_keys(j, field, {"type", "dim"});
    spec.dim = get_size(require(j, field, "dim"), join(field, "dim"));
    if (spec.dim < 2) fail(join(field, "dim"), "must be >= 2");
  } else if (spec.type == "logistic") {
    check_keys(j, field, {"type", "l2"});
    if (j.contains("l2")) {
      spec.l2 = get_double(j["l2"], join(field, "l2"));
      if (spec.l2 < 0.0) fail(join(field, "l2"), "must be >= 0");
    }
  } else if (spec.type == "zero_one" || spec.type == "mlp_softmax") {
    check_keys(j, field, {"type", "scorer"});
    spec.scorer = parse_scorer(require(j, field, "scorer"), join(field, "scorer"));
  } else {
    fail(join(field, "type"),
         "expected one of linear|quadratic|rosenbrock|logistic|zero_one|mlp_softmax");
  }
  return spec;
}

OptimizerKind parse_kind(const std::string& s, const std::string& field) {
  if (s == "fzoo") return OptimizerKind::kFzoo;
  if (s == "fzoo_r") return OptimizerKind::kFzooR;
  if (s == "zo_sgd") return OptimizerKind::kZoSgd;
  if (s == "normalized_sgd") return OptimizerKind::kNormalizedSgd;
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  fail(field, "expected one of fzoo|fzoo_r|zo_sgd|normalized_sgd|sgd|adam");
}

OptimizerEntry parse_optimizer(const json& j, const std::string& field) {
  if (!j.is_object()) fail(field, "expected an object");
  check_keys(j, field,
             {"name", "kind", "eta", "eta_grid", "epsilon", "epsilon_grid",
              "n_directions", "batch_size", "engine", "eta_over_sigma_cap"});
  OptimizerEntry entry;
  entry.name = get_string(require(j, field, "name"), join(field, "name"));
  if (!safe_name(entry.name))
    fail(join(field, "name"), "use only letters, digits, '_' and '-'");
  entry.kind =
      parse_kind(get_string(require(j, field, "kind"), join(field, "kind")),
                 join(field, "kind"));
  entry.eta_grid = parse_grid(j, field, "eta", "eta_grid");
  if (is_zeroth_order(entry.kind)) {
    entry.epsilon_grid = parse_grid(j, field, "epsilon", "epsilon_grid");
  } else {
    if (j.contains("epsilon") || j.contains("epsilon_grid"))
      fail(join(field, "epsilon"), "only valid for zeroth-order optimizers");
    entry.epsilon_grid = {0.0};
  }
  if (j.contains("n_directions")) {
    std::int64_t n = get_int(j["n_directions"], join(field, "n_directions"));
    if (n < 1) fail(join(field, "n_directions"), "must be >= 1");
    entry.n_directions = static_cast<int>(n);
  }
  if (entry.kind == OptimizerKind::kFzooR &&
      (entry.n_directions < 4 || entry.n_directions % 2 != 0))
    fail(join(field, "n_directions"), "fzoo_r needs an even value >= 4");
  if (j.contains("batch_size"))
    entry.batch_size = get_size(j["batch_size"], join(field, "batch_size"));
  if (j.contains("engine")) {
    const std::string engine = get_string(j["engine"], join(field, "engine"));
    if (engine == "sequential") {
      entry.engine = QueryEngine::kSequential;
    } else if (engine == "batched") {
      entry.engine = QueryEngine::kBatched;
    } else {
      fail(join(field, "engine"), "expected sequential or batched");
    }
  }
  if (j.contains("eta_over_sigma_cap")) {
    if (entry.kind != OptimizerKind::kFzoo && entry.kind != OptimizerKind::kFzooR)
      fail(join(field, "eta_over_sigma_cap"), "only valid for fzoo and fzoo_r");
    entry.eta_over_sigma_cap =
        get_positive(j["eta_over_sigma_cap"], join(field, "eta_over_sigma_cap"));
  }
  return entry;
}

Budget parse_budget(const json& j, const std::string& field) {
  if (!j.is_object()) fail(field, "expected an object");
  check_keys(j, field, {"unit", "amount"});
  Budget budget;
  const std::string unit = get_string(require(j, field, "unit"), join(field, "unit"));
  if (unit == "steps") {
    budget.unit = Budget::Unit::kSteps;
  } else if (unit == "forwards") {
    budget.unit = Budget::Unit::kForwards;
  } else {
    fail(join(field, "unit"), "expected steps or forwards");
  }
  budget.amount =
      static_cast<std::int64_t>(get_uint(require(j, field, "amount"), join(field, "amount")));
  return budget;
}

}  // namespace

RunConfigFile parse_run_config(const json& j) {
  if (!j.is_object()) fail("", "top level must be an object");
  check_keys(j, "",
             {"experiment", "objective", "dataset", "theta0", "optimizers",
              "budget", "seeds", "output_dir", "checkpoint_every", "jobs"});
  RunConfigFile config;

  config.experiment = get_string(require(j, "", "experiment"), "experiment");
  if (!safe_name(config.experiment))
    fail("experiment", "use only letters, digits, '_' and '-'");

  config.objective = parse_objective(require(j, "", "objective"), "objective");

  const bool needs_data = config.objective.type == "logistic" ||
                          config.objective.type == "zero_one" ||
                          config.objective.type == "mlp_softmax";
  if (needs_data) {
    config.dataset = parse_dataset(require(j, "", "dataset"), "dataset");
  } else if (j.contains("dataset")) {
    fail("dataset", "objective type " + config.objective.type + " takes no dataset");
  }

  if (j.contains("theta0")) config.theta0 = parse_theta0(j["theta0"], "theta0");

  const json& opts = require(j, "", "optimizers");
  if (!opts.is_array() || opts.empty())
    fail("optimizers", "expected a non-empty array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < opts.size(); ++i) {
    OptimizerEntry entry = parse_optimizer(opts[i], elem("optimizers", i));
    if (!names.insert(entry.name).second)
      fail(join(elem("optimizers", i), "name"), "duplicate name " + entry.name);
    config.optimizers.push_back(std::move(entry));
  }

  config.budget = parse_budget(require(j, "", "budget"), "budget");

  const json& seeds = require(j, "", "seeds");
  if (!seeds.is_array() || seeds.empty())
    fail("seeds", "expected a non-empty array of integers");
  std::set<std::uint64_t> seen;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    std::uint64_t s = get_uint(seeds[i], elem("seeds", i));
    if (!seen.insert(s).second) fail(elem("seeds", i), "seeds must be distinct");
    config.seeds.push_back(s);
  }

  if (j.contains("output_dir")) {
    config.output_dir = get_string(j["output_dir"], "output_dir");
    if (config.output_dir.empty()) fail("output_dir", "must be non-empty");
  }
  if (j.contains("checkpoint_every")) {
    std::int64_t k = get_int(j["checkpoint_every"], "checkpoint_every");
    if (k < 0) fail("checkpoint_every", "must be >= 0");
    config.checkpoint_every = static_cast<int>(k);
  }
  if (j.contains("jobs")) {
    std::int64_t n = get_int(j["jobs"], "jobs");
    if (n < 1) fail("jobs", "must be >= 1");
    config.jobs = static_cast<int>(n);
  }
  return config;
}

RunConfigFile load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  return parse_run_config(j);
}

BuiltObjective build_objective(const RunConfigFile& config,
                               const std::string& config_dir) {
  BuiltObjective built;
  const ObjectiveSpec& spec = config.objective;
  if (spec.type == "linear") {
    built.objective = linear_objective(spec.c);
    return built;
  }
  if (spec.type == "quadratic") {
    built.objective = quadratic_objective(spec.quad);
    return built;
  }
  if (spec.type == "rosenbrock") {
    built.objective = rosenbrock_objective(spec.dim);
    return built;
  }

  const DatasetSpec& ds = *config.dataset;
  std::shared_ptr<const Dataset> data;
  if (ds.from_file) {
    std::string path = ds.path;
    if (!path.empty() && path.front() != '/' && !config_dir.empty())
      path = config_dir + "/" + path;
    data = std::make_shared<const Dataset>(load_csv(path, ds.label_column));
  } else {
    data = std::make_shared<const Dataset>(
        two_gaussians(ds.n, ds.dim, ds.separation, ds.seed));
  }
  built.dataset = data;

  if (spec.type == "logistic") {
    built.objective = logistic_objective(data, spec.l2);
  } else if (spec.type == "zero_one") {
    built.objective = zero_one_objective(data, spec.scorer);
  } else {
    built.objective = mlp_softmax_objective(data, spec.scorer);
  }
  return built;
}

ParamVector initial_theta(const RunConfigFile& config, const Objective& objective,
                          std::uint64_t run_seed) {
  const ThetaInitSpec& init = config.theta0;
  if (init.kind == ThetaInitSpec::Kind::kZeros)
    return ParamVector(std::vector<double>(objective.dim, 0.0), objective.shapes);
  if (init.kind == ThetaInitSpec::Kind::kExplicit) {
    if (init.values.size() != objective.dim)
      throw std::invalid_argument(
          "config.theta0.values: length " + std::to_string(init.values.size()) +
          " does not match objective dimension " + std::to_string(objective.dim));
    return ParamVector(init.values, objective.shapes);
  }
  // Gaussian init: one stream per run seed so repeats are reproducible and
  // distinct seeds start from distinct points.
  const std::uint64_t stream = rng::derive(init.seed, run_seed, rng::kTagInit);
  std::vector<double> theta(objective.dim);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const std::uint64_t word = rng::SplitMix64::at(stream, i);
    theta[i] = init.scale * rng::inverse_normal_cdf(rng::u01(word));
  }
  return ParamVector(std::move(theta), objective.shapes);
}

}  // namespace fzoo
