#include "fzoo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "fzoo/checkpoint.hpp"
#include "fzoo/rng.hpp"
#include "fzoo/theory_checks.hpp"

namespace fzoo::harness {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmtg(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

nlohmann::json num_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// One grid point of one optimizer: a (eta, epsilon) pair with its per-seed
// final losses.
struct GridCell {
  double eta = 0.0;
  double epsilon = 0.0;
  std::vector<double> losses;
  int incomplete = 0;

  double mean() const { return mean_of(losses); }
};

// Lowest mean final loss; ties broken toward the smaller eta, then epsilon.
bool better_cell(const GridCell& a, const GridCell& b) {
  const double ma = a.mean();
  const double mb = b.mean();
  if (ma != mb) return ma < mb;
  if (a.eta != b.eta) return a.eta < b.eta;
  return a.epsilon < b.epsilon;
}

struct RunTask {
  std::size_t entry_index = 0;
  double eta = 0.0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

RunRecord run_one(const RunConfigFile& config, const Objective& objective,
                  const OptimizerEntry& entry, const RunTask& task,
                  const std::string& out_dir) {
  RunRecord rec;
  rec.key = RunKey{entry.name, task.seed, task.eta, task.epsilon};
  const std::string stem = run_file_stem(rec.key);
  rec.csv_path = out_dir + "/" + stem + ".csv";
  rec.final_loss = kInf;

  OptimizerConfig oc;
  oc.kind = entry.kind;
  oc.eta = task.eta;
  oc.epsilon = task.epsilon;
  oc.n_directions = entry.n_directions;
  oc.batch_size = entry.batch_size;
  oc.run_seed = task.seed;
  oc.engine = entry.engine;
  oc.eta_over_sigma_cap = entry.eta_over_sigma_cap;

  std::ofstream csv(rec.csv_path, std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot open " + rec.csv_path + " for writing");
  csv << "step,fwd_cum,loss,sigma,grad_norm,wall_ms\n";

  const std::string ckpt_path = out_dir + "/" + stem + ".ckpt";
  auto last = std::chrono::steady_clock::now();
  StepObserver observer = [&](const StepReport& r, const OptimizerState& s) {
    const auto now = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - last).count();
    last = now;
    char ms_buf[32];
    std::snprintf(ms_buf, sizeof ms_buf, "%.3f", ms);
    csv << r.step << ',' << r.forward_cum << ',' << fmt17(r.loss) << ','
        << (r.sigma ? fmt17(*r.sigma) : std::string()) << ','
        << (r.grad_norm ? fmt17(*r.grad_norm) : std::string()) << ',' << ms_buf
        << '\n';
    if (config.checkpoint_every > 0 && r.step % config.checkpoint_every == 0)
      save_checkpoint(make_checkpoint(entry.name, oc, s), ckpt_path);
  };

  RunResult result = run(oc, objective, initial_theta(config, objective, task.seed),
                         config.budget, observer);
  csv.close();

  rec.complete = result.complete;
  rec.error = result.error;
  rec.steps = result.state.step;
  rec.forwards = result.state.forward_passes;
  if (result.complete) {
    try {
      const double v =
          objective.evaluate(result.state.theta, full_batch(objective.n_samples));
      rec.final_loss = std::isfinite(v) ? v : kInf;
    } catch (const std::exception& e) {
      rec.complete = false;
      rec.error = std::string("final evaluation failed: ") + e.what();
    }
  }
  return rec;
}

nlohmann::json build_summary(const RunConfigFile& config,
                             const std::vector<RunTask>& tasks,
                             const std::vector<RunRecord>& records) {
  nlohmann::json summary;
  summary["experiment"] = config.experiment;
  summary["objective"] = config.objective.type;
  summary["budget"] = {
      {"unit", config.budget.unit == Budget::Unit::kSteps ? "steps" : "forwards"},
      {"amount", config.budget.amount}};
  summary["seeds"] = config.seeds;

  nlohmann::json runs_json = nlohmann::json::array();
  for (const RunRecord& rec : records) {
    nlohmann::json r;
    r["optimizer"] = rec.key.optimizer;
    r["eta"] = rec.key.eta;
    r["epsilon"] = rec.key.epsilon;
    r["seed"] = rec.key.seed;
    r["complete"] = rec.complete;
    if (!rec.error.empty()) r["error"] = rec.error;
    r["steps"] = rec.steps;
    r["forwards"] = rec.forwards;
    r["final_loss"] = num_or_null(rec.final_loss);
    r["csv"] = std::filesystem::path(rec.csv_path).filename().string();
    runs_json.push_back(std::move(r));
  }
  summary["runs"] = std::move(runs_json);

  // Per-optimizer grid aggregates. Tasks and records are index-aligned and
  // enumerated seeds-innermost, so each cell's losses are consecutive.
  nlohmann::json opts_json = nlohmann::json::array();
  std::size_t cursor = 0;
  for (std::size_t e = 0; e < config.optimizers.size(); ++e) {
    const OptimizerEntry& entry = config.optimizers[e];
    nlohmann::json grid_json = nlohmann::json::array();
    GridCell best;
    bool have_best = false;
    for (double eta : entry.eta_grid) {
      for (double epsilon : entry.epsilon_grid) {
        GridCell cell;
        cell.eta = eta;
        cell.epsilon = epsilon;
        for (std::size_t s = 0; s < config.seeds.size(); ++s, ++cursor) {
          const RunRecord& rec = records[cursor];
          cell.losses.push_back(rec.final_loss);
          if (!rec.complete) ++cell.incomplete;
        }
        nlohmann::json cj;
        cj["eta"] = cell.eta;
        cj["epsilon"] = cell.epsilon;
        nlohmann::json losses = nlohmann::json::array();
        for (double v : cell.losses) losses.push_back(num_or_null(v));
        cj["final_losses"] = std::move(losses);
        cj["mean_final_loss"] = num_or_null(cell.mean());
        cj["median_final_loss"] = num_or_null(median_of(cell.losses));
        cj["incomplete"] = cell.incomplete;
        grid_json.push_back(std::move(cj));
        if (!have_best || better_cell(cell, best)) {
          best = std::move(cell);
          have_best = true;
        }
      }
    }
    nlohmann::json oj;
    oj["name"] = entry.name;
    oj["kind"] = optimizer_kind_name(entry.kind);
    oj["grid"] = std::move(grid_json);
    oj["best"] = {{"eta", best.eta},
                  {"epsilon", best.epsilon},
                  {"mean_final_loss", num_or_null(best.mean())},
                  {"median_final_loss", num_or_null(median_of(best.losses))}};
    opts_json.push_back(std::move(oj));
  }
  summary["optimizers"] = std::move(opts_json);
  (void)tasks;
  return summary;
}

}  // namespace

std::string run_file_stem(const RunKey& key) {
  return key.optimizer + "_eta" + fmtg(key.eta) + "_eps" + fmtg(key.epsilon) +
         "_s" + std::to_string(key.seed);
}

std::string resolve_output_root(const std::string& output_dir) {
  const char* env = std::getenv("FZOO_OUTPUT_ROOT");
  if (env == nullptr || *env == '\0') return output_dir;
  std::string rel = output_dir;
  while (!rel.empty() && rel.front() == '/') rel.erase(rel.begin());
  return std::string(env) + "/" + rel;
}

ExperimentResult run_experiment(const RunConfigFile& config,
                                const std::string& config_dir) {
  BuiltObjective built = build_objective(config, config_dir);
  const Objective& objective = built.objective;

  ExperimentResult result;
  result.out_dir = resolve_output_root(config.output_dir) + "/" + config.experiment;
  std::filesystem::create_directories(result.out_dir);

  std::vector<RunTask> tasks;
  for (std::size_t e = 0; e < config.optimizers.size(); ++e)
    for (double eta : config.optimizers[e].eta_grid)
      for (double epsilon : config.optimizers[e].epsilon_grid)
        for (std::uint64_t seed : config.seeds)
          tasks.push_back(RunTask{e, eta, epsilon, seed});

  result.runs.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const RunTask& task = tasks[i];
      const OptimizerEntry& entry = config.optimizers[task.entry_index];
      try {
        result.runs[i] = run_one(config, objective, entry, task, result.out_dir);
      } catch (const std::exception& e) {
        RunRecord rec;
        rec.key = RunKey{entry.name, task.seed, task.eta, task.epsilon};
        rec.complete = false;
        rec.error = e.what();
        rec.final_loss = kInf;
        result.runs[i] = std::move(rec);
      }
    }
  };
  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(config.jobs), tasks.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  result.summary = build_summary(config, tasks, result.runs);
  result.summary_path = result.out_dir + "/summary.json";
  std::ofstream out(result.summary_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + result.summary_path);
  out << result.summary.dump(2) << '\n';
  return result;
}

double forward_engine_max_divergence(int n_stacks, std::uint64_t seed) {
  double worst = 0.0;
  for (int s = 0; s < n_stacks; ++s) {
    const std::uint64_t stream =
        rng::derive(seed, static_cast<std::uint64_t>(s), rng::kTagInit);
    rng::SplitMix64 gen(stream);
    auto dim = [&]() { return 2 + static_cast<std::size_t>(gen.next() % 5); };

    const std::size_t d_in = dim();
    const std::size_t widths[3] = {dim(), dim(), dim()};
    const std::size_t batch = 1 + static_cast<std::size_t>(gen.next() % 4);
    const bool bias = (gen.next() & 1) != 0;

    LayerStack stack;
    std::size_t prev = d_in;
    for (int layer = 0; layer < 3; ++layer) {
      Layer l;
      l.act = Activation::kTanh;
      l.has_bias = bias;
      l.w = Matrix(widths[layer], prev + (bias ? 1 : 0));
      const double scale = 0.8 / std::sqrt(static_cast<double>(l.w.cols));
      for (double& w : l.w.data)
        w = scale * rng::inverse_normal_cdf(rng::u01(gen.next()));
      stack.layers.push_back(std::move(l));
      prev = widths[layer];
    }

    Matrix x(d_in, batch);
    for (double& v : x.data) v = rng::inverse_normal_cdf(rng::u01(gen.next()));

    std::vector<DirectionSeed> seeds;
    for (std::uint64_t k = 0; k < 8; ++k)
      seeds.push_back(DirectionSeed{rng::derive(stream, k, rng::kTagDirection),
                                    DirectionKind::kRademacher});

    const double epsilon = 1e-3;
    const std::vector<Matrix> ref =
        sequential_perturbed_forward(stack, x, seeds, epsilon);
    const BatchedActivations got = batched_perturbed_forward(
        stack, x, seeds, epsilon, 1 + static_cast<std::size_t>(s % 3));
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      for (std::size_t j = 0; j < ref[i].data.size(); ++j) {
        const double a = ref[i].data[j];
        const double b = got.slices[i].data[j];
        const double rel =
            std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
        worst = std::max(worst, rel);
      }
    }
  }
  return worst;
}

namespace {

std::vector<double> gaussian_vector(std::uint64_t seed, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = rng::inverse_normal_cdf(rng::u01(rng::SplitMix64::at(seed, i)));
  return v;
}

std::vector<double> with_norm(std::vector<double> v, double target) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x *= target / norm;
  return v;
}

// Scales theta so that |grad L(theta)| hits `target` (the gradient of the
// homogeneous quadratic scales linearly with theta).
ParamVector quad_theta_with_grad_norm(const Objective& objective,
                                      std::uint64_t seed, double target) {
  std::vector<double> raw = gaussian_vector(seed, objective.dim);
  ParamVector theta(raw, objective.shapes);
  const std::vector<double> g = objective.gradient(theta, full_batch(0));
  double norm = 0.0;
  for (double x : g) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : raw) x *= target / norm;
  return ParamVector(std::move(raw), objective.shapes);
}

struct TableBuilder {
  std::string text;
  int checks = 0;
  int failed = 0;
  int inconclusive = 0;

  void line(const std::string& s) { text += s + "\n"; }

  void moment_row(const std::string& label, const MomentCheckReport& r) {
    ++checks;
    const char* verdict = r.pass ? "PASS" : (r.inconclusive ? "INCONCLUSIVE" : "FAIL");
    if (!r.pass && r.inconclusive) ++inconclusive;
    if (!r.pass && !r.inconclusive) ++failed;
    char buf[256];
    std::snprintf(buf, sizeof buf, "  %-34s %15.8e %15.8e %10.3e  %s", label.c_str(),
                  r.theoretical, r.empirical, r.std_error, verdict);
    text += buf;
    if (!r.note.empty()) text += "  (" + r.note + ")";
    text += '\n';
  }

  void plain_row(const std::string& body, bool pass, bool inconclusive_row = false) {
    ++checks;
    const char* verdict = pass ? "PASS" : (inconclusive_row ? "INCONCLUSIVE" : "FAIL");
    if (!pass && inconclusive_row) ++inconclusive;
    if (!pass && !inconclusive_row) ++failed;
    char buf[320];
    std::snprintf(buf, sizeof buf, "  %-79s %s", body.c_str(), verdict);
    text += buf;
    text += '\n';
  }
};

}  // namespace

VerifySuiteResult run_verify_suite(std::int64_t samples, std::uint64_t seed,
                                   std::size_t workers) {
  if (samples < 1) throw std::invalid_argument("verify: samples must be >= 1");
  TableBuilder table;
  char head[160];
  std::snprintf(head, sizeof head,
                "identity checks  (samples=%lld, seed=%llu)\n",
                static_cast<long long>(samples),
                static_cast<unsigned long long>(seed));
  table.text += head;
  std::snprintf(head, sizeof head, "  %-34s %15s %15s %10s  %s", "check",
                "theoretical", "empirical", "std.err", "verdict");
  table.line(head);

  // E|sum u_i u_i' x|^2 = N(N+d-1)|x|^2 across a dimension/direction sweep.
  const struct {
    std::size_t d;
    int n;
  } outer_cases[] = {{1, 1}, {10, 4}, {50, 8}};
  int row = 0;
  for (const auto& c : outer_cases) {
    const std::vector<double> x = with_norm(
        gaussian_vector(rng::derive(seed, static_cast<std::uint64_t>(row), rng::kTagInit), c.d),
        1.5);
    char label[64];
    std::snprintf(label, sizeof label, "sum-outer d=%zu N=%d", c.d, c.n);
    table.moment_row(label, check_lemma_sum_outer(
                                x, c.n, samples,
                                rng::derive(seed, 100 + static_cast<std::uint64_t>(row),
                                            rng::kTagInit),
                                workers));
    ++row;
  }

  // sum_i E<g, u_i - mean(u)>^2 = (N-1)|g|^2.
  const struct {
    std::size_t d;
    int n;
  } centered_cases[] = {{1, 2}, {10, 8}};
  for (const auto& c : centered_cases) {
    const std::vector<double> g = with_norm(
        gaussian_vector(rng::derive(seed, static_cast<std::uint64_t>(row), rng::kTagInit), c.d),
        0.7);
    char label[64];
    std::snprintf(label, sizeof label, "centered-sum d=%zu N=%d", c.d, c.n);
    table.moment_row(label, check_lemma_centered_inner(
                                g, c.n, samples,
                                rng::derive(seed, 100 + static_cast<std::uint64_t>(row),
                                            rng::kTagInit),
                                workers));
    ++row;
  }

  // Second moments of the reconstructed estimate and of sigma on a dense SPD
  // quadratic, plus their ratio.
  QuadraticSpec quad;
  quad.kind = QuadraticSpec::Kind::kRandomSpd;
  quad.dim = 20;
  quad.seed = 11;
  const Objective quad_obj = quadratic_objective(quad);
  {
    const ParamVector theta = quad_theta_with_grad_norm(
        quad_obj, rng::derive(seed, 7, rng::kTagInit), 1.0);
    const Proposition1Report prop = check_proposition1(
        quad_obj, theta, 8, 1e-5, samples, rng::derive(seed, 8, rng::kTagInit), {},
        workers);
    table.moment_row("grad-moment d=20 N=8 eps=1e-5", prop.grad_second_moment);
    table.moment_row("sigma-moment d=20 N=8 eps=1e-5", prop.sigma_second_moment);
    table.moment_row("moment-ratio d=20 N=8 eps=1e-5", prop.moment_ratio);
  }

  // Remainder terms shrink with epsilon at the predicted rates.
  {
    const ParamVector theta = quad_theta_with_grad_norm(
        quad_obj, rng::derive(seed, 9, rng::kTagInit), 0.3);
    const double ladder[] = {1e-2, 1e-3, 1e-4, 1e-5};
    const ScalingReport scaling = check_epsilon_scaling(
        quad_obj, theta, 8, ladder, samples, rng::derive(seed, 10, rng::kTagInit),
        workers);
    char body[240];
    std::snprintf(body, sizeof body,
                  "eps-scaling: sigma slope %.2f (>=%.1f, %d pts), grad slope %.2f "
                  "(>=%.1f, %d pts)",
                  scaling.sigma_slope, kSigmaRemainderSlopeMin,
                  scaling.sigma_usable_points, scaling.g_slope,
                  kGradRemainderSlopeMin, scaling.g_usable_points);
    table.plain_row(body, scaling.pass,
                    scaling.g_inconclusive || scaling.sigma_inconclusive);
  }

  // The two perturbed-forward engines are interchangeable.
  {
    const double divergence =
        forward_engine_max_divergence(100, rng::derive(seed, 12, rng::kTagInit));
    char body[160];
    std::snprintf(body, sizeof body,
                  "forward engines: max divergence %.3e (tol 1e-9)", divergence);
    table.plain_row(body, divergence <= 1e-9);
  }

  char tail[120];
  std::snprintf(tail, sizeof tail, "verify: %d checks, %d failed, %d inconclusive",
                table.checks, table.failed, table.inconclusive);
  table.line(tail);

  VerifySuiteResult result;
  result.table = std::move(table.text);
  result.checks = table.checks;
  result.failed = table.failed;
  result.inconclusive = table.inconclusive;
  result.all_ok = table.failed == 0;
  return result;
}

int cli_run(const std::string& config_path) {
  RunConfigFile config;
  try {
    config = load_run_config(config_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  try {
    const std::string config_dir =
        std::filesystem::path(config_path).parent_path().string();
    const ExperimentResult result = run_experiment(config, config_dir);
    int incomplete = 0;
    for (const RunRecord& rec : result.runs)
      if (!rec.complete) ++incomplete;
    std::printf("experiment %s: %zu runs (%d incomplete) -> %s\n",
                config.experiment.c_str(), result.runs.size(), incomplete,
                result.out_dir.c_str());
    for (const auto& opt : result.summary["optimizers"]) {
      const auto& best = opt["best"];
      const std::string mean = best["mean_final_loss"].is_null()
                                   ? "n/a"
                                   : fmtg(best["mean_final_loss"].get<double>());
      std::printf("  %s best: eta=%s eps=%s mean_final_loss=%s\n",
                  opt["name"].get<std::string>().c_str(),
                  fmtg(best["eta"].get<double>()).c_str(),
                  fmtg(best["epsilon"].get<double>()).c_str(), mean.c_str());
    }
    std::printf("summary: %s\n", result.summary_path.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

int cli_verify(std::int64_t samples, std::uint64_t seed, std::size_t workers) {
  try {
    const VerifySuiteResult result = run_verify_suite(samples, seed, workers);
    std::fputs(result.table.c_str(), stdout);
    return result.all_ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

int cli_resume(const std::string& checkpoint_path, const std::string& config_path) {
  Checkpoint ckpt;
  RunConfigFile config;
  const OptimizerEntry* entry = nullptr;
  try {
    ckpt = load_checkpoint(checkpoint_path);
    config = load_run_config(config_path);
    for (const OptimizerEntry& e : config.optimizers)
      if (e.name == ckpt.optimizer_name) entry = &e;
    if (entry == nullptr)
      throw std::runtime_error("checkpoint optimizer '" + ckpt.optimizer_name +
                               "' not present in " + config_path);
    if (entry->kind != ckpt.kind)
      throw std::runtime_error("checkpoint kind " +
                               std::string(optimizer_kind_name(ckpt.kind)) +
                               " does not match config kind " +
                               optimizer_kind_name(entry->kind));
    if (entry->n_directions != ckpt.n_directions)
      throw std::runtime_error("checkpoint has n_directions=" +
                               std::to_string(ckpt.n_directions) +
                               ", config says " +
                               std::to_string(entry->n_directions));
    if (entry->batch_size != ckpt.batch_size)
      throw std::runtime_error("checkpoint has batch_size=" +
                               std::to_string(ckpt.batch_size) + ", config says " +
                               std::to_string(entry->batch_size));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  try {
    const std::string config_dir =
        std::filesystem::path(config_path).parent_path().string();
    BuiltObjective built = build_objective(config, config_dir);
    const Objective& objective = built.objective;
    if (objective.dim != ckpt.theta.size())
      throw std::runtime_error("checkpoint dimension " +
                               std::to_string(ckpt.theta.size()) +
                               " does not match objective dimension " +
                               std::to_string(objective.dim));

    OptimizerConfig oc;
    oc.kind = ckpt.kind;
    oc.eta = ckpt.eta;
    oc.epsilon = ckpt.epsilon;
    oc.n_directions = ckpt.n_directions;
    oc.batch_size = ckpt.batch_size;
    oc.run_seed = ckpt.run_seed;
    oc.engine = entry->engine;
    oc.eta_over_sigma_cap = entry->eta_over_sigma_cap;

    const std::filesystem::path in(checkpoint_path);
    const std::string csv_path =
        (in.parent_path() / (in.stem().string() + "_resumed.csv")).string();
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot open " + csv_path + " for writing");
    csv << "step,fwd_cum,loss,sigma,grad_norm,wall_ms\n";
    auto last = std::chrono::steady_clock::now();
    StepObserver observer = [&](const StepReport& r, const OptimizerState&) {
      const auto now = std::chrono::steady_clock::now();
      const double ms = std::chrono::duration<double, std::milli>(now - last).count();
      last = now;
      char ms_buf[32];
      std::snprintf(ms_buf, sizeof ms_buf, "%.3f", ms);
      csv << r.step << ',' << r.forward_cum << ',' << fmt17(r.loss) << ','
          << (r.sigma ? fmt17(*r.sigma) : std::string()) << ','
          << (r.grad_norm ? fmt17(*r.grad_norm) : std::string()) << ',' << ms_buf
          << '\n';
    };

    const std::int64_t start_step = ckpt.step;
    RunResult result =
        run_from(oc, objective, restore_state(ckpt), config.budget, observer);
    const double final_loss =
        objective.evaluate(result.state.theta, full_batch(objective.n_samples));
    std::printf("resumed %s from step %lld: +%lld steps, %lld forwards total, "
                "final_loss=%s -> %s\n",
                ckpt.optimizer_name.c_str(), static_cast<long long>(start_step),
                static_cast<long long>(result.state.step - start_step),
                static_cast<long long>(result.state.forward_passes),
                fmtg(final_loss).c_str(), csv_path.c_str());
    if (!result.complete) {
      std::fprintf(stderr, "error: run stopped early: %s\n", result.error.c_str());
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

int cli_dump(const std::string& checkpoint_path) {
  try {
    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    std::printf("%s\n", checkpoint_debug_json(ckpt).dump(2).c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}

}  // namespace fzoo::harness
