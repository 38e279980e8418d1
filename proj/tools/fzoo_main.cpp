// Command-line front end: run experiments, verify the estimator's moment
// identities, resume from checkpoints, and inspect checkpoint files.

#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "fzoo/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"derivative-free optimization toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "experiment JSON file")
      ->required()
      ->check(CLI::ExistingFile);

  std::int64_t samples = 200000;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
  auto* verify = app.add_subcommand("verify", "Monte-Carlo identity checks");
  verify->add_option("--samples", samples, "Monte-Carlo samples per check")
      ->check(CLI::PositiveNumber);
  verify->add_option("--seed", seed, "base seed for all checks");
  verify->add_option("--workers", workers, "threads (does not change results)")
      ->check(CLI::PositiveNumber);

  std::string checkpoint_path;
  std::string resume_config;
  auto* resume = app.add_subcommand("resume", "continue a checkpointed run");
  resume->add_option("checkpoint", checkpoint_path, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  resume->add_option("config", resume_config, "experiment JSON file")
      ->required()
      ->check(CLI::ExistingFile);

  std::string dump_path;
  auto* dump = app.add_subcommand("dump", "print a checkpoint as JSON");
  dump->add_option("checkpoint", dump_path, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return fzoo::harness::cli_run(config_path);
  if (verify->parsed()) return fzoo::harness::cli_verify(samples, seed, workers);
  if (resume->parsed()) return fzoo::harness::cli_resume(checkpoint_path, resume_config);
  if (dump->parsed()) return fzoo::harness::cli_dump(dump_path);
  return 2;
}
