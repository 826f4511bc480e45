// Command-line front end; all behaviour lives in callsynth::cli.

#include <CLI11.hpp>

#include <iostream>

#include "callsynth/cli.hpp"

namespace cli = callsynth::cli;

int main(int argc, char** argv) {
  CLI::App app{"Synthetic contact-center transcript generation and evaluation"};
  app.set_version_flag("--version", std::string(CALLSYNTH_VERSION));
  app.require_subcommand(1);
  app.fallthrough();

  cli::CommonFlags flags;
  std::string backend, config, mock_script;
  std::uint64_t seed = 0;
  std::size_t kmax = 0, context_w = 0;
  double merge_threshold = 0.0;
  int pool = 0;
  auto* o_backend = app.add_option("--backend", backend, "LLM backend")->check(CLI::IsMember({"mock", "http"}));
  auto* o_seed = app.add_option("--seed", seed, "Run seed");
  auto* o_kmax = app.add_option("--kmax", kmax, "Turn sample cap per transcript pair (default 100)");
  auto* o_w = app.add_option("--context-w", context_w, "Context turns on each side (default 2)");
  auto* o_merge = app.add_option("--merge-threshold", merge_threshold, "Low-frequency merge threshold (default 0.10)");
  auto* o_config = app.add_option("--config", config, "Config file (JSON)")->check(CLI::ExistingFile);
  auto* o_script = app.add_option("--mock-script", mock_script, "Mock backend script (JSON)")->check(CLI::ExistingFile);
  auto* o_pool = app.add_option("--pool", pool, "Concurrent backend calls");
  app.add_flag("--trace", flags.trace, "Write redacted HTTP request/response bodies next to the outputs");

  cli::GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate one synthetic transcript from call attributes");
  g->add_option("--attrs", gen.attrs_path, "Call attributes (JSON)")->required();
  g->add_option("--method", gen.method, "single_stage | dual_turn_count | dual_call_length | characteristic_aware")
      ->capture_default_str();
  g->add_option("--targets", gen.targets_path, "Characteristic targets (JSON) or 'shipped'");
  g->add_option("--prompts", gen.prompts_path, "Prompt set override (JSON)");
  g->add_option("--out", gen.out_dir, "Output directory")->required();

  cli::EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Compare paired real and synthetic corpora");
  e->add_option("--real", ev.real_dir, "Directory of real transcripts (*.jsonl)")->required();
  e->add_option("--synth", ev.synth_dir, "Directory of synthetic transcripts, same file names")->required();
  e->add_option("--dims", ev.dims, "Dimensions (comma separated, default all)")->delimiter(',');
  e->add_option("--lang", ev.language, "Corpus language: en | es | fr | fr-ca")->capture_default_str();
  e->add_option("--out", ev.out_dir, "Output directory")->required();

  cli::ReconstructArgs rc;
  auto* r = app.add_subcommand("reconstruct", "Score a synthetic transcript against its attributes");
  r->add_option("--synth", rc.synth_path, "Synthetic transcript (JSONL)")->required();
  r->add_option("--attrs", rc.attrs_path, "Call attributes (JSON)")->required();
  r->add_option("--out", rc.out_dir, "Output directory")->required();

  cli::FixturesArgs fx;
  auto* f = app.add_subcommand("fixtures", "List or export the shipped fixtures");
  f->add_option("action", fx.action, "list | export")->check(CLI::IsMember({"list", "export"}));
  f->add_option("what", fx.what, "all | disfluencies | turn-targets | refs")
      ->check(CLI::IsMember({"all", "disfluencies", "turn-targets", "refs"}));
  f->add_option("--lang", fx.language, "Restrict refs to one language");
  f->add_option("--dim", fx.dimension, "Restrict refs to one dimension");
  f->add_option("--out", fx.out_dir, "Write into this directory instead of stdout");

  cli::TuneArgs tn;
  auto* t = app.add_subcommand("tune", "Rank prompt-set candidates by mean reconstruction score");
  t->add_option("--candidate", tn.candidate_paths, "Prompt set (JSON); repeat for each candidate")->required();
  t->add_option("--dataset", tn.dataset_paths, "Call attributes (JSON); repeat for each item")->required();
  t->add_option("--method", tn.method, "Generation method")->capture_default_str();
  t->add_option("--targets", tn.targets_path, "Characteristic targets (JSON) or 'shipped'");
  t->add_option("--out", tn.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc_parse = app.exit(err);
    return rc_parse == 0 ? 0 : cli::kExitInvalidInput;
  }

  if (*o_backend) flags.backend = backend;
  if (*o_seed) flags.seed = seed;
  if (*o_kmax) flags.k_max = kmax;
  if (*o_w) flags.context_w = context_w;
  if (*o_merge) flags.merge_threshold = merge_threshold;
  if (*o_config) flags.config_path = config;
  if (*o_script) flags.mock_script = mock_script;
  if (*o_pool) flags.pool_width = pool;

  try {
    if (f->parsed()) return cli::cmd_fixtures(fx, std::cout, std::cerr);
    const auto cfg = cli::resolve_config(flags);
    if (g->parsed()) return cli::cmd_generate(cfg, gen, std::cout, std::cerr);
    if (e->parsed()) return cli::cmd_evaluate(cfg, ev, std::cout, std::cerr);
    if (r->parsed()) return cli::cmd_reconstruct(cfg, rc, std::cout, std::cerr);
    if (t->parsed()) return cli::cmd_tune(cfg, tn, std::cout, std::cerr);
  } catch (const callsynth::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return cli::exit_code_for(err.kind());
  }
  return cli::kExitInvalidInput;
}
