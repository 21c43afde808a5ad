#include <CLI11.hpp>

#include <iostream>

#include "ballast_geom/ballast_geom.hpp"

int main(int argc, char** argv) {
  using namespace ballast;
  CLI::App app{"Depth-geometry ballast sufficiency pipeline"};
  app.require_subcommand(1);

  RunOptions run;
  std::string manifest, config, out, box_mode, criteria;
  std::uint64_t seed = 0;
  auto* run_cmd = app.add_subcommand("run", "process a frame manifest");
  run_cmd->add_option("--manifest", manifest, "manifest.json")->required();
  auto* run_cfg = run_cmd->add_option("--config", config, "pipeline config JSON");
  run_cmd->add_option("--out", out, "output directory")->required();
  auto* run_seed = run_cmd->add_option("--seed", seed, "RNG seed, overrides the config");
  auto* run_box = run_cmd->add_option("--box-mode", box_mode, "aabb or rbb")->check(CLI::IsMember({"aabb", "rbb"}));
  auto* run_crit = run_cmd->add_option("--criteria", criteria, "comma-separated subset of c1,c2,cy");

  std::string spec_path;
  auto* synth_cmd = app.add_subcommand("synth", "render a synthetic scene");
  synth_cmd->add_option("--spec", spec_path, "scene spec JSON")->required();
  synth_cmd->add_option("--out", out, "output directory")->required();

  EvalOptions ev;
  std::string results, truth, methods, report;
  auto* eval_cmd = app.add_subcommand("eval", "score results against truth");
  eval_cmd->add_option("--results", results, "results directory")->required();
  eval_cmd->add_option("--truth", truth, "truth.json")->required();
  auto* ev_methods = eval_cmd->add_option("--methods", methods, "methods JSON");
  auto* ev_manifest = eval_cmd->add_option("--manifest", manifest, "run the methods on this manifest first");
  auto* ev_cfg = eval_cmd->add_option("--config", config, "base pipeline config JSON");
  auto* ev_seed = eval_cmd->add_option("--seed", seed, "RNG seed, overrides the config");
  auto* ev_report = eval_cmd->add_option("--report", report, "write a JSON report here");

  auto* overlay_cmd = app.add_subcommand("overlay", "render overlays for saved results");
  overlay_cmd->add_option("--manifest", manifest, "manifest.json")->required();
  overlay_cmd->add_option("--results", results, "results directory")->required();
  overlay_cmd->add_option("--out", out, "output directory")->required();
  auto* ov_cfg = overlay_cmd->add_option("--config", config, "pipeline config JSON");

  std::string axis;
  std::vector<double> values;
  auto* sweep_cmd = app.add_subcommand("sweep", "perturbation sweep on a synthetic scene");
  sweep_cmd->add_option("--spec", spec_path, "scene spec JSON")->required();
  auto* sw_cfg = sweep_cmd->add_option("--config", config, "pipeline config JSON");
  sweep_cmd->add_option("--axis", axis, "noise, outliers or bias_magnitude")->required();
  sweep_cmd->add_option("--values", values, "parameter values")->required();

  CLI11_PARSE(app, argc, argv);

  auto opt_path = [](CLI::Option* o, const std::string& v) {
    return o->count() ? std::optional<fs::path>(v) : std::nullopt;
  };
  if (*run_cmd) {
    run.manifest = manifest;
    run.config = opt_path(run_cfg, config);
    run.out = out;
    if (run_seed->count()) run.seed = seed;
    if (run_box->count()) run.box_mode = box_mode;
    if (run_crit->count()) run.criteria = criteria;
    return cmd_run(run, std::cout, std::cerr);
  }
  if (*synth_cmd) return cmd_synth(spec_path, out, std::cout, std::cerr);
  if (*eval_cmd) {
    ev.results = results;
    ev.truth = truth;
    ev.methods = opt_path(ev_methods, methods);
    ev.manifest = opt_path(ev_manifest, manifest);
    ev.config = opt_path(ev_cfg, config);
    if (ev_seed->count()) ev.seed = seed;
    ev.report = opt_path(ev_report, report);
    return cmd_eval(ev, std::cout, std::cerr);
  }
  if (*overlay_cmd) return cmd_overlay({manifest, results, out, opt_path(ov_cfg, config)}, std::cout, std::cerr);
  return cmd_sweep({spec_path, opt_path(sw_cfg, config), axis, values}, std::cout, std::cerr);
}
