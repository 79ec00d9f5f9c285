#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vrlab/agent/checkpoint.hpp"
#include "vrlab/errors.hpp"
#include "vrlab/harness/config.hpp"
#include "vrlab/harness/experiment.hpp"
#include "vrlab/harness/plot.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
            const std::string& seeds, const std::string& out_dir, int workers) {
  vrlab::RawConfig raw = vrlab::RawConfig::from_file(config_path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw vrlab::ConfigError("--set expects key=value, got " + kv);
    raw.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!seeds.empty()) raw.set("run.seeds", seeds);
  if (!out_dir.empty()) raw.set("run.output_dir", out_dir);

  const vrlab::ExperimentConfig cfg = vrlab::build_config(raw);
  const auto results = vrlab::run_experiment(cfg, workers);

  int aborted = 0;
  for (const auto& r : results) {
    std::printf("%-24s seed=%-4llu updates=%-8lld final_return=%.3f%s%s\n", r.arm.c_str(),
                static_cast<unsigned long long>(r.seed), static_cast<long long>(r.total_updates),
                r.final_return_mean,
                r.rr_switch_step ? (" switch@" + std::to_string(*r.rr_switch_step)).c_str() : "",
                r.aborted ? " [ABORTED]" : "");
    aborted += r.aborted ? 1 : 0;
  }
  std::printf("%zu run(s) complete under %s\n", results.size(),
              vrlab::resolve_output_root(cfg.output_dir).c_str());
  return aborted == 0 ? 0 : 1;
}

int cmd_plot(const std::string& pattern, const std::string& kind, const std::string& module,
             const std::string& out, const std::string& title) {
  const auto files = vrlab::find_metric_files(pattern);
  if (files.empty()) {
    std::fprintf(stderr, "no metrics.csv files match '%s'\n", pattern.c_str());
    return 1;
  }
  vrlab::PlotSpec spec;
  spec.kind = kind;
  spec.module = module;
  spec.out_path = out;
  spec.title = title.empty() ? (kind == "fau" ? "fraction of active units" : "episode return") : title;
  vrlab::plot_csvs(files, spec);
  std::printf("wrote %s from %zu file(s)\n", out.c_str(), files.size());
  return 0;
}

int cmd_inspect(const std::string& path) {
  const auto data = vrlab::read_checkpoint(path);
  std::printf("checkpoint version %u, env_step %lld, %zu entries\n", data.version,
              static_cast<long long>(data.env_step), data.entries.size());
  for (const auto& e : data.entries) {
    double norm = 0.0;
    for (float v : e.value) norm += static_cast<double>(v) * v;
    std::string shape = "[";
    for (size_t i = 0; i < e.shape.size(); ++i)
      shape += (i ? "," : "") + std::to_string(e.shape[i]);
    shape += "]";
    std::printf("  %-40s %-14s n=%-8zu l2=%-12.5g adam_t=%-7lld %s\n", e.name.c_str(),
                shape.c_str(), e.value.size(), std::sqrt(norm), static_cast<long long>(e.adam_t),
                e.trainable ? "trainable" : "frozen");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"visual-RL plasticity laboratory"};
  app.require_subcommand(1);

  std::string config_path, seeds, out_dir;
  std::vector<std::string> overrides;
  int workers = 1;
  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("config", config_path, "flat key=value config file")->required();
  run->add_option("--set", overrides, "override a config key, key=value (repeatable)");
  run->add_option("--seed", seeds, "comma-separated seed list override");
  run->add_option("--out", out_dir, "output directory override");
  run->add_option("--workers", workers, "concurrent runs")->check(CLI::PositiveNumber);

  std::string pattern, kind = "return", module = "critic", plot_out = "plot.svg", title;
  auto* plot = app.add_subcommand("plot", "aggregate metrics CSVs into an SVG chart");
  plot->add_option("pattern", pattern, "directory, metrics.csv path, or '*' glob")->required();
  plot->add_option("--kind", kind, "return | fau")->check(CLI::IsMember({"return", "fau"}));
  plot->add_option("--module", module, "fau module: encoder | actor | critic")
      ->check(CLI::IsMember({"encoder", "actor", "critic"}));
  plot->add_option("-o,--out", plot_out, "output SVG path");
  plot->add_option("--title", title, "chart title");

  std::string ckpt_path;
  auto* inspect = app.add_subcommand("inspect", "list the contents of a checkpoint");
  inspect->add_option("checkpoint", ckpt_path, "checkpoint file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, overrides, seeds, out_dir, workers);
    if (plot->parsed()) return cmd_plot(pattern, kind, module, plot_out, title);
    if (inspect->parsed()) return cmd_inspect(ckpt_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
