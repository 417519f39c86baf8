// Command-line front end: dataset generation, approximation runs (serial or
// simulated-distributed), convergence sweeps, and error evaluation, all
// reproducible from one master seed.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "nystrom/dataset.hpp"
#include "nystrom/evaluation.hpp"
#include "nystrom/generators.hpp"
#include "nystrom/kernel.hpp"
#include "nystrom/nystrom_io.hpp"
#include "nystrom/oasis.hpp"
#include "nystrom/parallel.hpp"
#include "nystrom/samplers.hpp"

namespace {

using nystrom::Index;
using json = nlohmann::json;

struct DatasetArgs {
  std::string path;
  std::string format;  // "", "csv", "nysd"

  void attach(CLI::App* cmd) {
    cmd->add_option("--dataset", path, "dataset file (points)")->required();
    cmd->add_option("--format", format, "dataset format: csv | nysd (default: by extension)")
        ->check(CLI::IsMember({"csv", "nysd"}));
  }

  nystrom::Dataset load() const {
    nystrom::DatasetFormat fmt = format.empty() ? nystrom::format_from_path(path)
                                 : format == "csv" ? nystrom::DatasetFormat::csv
                                                   : nystrom::DatasetFormat::nysd;
    return nystrom::load_dataset(path, fmt);
  }
};

struct KernelArgs {
  std::string kind = "gaussian";
  double sigma = 1.0;
  double sigma_frac = 0.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--kernel", kind, "kernel: gaussian | gram | diffusion")
        ->check(CLI::IsMember({"gaussian", "gram", "diffusion"}));
    cmd->add_option("--sigma", sigma, "gaussian bandwidth");
    cmd->add_option("--sigma-frac", sigma_frac,
                    "set sigma to this fraction of the max pairwise distance (desk scale)");
  }

  nystrom::KernelSpec resolve(const nystrom::Dataset& data) const {
    nystrom::KernelSpec spec;
    spec.kind = nystrom::kernel_kind_from_string(kind);
    spec.sigma = sigma_frac > 0.0 ? sigma_frac * nystrom::max_pairwise_distance(data) : sigma;
    spec.validate();
    return spec;
  }
};

struct RunArgs {
  std::string sampler = "oasis";
  Index columns = 0;
  Index init_columns = 1;
  double tol = -1.0;  // < 0 means the scaled default
  std::uint64_t seed = 0;
  int workers = 1;

  void attach(CLI::App* cmd, bool with_workers = true) {
    cmd->add_option("--sampler", sampler, "sampler: oasis | uniform | leverage")
        ->check(CLI::IsMember({"oasis", "uniform", "leverage"}));
    cmd->add_option("--columns", columns, "number of columns to sample")->required();
    cmd->add_option("--init-columns", init_columns, "random seed columns for oasis");
    cmd->add_option("--tol", tol, "stopping tolerance on |Delta| (default: 1e-8 * max diag)");
    cmd->add_option("--seed", seed, "master seed");
    if (with_workers) {
      cmd->add_option("--workers", workers, "simulated workers (oasis only)")
          ->check(CLI::PositiveNumber);
    }
  }

  nystrom::OasisConfig config() const {
    nystrom::OasisConfig config;
    config.max_columns = columns;
    config.init_columns = init_columns;
    if (tol >= 0.0) config.tolerance = tol;
    config.seed = nystrom::split_seed(seed, 1);
    return config;
  }
};

json kernel_json(const nystrom::KernelSpec& spec) {
  json out{{"kind", nystrom::to_string(spec.kind)}};
  if (spec.needs_sigma()) out["sigma"] = spec.sigma;
  return out;
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << body;
  if (!out) throw std::runtime_error("write failed for " + path);
}

int run_generate(const std::string& kind, const json& params, const nystrom::Dataset& data,
                 const std::string& out_path, const std::string& format) {
  nystrom::DatasetFormat fmt = format.empty() ? nystrom::format_from_path(out_path)
                               : format == "csv" ? nystrom::DatasetFormat::csv
                                                 : nystrom::DatasetFormat::nysd;
  nystrom::save_dataset(data, out_path, fmt);
  json summary{{"generator", kind}, {"n", data.size()},   {"m", data.dim()},
               {"path", out_path},  {"params", params}};
  std::cout << summary.dump() << "\n";
  return 0;
}

int run_approximate(const DatasetArgs& dataset_args, const KernelArgs& kernel_args,
                    const RunArgs& run_args, const std::string& out_path,
                    const std::string& trace_path, const std::string& message_log_path,
                    bool no_timing) {
  const nystrom::Dataset data = dataset_args.load();
  const nystrom::KernelSpec spec = kernel_args.resolve(data);
  const nystrom::SamplerKind sampler = nystrom::sampler_from_string(run_args.sampler);
  const nystrom::OasisConfig config = run_args.config();

  if (run_args.workers > 1 && sampler != nystrom::SamplerKind::oasis) {
    throw std::invalid_argument("--workers > 1 applies to the oasis sampler only");
  }
  if (run_args.workers > 1 && spec.kind == nystrom::KernelKind::diffusion_gaussian) {
    throw std::invalid_argument(
        "the distributed run needs an implicit kernel (gaussian or gram); diffusion is "
        "explicit-only");
  }

  std::ofstream trace;
  nystrom::StepCallback on_step;
  if (!trace_path.empty()) {
    trace.open(trace_path);
    if (!trace) throw std::runtime_error("cannot write " + trace_path);
    on_step = [&](const nystrom::SelectionStep& step) {
      json line{{"step", step.step},
                {"index", step.index},
                {"delta", step.delta_abs},
                {"seconds", no_timing ? 0.0 : step.seconds}};
      trace << line.dump() << "\n";
    };
  }

  nystrom::OasisResult result;
  if (sampler == nystrom::SamplerKind::oasis) {
    if (run_args.workers > 1) {
      nystrom::MessageLog log;
      result = nystrom::oasis_p_run(data, spec, config, run_args.workers,
                                    message_log_path.empty() ? nullptr : &log, on_step);
      if (!message_log_path.empty()) {
        std::ofstream log_out(message_log_path);
        if (!log_out) throw std::runtime_error("cannot write " + message_log_path);
        log.write_jsonl(log_out);
      }
    } else {
      result = nystrom::oasis_run(nystrom::make_oracle(data, spec), config, on_step);
    }
  } else {
    const nystrom::KernelOracle oracle = nystrom::make_oracle(data, spec);
    nystrom::Stopwatch clock;
    std::vector<Index> lambda;
    if (sampler == nystrom::SamplerKind::uniform) {
      lambda = nystrom::uniform_sample(data.size(), run_args.columns, config.seed);
    } else {
      const nystrom::Matrix g = oracle.dense();  // leverage scores need the full matrix
      lambda = nystrom::leverage_sample(nystrom::leverage_scores(g, run_args.columns),
                                        run_args.columns, config.seed);
    }
    result.approx = nystrom::build_from_indices(oracle, lambda);
    result.reason = nystrom::Termination::column_cap;
    result.selection_seconds = clock.seconds();
  }

  json metadata{{"kernel", kernel_json(spec)},
                {"sampler", run_args.sampler},
                {"seed", run_args.seed},
                {"tolerance", run_args.tol >= 0.0 ? json(run_args.tol) : json()},
                {"workers", run_args.workers}};
  nystrom::save_approx(result.approx, out_path, metadata);

  json summary{{"sampler", run_args.sampler},
               {"n", result.approx.n()},
               {"k", result.approx.k()},
               {"reason", nystrom::to_string(result.reason)},
               {"elapsed_seconds", no_timing ? 0.0 : result.selection_seconds},
               {"workers", run_args.workers},
               {"seed", run_args.seed},
               {"lambda", result.approx.lambda},
               {"out", out_path}};
  if (result.psd_warning) summary["warning"] = "large negative Delta: input likely not PSD";
  std::cout << summary.dump() << "\n";
  return 0;
}

int run_sweep(const DatasetArgs& dataset_args, const KernelArgs& kernel_args,
              const RunArgs& run_args, const std::string& grid_arg, int trials,
              const std::string& error_mode, Index error_samples, const std::string& out_path,
              bool no_timing) {
  const nystrom::Dataset data = dataset_args.load();
  const nystrom::KernelSpec spec = kernel_args.resolve(data);
  const nystrom::KernelOracle oracle = nystrom::make_oracle(data, spec);

  nystrom::SweepOptions options;
  options.config = run_args.config();
  options.trials = trials;
  options.error_mode =
      error_mode == "sampled" ? nystrom::ErrorMode::sampled : nystrom::ErrorMode::full;
  options.error_samples = error_samples;

  std::vector<Index> grid;
  if (!grid_arg.empty()) {
    std::stringstream stream(grid_arg);
    std::string token;
    while (std::getline(stream, token, ',')) grid.push_back(std::stoll(token));
  } else {
    const Index l = run_args.columns;
    const Index step = std::max<Index>(1, l / 32);
    for (Index k = 1; k <= l; k += step) grid.push_back(k);
    if (grid.back() != l) grid.push_back(l);
  }

  auto curve = nystrom::sweep(oracle, nystrom::sampler_from_string(run_args.sampler), grid,
                              options);
  if (no_timing) {
    for (auto& point : curve) point.elapsed_seconds = 0.0;
  }

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  nystrom::write_curve_csv(out, curve);

  json sidecar{{"kernel", kernel_json(spec)},
               {"sampler", run_args.sampler},
               {"columns", run_args.columns},
               {"init_columns", run_args.init_columns},
               {"tolerance", run_args.tol >= 0.0 ? json(run_args.tol) : json()},
               {"seed", run_args.seed},
               {"trials", trials},
               {"error_mode", error_mode},
               {"error_samples", error_samples},
               {"grid", grid},
               {"dataset", dataset_args.path}};
  write_text(out_path + ".json", sidecar.dump(2) + "\n");

  json summary{{"points", curve.size()}, {"out", out_path}};
  std::cout << summary.dump() << "\n";
  return 0;
}

int run_evaluate(const std::string& approx_path, const DatasetArgs& dataset_args,
                 const KernelArgs& kernel_args, const std::string& error_mode,
                 Index error_samples, std::uint64_t seed) {
  const nystrom::LoadedApprox loaded = nystrom::load_approx(approx_path);
  const nystrom::Dataset data = dataset_args.load();
  const nystrom::KernelSpec spec = kernel_args.resolve(data);
  if (data.size() != loaded.approx.n()) {
    throw std::invalid_argument("approximation is for n = " + std::to_string(loaded.approx.n()) +
                                " but the dataset has n = " + std::to_string(data.size()));
  }
  const nystrom::KernelOracle oracle = nystrom::make_oracle(data, spec);

  double rel_error = 0.0;
  if (error_mode == "sampled") {
    rel_error = nystrom::sampled_entry_error(oracle, loaded.approx, error_samples,
                                             nystrom::split_seed(seed, 2));
  } else {
    rel_error = nystrom::relative_frobenius_error(oracle.dense(), loaded.approx);
  }

  json report{{"rel_error", rel_error},
              {"mode", error_mode},
              {"n", loaded.approx.n()},
              {"k", loaded.approx.k()},
              {"error_samples", error_mode == "sampled" ? json(error_samples) : json()},
              {"metadata", loaded.metadata}};
  std::cout << report.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nystrom low-rank kernel approximation with adaptive column sampling"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "write a synthetic dataset");
  generate->require_subcommand(1);
  struct {
    Index n = 2000;
    double noise = 0.05;
    Index dim = 8, per_vertex = 30;
    double sigma2 = 0.1;
    Index n1 = 100, n2 = 100;
    std::uint64_t seed = 0;
    std::string out, format;
  } gen;

  auto add_gen_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", gen.seed, "generator seed");
    cmd->add_option("--out", gen.out, "output file")->required();
    cmd->add_option("--format", gen.format, "csv | nysd (default: by extension)")
        ->check(CLI::IsMember({"csv", "nysd"}));
  };
  auto* moons = generate->add_subcommand("two-moons", "two interlocking noisy half-circles");
  moons->add_option("--n", gen.n, "total points");
  moons->add_option("--noise", gen.noise, "gaussian noise std");
  add_gen_common(moons);
  auto* borg_cmd = generate->add_subcommand("borg", "gaussian clusters on the cube vertices");
  borg_cmd->add_option("--dim", gen.dim, "cube dimension");
  borg_cmd->add_option("--per-vertex", gen.per_vertex, "points per vertex");
  borg_cmd->add_option("--sigma2", gen.sigma2, "cluster variance");
  add_gen_common(borg_cmd);
  auto* rank3 = generate->add_subcommand("gauss-rank3", "planar + 3D gaussian mix (Gram rank 3)");
  rank3->add_option("--n1", gen.n1, "planar points");
  rank3->add_option("--n2", gen.n2, "3D points");
  add_gen_common(rank3);

  // approximate
  auto* approximate = app.add_subcommand("approximate", "sample columns and factor");
  DatasetArgs approx_dataset;
  KernelArgs approx_kernel;
  RunArgs approx_run;
  std::string approx_out, trace_path, message_log_path;
  bool approx_no_timing = false;
  approx_dataset.attach(approximate);
  approx_kernel.attach(approximate);
  approx_run.attach(approximate);
  approximate->add_option("--out", approx_out, "output approximation (.nysa)")->required();
  approximate->add_option("--trace", trace_path, "per-step JSON-lines trace");
  approximate->add_option("--message-log", message_log_path,
                          "JSON-lines message log (workers > 1)");
  approximate->add_flag("--no-timing", approx_no_timing, "zero timing fields for byte-stable output");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "convergence curve over a k grid");
  DatasetArgs sweep_dataset;
  KernelArgs sweep_kernel;
  RunArgs sweep_run;
  std::string grid_arg, sweep_out;
  std::string sweep_error_mode = "full";
  Index sweep_error_samples = 100000;
  int sweep_trials = 10;
  bool sweep_no_timing = false;
  sweep_dataset.attach(sweep_cmd);
  sweep_kernel.attach(sweep_cmd);
  sweep_run.attach(sweep_cmd, /*with_workers=*/false);
  sweep_cmd->add_option("--grid", grid_arg, "comma-separated k values (default: spread to columns)");
  sweep_cmd->add_option("--trials", sweep_trials, "trials for randomized samplers");
  sweep_cmd->add_option("--error-mode", sweep_error_mode, "full | sampled")
      ->check(CLI::IsMember({"full", "sampled"}));
  sweep_cmd->add_option("--error-samples", sweep_error_samples, "entries for sampled mode");
  sweep_cmd->add_option("--out", sweep_out, "output CSV")->required();
  sweep_cmd->add_flag("--no-timing", sweep_no_timing, "zero timing fields for byte-stable output");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "error of a stored approximation");
  DatasetArgs eval_dataset;
  KernelArgs eval_kernel;
  std::string eval_approx;
  std::string eval_error_mode = "full";
  Index eval_error_samples = 100000;
  std::uint64_t eval_seed = 0;
  evaluate->add_option("--approx", eval_approx, "approximation file (.nysa)")->required();
  eval_dataset.attach(evaluate);
  eval_kernel.attach(evaluate);
  evaluate->add_option("--error-mode", eval_error_mode, "full | sampled")
      ->check(CLI::IsMember({"full", "sampled"}));
  evaluate->add_option("--error-samples", eval_error_samples, "entries for sampled mode");
  evaluate->add_option("--seed", eval_seed, "estimator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) {
      if (moons->parsed()) {
        return run_generate("two-moons",
                            {{"n", gen.n}, {"noise", gen.noise}, {"seed", gen.seed}},
                            nystrom::two_moons(gen.n, gen.noise, gen.seed), gen.out, gen.format);
      }
      if (borg_cmd->parsed()) {
        return run_generate(
            "borg",
            {{"dim", gen.dim}, {"per_vertex", gen.per_vertex}, {"sigma2", gen.sigma2},
             {"seed", gen.seed}},
            nystrom::borg(gen.dim, gen.per_vertex, gen.sigma2, gen.seed), gen.out, gen.format);
      }
      return run_generate("gauss-rank3", {{"n1", gen.n1}, {"n2", gen.n2}, {"seed", gen.seed}},
                          nystrom::gauss_rank3(gen.n1, gen.n2, gen.seed), gen.out, gen.format);
    }
    if (approximate->parsed()) {
      return run_approximate(approx_dataset, approx_kernel, approx_run, approx_out, trace_path,
                             message_log_path, approx_no_timing);
    }
    if (sweep_cmd->parsed()) {
      return run_sweep(sweep_dataset, sweep_kernel, sweep_run, grid_arg, sweep_trials,
                       sweep_error_mode, sweep_error_samples, sweep_out, sweep_no_timing);
    }
    return run_evaluate(eval_approx, eval_dataset, eval_kernel, eval_error_mode,
                        eval_error_samples, eval_seed);
  } catch (const std::exception& err) {
    std::cerr << json{{"error", err.what()}}.dump() << "\n";
    return 1;
  }
}
