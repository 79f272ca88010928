// Command-line front end: simulate, calibrate, reconstruct, evaluate, sweep,
// and train-denoiser subcommands over the adobi core library. Every command
// echoes the exact configuration it ran with into its output directory.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "adobi/experiment.hpp"
#include "adobi/init_calibration.hpp"
#include "adobi/metrics.hpp"
#include "adobi/mrid_io.hpp"

namespace fs = std::filesystem;
using namespace adobi;

namespace {

struct CommandState {
  ExperimentConfig config;
  std::string config_file;  // --config path, when given
  CLI::App* app = nullptr;
};

void add_experiment_flags(CLI::App* cmd, CommandState& state) {
  ExperimentConfig& c = state.config;
  cmd->option_defaults()->always_capture_default();
  cmd->set_config("--config", "", "flat key=value configuration file");
  cmd->allow_config_extras(CLI::config_extras_mode::ignore);

  cmd->add_option("--size", c.size, "image size (pixels per side)");
  cmd->add_option("--ellipses", c.n_ellipses, "phantom ellipse count");
  cmd->add_option("--coils", c.n_coils, "number of receive coils");
  cmd->add_option("--coil-perturbation", c.coil_perturbation,
                  "relative error of the initial maps");
  cmd->add_option("--coil-seed", c.coil_seed, "coil rig geometry seed");
  cmd->add_option("--coil-bandlimit", c.coil_bandlimit,
                  "project maps onto this many harmonics (0 = off)");
  cmd->add_option("--coil-normalize", c.coil_normalize,
                  "RSS-normalize the coil maps (true|false)");

  cmd->add_option("--acceleration", c.acceleration, "undersampling factor");
  cmd->add_option("--acs-width", c.acs_width, "auto-calibration columns");
  cmd->add_option("--mask-style", c.mask_style, "random | equispaced")
      ->check(CLI::IsMember({"random", "equispaced"}));
  cmd->add_option("--noise-level", c.noise_level,
                  "measurement noise norm relative to ||y||");

  cmd->add_option("--train-steps", c.train_steps, "fine schedule steps");
  cmd->add_option("--sigma-max", c.sigma_max, "bridge noise scale");
  cmd->add_option("--nfe", c.nfe, "reverse steps at inference");
  cmd->add_option("--gamma1", c.gamma1, "consistency step size");
  cmd->add_option("--lambda", c.csm_lambda, "map-anchor weight (relative)");
  cmd->add_option("--csm-steps", c.csm_steps, "inner map-update iterations");
  cmd->add_option("--csm-lr", c.csm_lr, "inner map-update step size");
  cmd->add_option("--noise-mode", c.noise_mode,
                  "as-written | variance-matched | ode")
      ->check(CLI::IsMember({"as-written", "variance-matched", "ode"}));

  cmd->add_option("--method", c.method, "zf | grappa | ddb | cddb | adobi")
      ->check(CLI::IsMember({"zf", "grappa", "ddb", "cddb", "adobi"}));
  cmd->add_option("--init", c.init, "bridge source: zf | grappa")
      ->check(CLI::IsMember({"zf", "grappa"}));
  cmd->add_option("--init-maps", c.init_maps, "perturb | acs | true")
      ->check(CLI::IsMember({"perturb", "acs", "true"}));
  cmd->add_option("--denoiser", c.denoiser,
                  "gaussian-oracle | ridge:PATH | gaussian:PATH");
  cmd->add_option("--train-pairs", c.train_pairs, "denoiser training pairs");
  cmd->add_option("--train-seed", c.train_seed, "denoiser training seed");
  cmd->add_option("--samples", c.n_samples, "posterior samples per slice");
  cmd->add_option("--seed", c.seed, "master experiment seed");

  cmd->add_option("--grappa-rows", c.grappa_kernel_rows, "kernel row taps");
  cmd->add_option("--grappa-cols", c.grappa_kernel_cols, "kernel column taps");
  cmd->add_option("--grappa-tikhonov", c.grappa_tikhonov,
                  "relative calibration regularization");
  cmd->add_option("--smoothing-width", c.smoothing_width,
                  "ACS columns used for map estimation (0 = all)");

  cmd->add_option("--out", c.out_dir, "output directory");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open for writing: " + path.string(), 0);
  out << text;
}

// Configuration provenance: a verbatim copy of the input file when one was
// given, plus the fully resolved option set.
void echo_config(const CommandState& state, const fs::path& dir) {
  const std::string resolved = state.app->config_to_str(true, false);
  if (!state.config_file.empty()) {
    std::ifstream in(state.config_file, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    write_text(dir / "config.txt", buffer.str());
  } else {
    write_text(dir / "config.txt", resolved);
  }
  write_text(dir / "config_resolved.txt", resolved);
}

std::vector<double> magnitude_of(const ComplexImage& img) {
  std::vector<double> out(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = std::abs(img.data()[i]);
  return out;
}

void write_trace_csv(const fs::path& path, const SampleTrace& trace) {
  std::ostringstream out;
  out << "t,data_residual,csm_change\n";
  for (const StepRecord& step : trace.steps) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g\n", step.t_index,
                  step.data_residual, step.csm_change);
    out << buf;
  }
  write_text(path, out.str());
}

int cmd_simulate(CommandState& state) {
  const ExperimentConfig& c = state.config;
  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  const SimulatedData data = simulate(c);

  save_image(dir / "phantom.mrid", data.phantom);
  save_maps(dir / "true_maps.mrid", data.coils.true_maps);
  save_maps(dir / "initial_maps.mrid",
            c.init_maps == "acs"
                ? estimate_csm_from_acs(data.kspace, c.smoothing_width)
                : data.coils.initial_maps);
  save_mask(dir / "mask.mrid", data.mask);
  save_kspace_planes(dir / "kspace.mrid", data.kspace);

  write_text(dir / "manifest.txt",
             "phantom.mrid\ntrue_maps.mrid\ninitial_maps.mrid\nmask.mrid\n"
             "kspace.mrid\n");
  echo_config(state, dir);
  std::cout << "simulated " << c.size << "x" << c.size << " slice, " << c.n_coils
            << " coils, " << data.mask.n_kept() << "/" << c.size
            << " columns kept -> " << dir.string() << "\n";
  return 0;
}

int cmd_calibrate(CommandState& state, const std::string& in_dir) {
  const ExperimentConfig& c = state.config;
  const fs::path in(in_dir);
  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  const MultiCoilKSpace y = load_kspace(in / "kspace.mrid", in / "mask.mrid");

  const SensitivityMaps acs_maps = estimate_csm_from_acs(y, c.smoothing_width);
  save_maps(dir / "acs_maps.mrid", acs_maps);

  std::ostringstream report;
  report << "acs_maps: estimated from " << y.mask().acs_width()
         << " ACS columns, normalization defect "
         << acs_maps.normalization_defect() << "\n";
  try {
    const GrappaKernel kernel = grappa_calibrate(
        y, c.grappa_kernel_rows, c.grappa_kernel_cols, c.grappa_tikhonov);
    if (kernel.empty()) {
      report << "grappa: fully sampled, nothing to calibrate\n";
    } else {
      report << "grappa: acceleration " << kernel.acceleration << ", taps "
             << kernel.taps() << "\n";
      for (std::size_t d = 0; d < kernel.fit_residual.size(); ++d)
        report << "grappa: offset " << (d + 1) << " relative fit residual "
               << kernel.fit_residual[d] << "\n";
    }
  } catch (const CalibrationError& e) {
    report << "grappa: skipped (" << e.what() << ")\n";
  }
  write_text(dir / "calibration.txt", report.str());
  echo_config(state, dir);
  std::cout << "calibration written to " << dir.string() << "\n";
  return 0;
}

int cmd_reconstruct(CommandState& state, const std::string& in_dir) {
  ExperimentConfig c = state.config;
  const fs::path in(in_dir);
  const fs::path dir(c.out_dir);
  fs::create_directories(dir);

  const MultiCoilKSpace y = load_kspace(in / "kspace.mrid", in / "mask.mrid");
  c.size = y.height();
  c.n_coils = y.n_coils();
  const SensitivityMaps initial =
      c.init_maps == "acs" ? estimate_csm_from_acs(y, c.smoothing_width)
                           : load_maps(in / "initial_maps.mrid");

  const ReconOutput out = reconstruct_measurement(c, y, initial);

  save_image(dir / "recon.mrid", out.image);
  save_maps(dir / "final_maps.mrid", out.maps);
  write_trace_csv(dir / "trace.csv", out.trace);
  if (out.has_ensemble) {
    save_image(dir / "mean.mrid", out.ensemble.mean_magnitude);
    save_image(dir / "std.mrid", out.ensemble.std_magnitude);
  }
  write_text(dir / "meta.txt",
             "method=" + c.method + "\nseed=" + std::to_string(c.seed) + "\n");
  char timing[64];
  std::snprintf(timing, sizeof(timing), "runtime_s=%.6f\n", out.runtime_s);
  write_text(dir / "timing.txt", timing);
  echo_config(state, dir);
  std::cout << c.method << " reconstruction (" << out.trace.steps.size()
            << " steps) -> " << dir.string() << "\n";
  return 0;
}

double read_runtime(const fs::path& recon_dir) {
  std::ifstream in(recon_dir / "timing.txt");
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("runtime_s=", 0) == 0) return std::stod(line.substr(10));
  return 0.0;
}

std::pair<std::string, std::uint64_t> read_meta(const fs::path& recon_dir) {
  std::ifstream in(recon_dir / "meta.txt");
  std::string line, method = "unknown";
  std::uint64_t seed = 0;
  while (std::getline(in, line)) {
    if (line.rfind("method=", 0) == 0) method = line.substr(7);
    if (line.rfind("seed=", 0) == 0) seed = std::stoull(line.substr(5));
  }
  return {method, seed};
}

int cmd_evaluate(CommandState& state, const std::string& truth_dir,
                 const std::vector<std::string>& recon_dirs, bool dump_images) {
  const ExperimentConfig& c = state.config;
  const fs::path truth(truth_dir);
  const fs::path dir(c.out_dir);
  fs::create_directories(dir);

  const ComplexImage reference = load_image(truth / "phantom.mrid");
  const SensitivityMaps true_maps = load_maps(truth / "true_maps.mrid");
  const MultiCoilKSpace y = load_kspace(truth / "kspace.mrid", truth / "mask.mrid");
  const ForwardOperator true_op(true_maps, y.mask());

  std::vector<ReconReport> reports;
  for (const std::string& rd : recon_dirs) {
    const fs::path recon_dir(rd);
    const ComplexImage recon = load_image(recon_dir / "recon.mrid");
    const auto [method, seed] = read_meta(recon_dir);
    reports.push_back(evaluate_reconstruction(
        method, seed, reference, recon, true_op.data_residual(recon, y),
        read_runtime(recon_dir)));

    if (dump_images) {
      const std::string stem = recon_dir.filename().string();
      write_pgm(dir / (stem + "_magnitude.pgm"), magnitude_of(recon),
                recon.height(), recon.width());
      std::vector<double> error(recon.size());
      for (std::size_t i = 0; i < recon.size(); ++i)
        error[i] = std::abs(recon.data()[i] - reference.data()[i]);
      write_pgm(dir / (stem + "_error.pgm"), error, recon.height(), recon.width());
      if (fs::exists(recon_dir / "std.mrid")) {
        const ComplexImage spread = load_image(recon_dir / "std.mrid");
        write_pgm(dir / (stem + "_std.pgm"), magnitude_of(spread), spread.height(),
                  spread.width());
      }
    }
  }

  write_report_csv(dir / "reports.csv", reports);
  write_aggregate_csv(dir / "aggregate.csv", aggregate(reports));
  echo_config(state, dir);
  std::cout << "evaluated " << reports.size() << " reconstruction(s) -> "
            << dir.string() << "\n";
  return 0;
}

int cmd_sweep(CommandState& state, const std::string& axis,
              std::vector<double> values, int n_seeds) {
  ExperimentConfig base = state.config;
  if (values.empty()) {
    if (axis == "gamma")
      values = {0.5, 1.0, 1.5, 2.0, 2.4, 3.0};
    else if (axis == "nfe")
      values = {1, 2, 5, 10};
    else if (axis == "lambda")
      values = {0.0, 1e-3, 1e-2, 1e-1};
  }
  if (values.size() < 2) throw ConfigError("sweep: need at least two values");
  if (n_seeds < 1) throw ConfigError("sweep: need at least one seed");

  const fs::path dir(base.out_dir);
  fs::create_directories(dir);

  std::ostringstream csv;
  csv << "axis,value,seed,psnr,ssim,nmse,residual,runtime_s\n";
  for (const double value : values) {
    ExperimentConfig c = base;
    if (axis == "gamma")
      c.gamma1 = value;
    else if (axis == "nfe")
      c.nfe = static_cast<int>(value);
    else if (axis == "lambda")
      c.csm_lambda = value;
    else
      throw ConfigError("sweep: unknown axis " + axis);

    for (int k = 0; k < n_seeds; ++k) {
      c.seed = base.seed + static_cast<std::uint64_t>(k);
      const SimulatedData data = simulate(c);
      const ReconOutput out = reconstruct(c, data);
      const ReconReport report =
          evaluate_reconstruction(c.method, c.seed, data.phantom, out.image,
                                  out.data_residual, out.runtime_s);
      char buf[192];
      std::snprintf(buf, sizeof(buf), "%s,%.10g,%llu,%.10g,%.10g,%.10g,%.10g,%.6f\n",
                    axis.c_str(), value, static_cast<unsigned long long>(c.seed),
                    report.psnr_db, report.ssim_value, report.nmse_value,
                    report.data_residual, report.runtime_s);
      csv << buf;
    }
  }
  write_text(dir / "sweep.csv", csv.str());
  echo_config(state, dir);
  std::cout << "swept " << axis << " over " << values.size() << " values x "
            << n_seeds << " seeds -> " << dir.string() << "\n";
  return 0;
}

int cmd_train_denoiser(CommandState& state, const std::string& kind,
                       const std::string& out_file) {
  const ExperimentConfig& c = state.config;
  const auto pairs = training_pairs(c, c.train_pairs, c.train_seed);
  const fs::path out(out_file);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());

  if (kind == "gaussian") {
    save_denoiser(out, GaussianPairModel::fit(pairs));
  } else if (kind == "ridge") {
    const BridgeSchedule schedule = build_schedule(c, pairs.front().second);
    save_denoiser(out, ridge_train(pairs, schedule));
  } else {
    throw ConfigError("train-denoiser: unknown kind " + kind);
  }
  std::cout << "trained " << kind << " denoiser on " << pairs.size()
            << " pairs -> " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive diffusion-bridge reconstruction for parallel MRI"};
  app.require_subcommand(1);

  CommandState sim_state, cal_state, rec_state, eval_state, sweep_state, train_state;
  std::string in_dir, truth_dir, axis = "gamma", kind = "ridge";
  std::string train_out = "denoiser.mrid";
  std::vector<std::string> recon_dirs;
  std::vector<double> sweep_values;
  int sweep_seeds = 5;
  bool dump_images = false;

  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "generate a synthetic acquisition");
  add_experiment_flags(simulate_cmd, sim_state);
  sim_state.app = simulate_cmd;

  CLI::App* calibrate_cmd = app.add_subcommand(
      "calibrate", "estimate maps and kernels from a simulation");
  add_experiment_flags(calibrate_cmd, cal_state);
  calibrate_cmd->add_option("--in", in_dir, "simulation directory")->required();
  cal_state.app = calibrate_cmd;

  CLI::App* reconstruct_cmd =
      app.add_subcommand("reconstruct", "run a reconstruction method");
  add_experiment_flags(reconstruct_cmd, rec_state);
  reconstruct_cmd->add_option("--in", in_dir, "simulation directory")->required();
  rec_state.app = reconstruct_cmd;

  CLI::App* evaluate_cmd =
      app.add_subcommand("evaluate", "score reconstructions against the truth");
  add_experiment_flags(evaluate_cmd, eval_state);
  evaluate_cmd->add_option("--truth", truth_dir, "simulation directory")->required();
  evaluate_cmd->add_option("--recon", recon_dirs, "reconstruction directories")
      ->required();
  evaluate_cmd->add_flag("--dump-images", dump_images, "write PGM image dumps");
  eval_state.app = evaluate_cmd;

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "parameter sweep");
  add_experiment_flags(sweep_cmd, sweep_state);
  sweep_cmd->add_option("--axis", axis, "gamma | nfe | lambda")
      ->check(CLI::IsMember({"gamma", "nfe", "lambda"}));
  sweep_cmd->add_option("--values", sweep_values,
                        "axis values (default grid if omitted)");
  sweep_cmd->add_option("--seeds", sweep_seeds, "seeds per value");
  sweep_state.app = sweep_cmd;

  CLI::App* train_cmd =
      app.add_subcommand("train-denoiser", "fit a denoiser on synthetic pairs");
  add_experiment_flags(train_cmd, train_state);
  train_cmd->add_option("--kind", kind, "ridge | gaussian")
      ->check(CLI::IsMember({"ridge", "gaussian"}));
  train_cmd->add_option("--model-out", train_out, "output denoiser file")
      ->required();
  train_state.app = train_cmd;

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    for (CommandState* state : {&sim_state, &cal_state, &rec_state, &eval_state,
                                &sweep_state, &train_state})
      if (state->app != nullptr && state->app->count("--config") > 0)
        state->config_file = state->app->get_config_ptr()->as<std::string>();

    if (simulate_cmd->parsed()) return cmd_simulate(sim_state);
    if (calibrate_cmd->parsed()) return cmd_calibrate(cal_state, in_dir);
    if (reconstruct_cmd->parsed()) return cmd_reconstruct(rec_state, in_dir);
    if (evaluate_cmd->parsed())
      return cmd_evaluate(eval_state, truth_dir, recon_dirs, dump_images);
    if (sweep_cmd->parsed())
      return cmd_sweep(sweep_state, axis, sweep_values, sweep_seeds);
    if (train_cmd->parsed()) return cmd_train_denoiser(train_state, kind, train_out);
  } catch (const std::exception& e) {
    std::cerr << "adobi: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
