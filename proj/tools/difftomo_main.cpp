// Command-line driver: simulate, reconstruct, gradcheck, phantom, sweep.
//
// Exit codes: 0 success, 1 invalid input (configuration, files, arguments),
// 2 solver failure. Diagnostics go to stderr. The thread count follows
// OMP_NUM_THREADS.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "difftomo/experiment.hpp"

namespace fs = std::filesystem;
using namespace difftomo;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
  cmd->add_option("--config,-c", c.config, "JSON configuration file")->required();
  cmd->add_option("--seed", c.seed, "Override the configuration seed");
  if (with_out) cmd->add_option("--out,-o", c.out, "Output directory (overrides output.directory)");
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.output.directory = c.out;
  return cfg;
}

fs::path prepare_output(const ExperimentConfig& cfg) {
  fs::path dir(cfg.output.directory);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error(dir.string() + ": cannot create output directory: " + ec.message());
  return dir;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int cmd_phantom(const Common& c) {
  const auto cfg = load(c);
  validate_config(cfg);
  const Grid grid = build_grid(cfg.grid.dim, cfg.grid.J, cfg.grid.pitch);
  const auto dir = prepare_output(cfg);
  const Phantom ph = build_phantom(cfg, grid);
  for (const auto& p : write_image(ph.image, grid, (dir / "phantom").string(), cfg.output.slices)) {
    std::cerr << "wrote " << p << '\n';
  }
  return 0;
}

int cmd_simulate(const Common& c) {
  const auto cfg = load(c);
  const auto dir = prepare_output(cfg);
  const Problem pb = build_problem(cfg);
  write_dataset(pb.data, (dir / "data.csv").string());
  write_image(pb.phantom->image, pb.grid, (dir / "phantom").string(), cfg.output.slices);
  std::cerr << "wrote " << (dir / "data.csv").string() << " (" << pb.data.transmitter_count()
            << " transmitters)\n";
  return 0;
}

int cmd_reconstruct(const Common& c, const std::string& data_path) {
  const auto cfg = load(c);
  const auto dir = prepare_output(cfg);
  std::optional<ScatteringDataset> data;
  if (!data_path.empty()) data = read_dataset(data_path);
  const Problem pb = build_problem(cfg, std::move(data));
  MethodRun run;
  try {
    run = run_method(pb, cfg.method);
  } catch (const ReconstructionError& e) {
    write_telemetry(e.telemetry(), (dir / "telemetry.csv").string());
    write_timing(e.telemetry(), (dir / "timing.csv").string());
    write_image(e.last_iterate(), pb.grid, (dir / "last_iterate").string(), cfg.output.slices);
    throw;
  }
  write_image(run.result.image, pb.grid, (dir / "image").string(), cfg.output.slices);
  write_telemetry(run.result.telemetry, (dir / "telemetry.csv").string());
  write_timing(run.result.telemetry, (dir / "timing.csv").string());

  std::ofstream summary(dir / "summary.txt");
  summary << "method=" << to_string(run.method) << "\nalpha=" << fmt(run.solver.alpha)
          << "\ngamma=" << fmt(run.solver.gamma) << "\ntau=" << fmt(run.solver.tau)
          << "\nlipschitz=" << fmt(run.lipschitz) << "\niterations=" << run.result.iterations
          << "\nconverged=" << (run.result.converged ? 1 : 0) << '\n';
  if (pb.phantom) summary << "snr_db=" << fmt(snr_db(run.result.image, pb.phantom->image)) << '\n';
  if (!summary) throw std::runtime_error((dir / "summary.txt").string() + ": write failed");
  std::cerr << to_string(run.method) << ": " << run.result.iterations << " iterations";
  if (pb.phantom) std::cerr << ", SNR " << snr_db(run.result.image, pb.phantom->image) << " dB";
  std::cerr << '\n';
  return 0;
}

int cmd_gradcheck(const Common& c, int count, double threshold) {
  const auto cfg = load(c);
  const Problem pb = build_problem(cfg);
  const RVector f = gradcheck_point(pb, cfg.seed);
  const auto r = gradcheck(pb, f, count, cfg.seed);
  for (std::size_t i = 0; i < r.coordinates.size(); ++i) {
    std::cerr << "n=" << r.coordinates[i] << " adjoint=" << fmt(r.adjoint[i])
              << " finite_difference=" << fmt(r.finite_difference[i]) << '\n';
  }
  std::cout << "max relative error: " << r.max_relative_error << '\n';
  if (r.max_relative_error > threshold) {
    std::cerr << "gradient check failed: error above " << threshold << '\n';
    return 2;
  }
  return 0;
}

int cmd_sweep(const Common& c) {
  const auto cfg = load(c);
  const auto dir = prepare_output(cfg);
  const auto res = run_sweep(cfg, [](const SweepRow& r) {
    std::cerr << to_string(r.method) << " contrast=" << r.contrast << " tau_rel=" << r.tau_rel
              << " snr=" << r.snr_db << " dB iterations=" << r.iterations << '\n';
  });
  write_sweep_csv(res.best, (dir / "sweep.csv").string());
  write_sweep_csv(res.all, (dir / "sweep_all.csv").string());
  std::cerr << "wrote " << (dir / "sweep.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffraction tomography by relaxed FISTA (CISOR) and baselines"};
  app.require_subcommand(1);
  Common common;
  std::string data_path;
  int count = 10;
  double threshold = 1e-5;

  auto* simulate = app.add_subcommand("simulate", "Build the phantom and simulate a dataset");
  add_common(simulate, common);
  auto* reconstruct = app.add_subcommand("reconstruct", "Run the configured method");
  add_common(reconstruct, common);
  reconstruct->add_option("--data,-d", data_path, "Dataset CSV (defaults to simulating the phantom)");
  auto* grad = app.add_subcommand("gradcheck", "Compare the adjoint gradient with finite differences");
  add_common(grad, common, false);
  grad->add_option("--count", count, "Number of random coordinates")->check(CLI::PositiveNumber);
  grad->add_option("--threshold", threshold, "Largest accepted relative error");
  auto* phantom = app.add_subcommand("phantom", "Write the ground-truth images");
  add_common(phantom, common);
  auto* sweep = app.add_subcommand("sweep", "Contrast sweep: methods x contrasts SNR table");
  add_common(sweep, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*simulate) return cmd_simulate(common);
    if (*reconstruct) return cmd_reconstruct(common, data_path);
    if (*grad) return cmd_gradcheck(common, count, threshold);
    if (*phantom) return cmd_phantom(common);
    if (*sweep) return cmd_sweep(common);
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::cerr << app.help();
  return 1;
}
