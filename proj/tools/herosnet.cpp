// herosnet command-line tool: simulate, train, reconstruct, eval, gradcheck,
// make-dataset.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "herosnet/cassi.hpp"
#include "herosnet/checkpoint.hpp"
#include "herosnet/config.hpp"
#include "herosnet/dataset.hpp"
#include "herosnet/error.hpp"
#include "herosnet/gradcheck.hpp"
#include "herosnet/io.hpp"
#include "herosnet/mask.hpp"
#include "herosnet/metrics.hpp"
#include "herosnet/recovery.hpp"
#include "herosnet/trainer.hpp"

namespace fs = std::filesystem;
using namespace herosnet;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitFormat = 2;
constexpr int kExitGeometry = 3;

std::string cube_shape(const HyperspectralCube& c) {
  return std::to_string(c.height) + "x" + std::to_string(c.width) + "x" + std::to_string(c.channels);
}

struct SimulateArgs {
  std::string cube, mask, out;
  std::uint64_t mask_seed = 0;
  bool random_mask = false;
  double noise = 0.0;
  std::uint64_t noise_seed = 0;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto cube = io::load_cube(a.cube);
  const Mask mask = a.random_mask ? Mask::bernoulli(cube.height, cube.width, 0.5, a.mask_seed) : load_mask(a.mask);
  if (mask.height != cube.height || mask.width != cube.width) {
    throw ShapeError("mask is " + std::to_string(mask.height) + "x" + std::to_string(mask.width) + " but cube is " +
                     cube_shape(cube));
  }
  const auto y = cassi::forward(cube, mask, DispersionRule::unit(cube.channels), a.noise, a.noise_seed);
  io::save_measurement(a.out, y);
  std::printf("cube=%s measurement=%zux%zu noise=%g\n", cube_shape(cube).c_str(), y.height, y.width, a.noise);
  return 0;
}

struct TrainArgs {
  std::string data, config, out;
  bool fresh = false;
};

int cmd_train(const TrainArgs& a) {
  const auto cfg = load_config(a.config);
  const auto cubes = dataset::load_dataset(a.data);
  if (cubes.empty()) throw FormatError("dataset directory " + a.data + " holds no .hsc files");

  std::optional<TrainState> resume;
  const auto ckpt_path = fs::path(a.out) / "checkpoint.hwt";
  if (!a.fresh && fs::exists(ckpt_path)) {
    resume = state_from_checkpoint(load_checkpoint(ckpt_path.string()), cfg.train);
    std::printf("resuming from %s at epoch %d\n", ckpt_path.c_str(), resume->next_epoch);
  }

  const char* variant = cfg.train.mask_mode == MaskMode::fixed ? "HerosNet-base" : "HerosNet";
  fs::create_directories(a.out);
  {
    std::ofstream run(fs::path(a.out) / "run.txt", std::ios::trunc);
    run << "variant=" << variant << '\n' << format_config(cfg);
  }
  std::printf("variant=%s cubes=%zu geometry=%s\n", variant, cubes.size(), cube_shape(cubes.front()).c_str());

  TrainOptions opts;
  opts.out_dir = a.out;
  opts.eval_every = cfg.eval_every;
  opts.on_epoch = [](const EpochMetrics& m) {
    std::printf("epoch=%d lr=%.6g train_loss=%.6g val_psnr=%.4f val_ssim=%.4f\n", m.epoch, m.lr, m.train_loss,
                m.val_psnr, m.val_ssim);
    std::fflush(stdout);
  };
  const auto result = train(cubes, cfg.train, cfg.recovery, opts, std::move(resume));
  std::printf("done: %lld steps, checkpoint %s\n", result.steps, ckpt_path.c_str());
  return 0;
}

struct ReconstructArgs {
  std::string meas, mask, checkpoint, out, png;
};

int cmd_reconstruct(const ReconstructArgs& a) {
  const auto y = io::load_measurement(a.meas);
  const auto mask = load_mask(a.mask);
  const auto ckpt = load_checkpoint(a.checkpoint);
  const auto net = network_from_checkpoint(ckpt);
  const auto C = static_cast<std::size_t>(ckpt.config.C);
  if (mask.height != y.height || mask.width + C - 1 != y.width) {
    throw ShapeError("measurement is " + std::to_string(y.height) + "x" + std::to_string(y.width) + " but mask " +
                     std::to_string(mask.height) + "x" + std::to_string(mask.width) + " with C=" + std::to_string(C) +
                     " needs " + std::to_string(mask.height) + "x" + std::to_string(mask.width + C - 1));
  }
  ckpt.config.check_geometry(mask.height, mask.width);
  const auto x = recovery::reconstruct(y, mask, DispersionRule::unit(C), net);
  io::save_cube(a.out, x);
  if (!a.png.empty()) io::export_band_pngs(a.png, x);
  std::printf("reconstructed %s\n", cube_shape(x).c_str());
  return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& ref_path) {
  const auto pred = io::load_cube(pred_path);
  const auto ref = io::load_cube(ref_path);
  if (pred.height != ref.height || pred.width != ref.width || pred.channels != ref.channels) {
    throw ShapeError("pred is " + cube_shape(pred) + " but ref is " + cube_shape(ref));
  }
  std::printf("psnr=%.4f ssim=%.4f\n", metrics::psnr(pred, ref), metrics::ssim(pred, ref));
  return 0;
}

int cmd_gradcheck(const std::string& config_path, std::size_t samples) {
  gradcheck::Options opts;
  if (!config_path.empty()) {
    // The gradient check defaults to the micro network unless the file says otherwise.
    std::ifstream is(config_path);
    if (!is) throw ConfigError("cannot open config " + config_path);
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    const auto cfg = parse_config_string("preset=micro\n" + text);
    opts.config = cfg.recovery;
    opts.height = cfg.height;
    opts.width = cfg.width;
    opts.seed = cfg.train.seed;
  }
  opts.samples_per_tensor = samples;
  const auto report = gradcheck::run(opts);
  std::fputs(gradcheck::format_report(report).c_str(), stdout);
  return report.passed() ? 0 : kExitFailure;
}

struct DatasetArgs {
  std::string out, geometry;
  std::size_t count = 8;
  std::uint64_t seed = 0;
  int enc_levels = RecoveryConfig::toy().enc_levels;
};

int cmd_make_dataset(const DatasetArgs& a) {
  const auto spec = dataset::parse_geometry(a.geometry);
  const std::size_t factor = std::size_t{1} << a.enc_levels;
  if (spec.height % factor != 0 || spec.width % factor != 0) {
    std::fprintf(stderr, "warning: %zux%zu is not divisible by 2^enc_levels = %zu; training will reject it\n",
                 spec.height, spec.width, factor);
  }
  const auto paths = dataset::write_dataset(a.out, dataset::synthesize_many(spec, a.count, a.seed));
  std::printf("wrote %zu cubes of %zux%zux%zu to %s\n", paths.size(), spec.height, spec.width, spec.channels,
              a.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral snapshot compressive imaging toolkit"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Apply the coded-aperture forward model to a cube");
  simulate->add_option("--cube", sim.cube, "Input cube (.hsc)")->required();
  auto* mask_opt = simulate->add_option("--mask", sim.mask, "Mask text file");
  auto* rand_opt = simulate->add_option("--mask-random", sim.mask_seed, "Use a Bernoulli(0.5) mask with this seed");
  mask_opt->excludes(rand_opt);
  simulate->add_option("--noise", sim.noise, "Gaussian noise std-dev")->default_val(0.0);
  simulate->add_option("--noise-seed", sim.noise_seed, "Noise generator seed")->default_val(0);
  simulate->add_option("--out", sim.out, "Output measurement (.msr)")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Jointly train mask and recovery network");
  train_cmd->add_option("--data", tr.data, "Directory of .hsc cubes")->required();
  train_cmd->add_option("--config", tr.config, "key=value config file")->required();
  train_cmd->add_option("--out", tr.out, "Output directory")->required();
  train_cmd->add_flag("--fresh", tr.fresh, "Ignore an existing checkpoint in --out");

  ReconstructArgs rec;
  auto* reconstruct = app.add_subcommand("reconstruct", "Recover a cube from a measurement");
  reconstruct->add_option("--meas", rec.meas, "Measurement (.msr)")->required();
  reconstruct->add_option("--mask", rec.mask, "Mask text file")->required();
  reconstruct->add_option("--checkpoint", rec.checkpoint, "Trained weights (.hwt)")->required();
  reconstruct->add_option("--out", rec.out, "Output cube (.hsc)")->required();
  reconstruct->add_option("--png", rec.png, "Also write per-band PNGs here");

  std::string pred, ref;
  auto* eval = app.add_subcommand("eval", "PSNR and SSIM of a prediction against a reference");
  eval->add_option("--pred", pred, "Predicted cube")->required();
  eval->add_option("--ref", ref, "Reference cube")->required();

  std::string gc_config;
  std::size_t gc_samples = 8;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every parameter group");
  grad->add_option("--config", gc_config, "key=value config (defaults to the micro network)");
  grad->add_option("--samples", gc_samples, "Entries checked per tensor, 0 for all")->default_val(8);

  DatasetArgs ds;
  auto* make = app.add_subcommand("make-dataset", "Generate synthetic cubes");
  make->add_option("--out", ds.out, "Output directory")->required();
  make->add_option("--count", ds.count, "Number of cubes")->default_val(8);
  make->add_option("--geometry", ds.geometry, "HxWxC")->default_val("32x32x8");
  make->add_option("--seed", ds.seed, "Generator seed")->default_val(0);
  make->add_option("--enc-levels", ds.enc_levels, "Encoder depth the geometry must suit")->default_val(ds.enc_levels);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitFormat;
  }

  try {
    if (*simulate) {
      if (!*mask_opt && !*rand_opt) throw UsageError("simulate needs --mask or --mask-random");
      sim.random_mask = static_cast<bool>(*rand_opt);
      return cmd_simulate(sim);
    }
    if (*train_cmd) return cmd_train(tr);
    if (*reconstruct) return cmd_reconstruct(rec);
    if (*eval) return cmd_eval(pred, ref);
    if (*grad) return cmd_gradcheck(gc_config, gc_samples);
    if (*make) return cmd_make_dataset(ds);
  } catch (const ShapeError& e) {
    std::fprintf(stderr, "geometry error: %s\n", e.what());
    return kExitGeometry;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitFormat;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return kExitFormat;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitFormat;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
