// Acceptance suite. Prints one [PASS]/[FAIL] line per criterion and exits
// nonzero if any selected criterion fails.
//
//   acceptance            run all criteria
//   acceptance 1 3 12     run the listed criteria only

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "herosnet/baselines.hpp"
#include "herosnet/checkpoint.hpp"
#include "herosnet/dataset.hpp"
#include "herosnet/gradcheck.hpp"
#include "herosnet/io.hpp"
#include "herosnet/mask.hpp"
#include "herosnet/metrics.hpp"
#include "herosnet/recovery.hpp"
#include "herosnet/trainer.hpp"
#include "op_gradchecks.hpp"
#include "support.hpp"

using namespace herosnet;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

HyperspectralCube random_cube(std::size_t h, std::size_t w, std::size_t c, std::mt19937_64& rng) {
  return HyperspectralCube(h, w, c, testsupport::random_vector(h * w * c, rng, 0.0, 1.0));
}

Measurement random_measurement(std::size_t h, std::size_t w, std::size_t c, std::mt19937_64& rng) {
  return Measurement(h, w + c - 1, testsupport::random_vector(h * (w + c - 1), rng));
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("herosnet_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Outcome adjoint_identity() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> ext(1, 8), bands(1, 4);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t h = ext(rng), w = ext(rng), c = bands(rng);
    const auto rule = DispersionRule::unit(c);
    const auto mask = testsupport::random_binary_mask(h, w, rng);
    const auto x = random_cube(h, w, c, rng);
    const auto y = random_measurement(h, w, c, rng);
    const double lhs = testsupport::dot(cassi::forward(x, mask, rule).values, y.values);
    const double rhs = testsupport::dot(x.values, cassi::adjoint(y, mask, rule).values);
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  return {worst <= 1e-10, fmt("100 instances, worst relative gap %.2e", worst)};
}

Outcome dense_oracle() {
  std::mt19937_64 rng(102);
  std::uniform_int_distribution<int> ext(1, 16), bands(1, 8);
  double worst = 0.0;
  int instances = 0;
  while (instances < 200) {
    const std::size_t h = ext(rng), w = ext(rng), c = bands(rng);
    if (h * w * c > 1024) continue;
    const auto rule = DispersionRule::unit(c);
    const auto mask = testsupport::random_binary_mask(h, w, rng);
    const auto phi = cassi::dense_phi(mask, rule, h, w, c);
    const auto x = random_cube(h, w, c, rng);
    const auto y = random_measurement(h, w, c, rng);
    worst = std::max(worst, testsupport::max_abs_diff(cassi::forward(x, mask, rule).values, phi.multiply(x.values)));
    worst = std::max(worst, testsupport::max_abs_diff(cassi::adjoint(y, mask, rule).values,
                                                      phi.multiply_transposed(y.values)));
    ++instances;
  }
  return {worst <= 1e-12, fmt("%d instances with HWC <= 1024, worst abs diff %.2e", instances, worst)};
}

Outcome op_gradchecks() {
  const auto checks = testsupport::run_op_gradchecks(20, 103);
  double worst = 0.0;
  std::string worst_op;
  bool pass = !checks.empty();
  for (const auto& c : checks) {
    if (c.trials < 20) pass = false;
    if (c.worst > worst) {
      worst = c.worst;
      worst_op = c.op;
    }
  }
  pass = pass && worst <= 1e-4;
  return {pass, fmt("%zu ops x 20 trials, worst relative error %.2e (%s)", checks.size(), worst, worst_op.c_str())};
}

Outcome network_gradcheck() {
  gradcheck::Options opt;
  opt.seed = 104;
  opt.samples_per_tensor = 0;
  const auto report = gradcheck::run(opt);
  bool has_latent = false;
  for (const auto& g : report.groups) has_latent |= g.group == "mask.latent";
  return {report.passed() && has_latent && report.worst_error() <= 1e-3,
          fmt("%zu parameter groups, every coordinate, worst relative error %.2e", report.groups.size(), report.worst_error())};
}

Outcome straight_through() {
  std::mt19937_64 rng(105);
  const auto rule = DispersionRule::unit(4);
  bool identical = true;
  for (int trial = 0; trial < 20; ++trial) {
    auto pair = init_latent(6, 6, 0.0, 0.1, 500 + trial);
    const auto cube = testsupport::random_tensor({2, 4, 6, 6}, rng, 0.0, 1.0, false);
    const auto target = testsupport::random_tensor({2, 1, 6, 9}, rng, 0.0, 1.0, false);
    backward(ops::sum_squares(ops::sub(compress(cube, pair, rule), target)));
    auto leaf = pair.binary().to_tensor(true);
    backward(ops::sum_squares(ops::sub(cassi::forward(cube, leaf, rule), target)));
    const auto gl = pair.latent().grad(), gm = leaf.grad();
    if (gl.size() != gm.size()) identical = false;
    for (std::size_t i = 0; identical && i < gl.size(); ++i) identical = gl[i] == gm[i];
  }

  // Two cubes: one trains, one validates, so every epoch is one optimizer step.
  dataset::SyntheticSpec spec;
  spec.height = spec.width = 8;
  spec.channels = 2;
  const auto cubes = dataset::synthesize_many(spec, 2, 105);
  TrainConfig tc;
  tc.batch = 1;
  tc.lr0 = 1e-2;
  tc.seed = 105;
  TrainOptions opts;
  opts.eval_every = 1000;
  auto state = init_train_state(8, 8, tc, RecoveryConfig::micro());
  const std::vector<double> latent0(state.mask.latent().values().begin(), state.mask.latent().values().end());
  bool binary = true;
  const int steps = 30;
  for (int s = 0; s < steps; ++s) {
    tc.epochs = s + 1;
    auto res = train(cubes, tc, RecoveryConfig::micro(), opts, std::move(state));
    state = std::move(res.state);
    const auto t = state.mask.binary_tensor();
    for (double v : t.values()) binary = binary && (v == 0.0 || v == 1.0);
    binary = binary && state.current_mask().is_binary();
  }
  const bool moved = testsupport::max_abs_diff(state.mask.latent().values(), latent0) > 0.0;
  return {identical && binary && moved,
          fmt("20 gradient trials %s; mask binary after each of %d steps: %s; latent updated: %s",
              identical ? "bit-identical" : "DIFFER", steps, binary ? "yes" : "no", moved ? "yes" : "no")};
}

Outcome ista_reduction() {
  double worst = 0.0;
  int runs = 0;
  for (int K : {1, 2, 3, 5}) {
    for (int scene = 0; scene < 3; ++scene) {
      auto cfg = RecoveryConfig::toy();
      cfg.K = K;
      cfg.dyn_rho = false;
      auto net = init_network(cfg, 106 + K);
      const double rho = 0.25 + 0.05 * scene;
      for (auto& ph : net.phases)
        for (auto& v : ph.step.rho.mutable_values()) v = rho;

      std::mt19937_64 rng(1060 + 10 * K + scene);
      const std::size_t h = 4, w = 4, c = 8;
      const auto rule = DispersionRule::unit(c);
      const auto mask = testsupport::random_binary_mask(h, w, rng);
      const auto cube = testsupport::random_tensor({1, c, h, w}, rng, 0.0, 1.0, false);
      const auto meas = cassi::forward(cube, mask.to_tensor(), rule);
      recovery::ReconstructOptions opts;
      opts.gradient_steps_only = true;
      const auto rec = recovery::reconstruct(meas, mask.to_tensor(), rule, net, opts);

      const auto phi = cassi::dense_phi(mask, rule, h, w, c);
      const std::vector<double> x0(rec.x0.values().begin(), rec.x0.values().end());
      const std::vector<double> y(meas.values().begin(), meas.values().end());
      const auto expected = testsupport::dense_gradient_steps(phi, x0, y, rho, K);
      worst = std::max(worst, testsupport::max_abs_diff(rec.final_estimate().values(), expected));
      ++runs;
    }
  }
  return {worst <= 1e-10, fmt("%d runs with K in {1,2,3,5}, worst abs diff %.2e", runs, worst)};
}

double dense_largest_eigenvalue(const Mask& mask, const DispersionRule& rule, std::size_t h, std::size_t w,
                                std::size_t c) {
  const auto phi = cassi::dense_phi(mask, rule, h, w, c);
  Eigen::MatrixXd A(phi.rows, phi.cols);
  for (std::size_t r = 0; r < phi.rows; ++r)
    for (std::size_t k = 0; k < phi.cols; ++k) A(Eigen::Index(r), Eigen::Index(k)) = phi.at(r, k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A * A.transpose(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

Outcome ista_monotone() {
  std::mt19937_64 rng(107);
  std::uniform_int_distribution<int> ext(2, 8), bands(1, 4);
  std::uniform_real_distribution<double> lam(0.0, 0.05);
  double worst_norm = 0.0, worst_rise = 0.0;
  int instances = 0;
  bool safe = true;
  while (instances < 50) {
    const std::size_t h = ext(rng), w = ext(rng), c = bands(rng);
    const auto rule = DispersionRule::unit(c);
    const auto mask = testsupport::random_binary_mask(h, w, rng);
    const auto norm = baselines::power_iteration_norm(mask, rule);
    if (norm.zero_operator) continue;
    const double ref = dense_largest_eigenvalue(mask, rule, h, w, c);
    worst_norm = std::max(worst_norm, std::abs(norm.value - ref) / ref);

    const auto y = cassi::forward(random_cube(h, w, c, rng), mask, rule);
    baselines::IstaConfig cfg;
    cfg.iterations = 60;
    cfg.rho = 1.0 / norm.value;
    cfg.lambda = instances % 2 ? lam(rng) : 0.0;
    cfg.prox = instances % 3 == 0 ? baselines::ProxKind::soft_threshold_diff
                                  : baselines::ProxKind::soft_threshold_identity;
    const auto res = baselines::ista_reconstruct(y, mask, rule, cfg);
    safe = safe && !res.unsafe_step;
    for (std::size_t k = 1; k < res.objective.size(); ++k)
      worst_rise = std::max(worst_rise, res.objective[k] - res.objective[k - 1]);
    ++instances;
  }
  return {safe && worst_norm <= 1e-6 && worst_rise <= 1e-9,
          fmt("50 instances, power vs eigensolve rel %.2e, largest objective rise %.2e", worst_norm, worst_rise)};
}

Outcome overfit() {
  dataset::SyntheticSpec spec;  // 32x32x8
  const auto cubes = dataset::synthesize_many(spec, 1, 3);
  TrainConfig tc;
  tc.epochs = 3000;
  tc.batch = 1;
  tc.lr0 = 1e-3;
  tc.decay_every = 100;
  tc.mask_mode = MaskMode::fixed;
  tc.fixed_mask = FixedMask::random;
  TrainOptions opts;
  opts.eval_every = 3000;
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = train(cubes, tc, RecoveryConfig::toy(), opts);
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  const double psnr = evaluate(cubes, {0}, res.state.net, res.state.current_mask(), DispersionRule::unit(8)).psnr;
  return {psnr >= 40.0 && res.steps <= 3000 && minutes <= 15.0,
          fmt("%lld steps, PSNR %.2f dB, %.1f min", res.steps, psnr, minutes)};
}

// Desk-scale experiments share this setup: eight 16x16x8 cubes, toy network,
// six training cubes with random dihedral augmentation, two held out.
TrainConfig experiment_config(std::uint64_t seed) {
  TrainConfig tc;
  tc.epochs = 400;
  tc.batch = 1;
  tc.lr0 = 2e-3;
  tc.decay_every = 100;
  tc.seed = seed;
  tc.augment = true;
  return tc;
}

std::vector<HyperspectralCube> experiment_cubes(std::uint64_t seed) {
  dataset::SyntheticSpec spec;
  spec.height = spec.width = 16;
  return dataset::synthesize_many(spec, 8, seed);
}

Outcome mask_study() {
  const auto rows = run_mask_study(experiment_cubes(0), experiment_config(0), RecoveryConfig::toy());
  const double uniform = rows[0].psnr, random = rows[1].psnr, learned = rows[2].psnr;
  std::string detail;
  for (const auto& r : rows) detail += fmt("%s %.2f dB / %.3f, ", r.name.c_str(), r.psnr, r.ssim);
  detail += fmt("learned - random = %.2f dB", learned - random);
  return {learned - random >= 0.3 && uniform < random && uniform < learned, detail};
}

Outcome ablation() {
  double full = 0.0, no_hfim = 0.0, no_dyn = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto cubes = experiment_cubes(seed);
    const auto tc = experiment_config(seed);
    const auto split = split_dataset(cubes.size(), tc.val_fraction, tc.seed);
    TrainOptions opts;
    opts.eval_every = tc.epochs;
    double psnr[3];
    for (int v = 0; v < 3; ++v) {
      auto rc = RecoveryConfig::toy();
      if (v == 1) rc.hfim = false;
      if (v == 2) rc.dyn_rho = false;
      const auto res = train(cubes, tc, rc, opts);
      psnr[v] = evaluate(cubes, split.val, res.state.net, res.state.current_mask(), DispersionRule::unit(8)).psnr;
    }
    full += psnr[0] / 3.0;
    no_hfim += psnr[1] / 3.0;
    no_dyn += psnr[2] / 3.0;
    per_seed += fmt("; seed %llu: %.2f/%.2f/%.2f", static_cast<unsigned long long>(seed), psnr[0], psnr[1], psnr[2]);
  }
  return {full > no_hfim && full > no_dyn,
          fmt("mean PSNR full %.2f, HFIM off %.2f, DyRho off %.2f", full, no_hfim, no_dyn) + per_seed};
}

Outcome schedule() {
  int mismatches = 0;
  for (int e = 0; e <= 200; ++e)
    if (lr_at(e) != 1e-4 * std::pow(0.9, e / 10)) ++mismatches;
  return {mismatches == 0, fmt("epochs 0..200, %d mismatches", mismatches)};
}

Outcome metric_fixtures() {
  std::mt19937_64 rng(112);
  const auto x = random_cube(12, 12, 3, rng);
  HyperspectralCube offset = x;
  for (auto& v : offset.values) v += 0.5;
  const double s = metrics::ssim(x, x), p = metrics::psnr(offset, x), sentinel = metrics::psnr(x, x);
  return {s == 1.0 && std::abs(p - 6.0206) <= 1e-4 && sentinel == 99.0,
          fmt("ssim(x,x)=%.17g, offset psnr=%.6f, identical psnr=%.1f", s, p, sentinel)};
}

Outcome serialization() {
  const auto dir = scratch("serial");
  std::mt19937_64 rng(113);
  auto identical = [&](const char* a, const char* b) { return slurp(dir / a) == slurp(dir / b); };
  auto path = [&](const char* name) { return (dir / name).string(); };

  const auto cube = random_cube(6, 5, 3, rng);
  io::save_cube(path("a.hsc"), cube);
  io::save_cube(path("b.hsc"), io::load_cube(path("a.hsc")));
  const auto mask = testsupport::random_binary_mask(6, 5, rng);
  io::save_measurement(path("a.msr"), cassi::forward(cube, mask, DispersionRule::unit(3)));
  io::save_measurement(path("b.msr"), io::load_measurement(path("a.msr")));
  save_mask(path("a.txt"), mask);
  save_mask(path("b.txt"), load_mask(path("a.txt")));
  auto net = init_network(RecoveryConfig::micro(), 113);
  randomize_parameters(net, 114);
  save_checkpoint(path("a.hwt"), checkpoint_from_network(net));
  save_checkpoint(path("b.hwt"), load_checkpoint(path("a.hwt")));
  const bool same = identical("a.hsc", "b.hsc") && identical("a.msr", "b.msr") && identical("a.txt", "b.txt") &&
                    identical("a.hwt", "b.hwt");

  dataset::SyntheticSpec spec;
  spec.height = spec.width = 8;
  spec.channels = 2;
  const auto cubes = dataset::synthesize_many(spec, 4, 113);
  TrainConfig tc;
  tc.epochs = 3;
  tc.batch = 2;
  tc.lr0 = 1e-3;
  tc.seed = 113;
  std::string csv[2], weights[2];
  for (int run = 0; run < 2; ++run) {
    TrainOptions opts;
    opts.out_dir = (dir / ("run" + std::to_string(run))).string();
    train(cubes, tc, RecoveryConfig::micro(), opts);
    csv[run] = slurp(fs::path(opts.out_dir) / "metrics.csv");
    weights[run] = slurp(fs::path(opts.out_dir) / "checkpoint.hwt");
  }
  const bool runs_match = !csv[0].empty() && csv[0] == csv[1] && weights[0] == weights[1];
  fs::remove_all(dir);
  return {same && runs_match, fmt("file round-trips %s; seeded runs: metrics.csv and checkpoint %s",
                                  same ? "byte-identical" : "DIFFER", runs_match ? "identical" : "DIFFER")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "adjoint identity", adjoint_identity},
      {2, "dense oracle equivalence", dense_oracle},
      {3, "per-op gradient checks", op_gradchecks},
      {4, "whole-network gradient check", network_gradcheck},
      {5, "straight-through exactness", straight_through},
      {6, "ISTA reduction", ista_reduction},
      {7, "classical ISTA monotonicity", ista_monotone},
      {8, "overfit one cube", overfit},
      {9, "mask study direction", mask_study},
      {10, "ablation direction", ablation},
      {11, "schedule exactness", schedule},
      {12, "metric fixtures", metric_fixtures},
      {13, "serialization", serialization},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
