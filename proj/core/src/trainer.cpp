#include "herosnet/trainer.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "herosnet/dataset.hpp"
#include "herosnet/error.hpp"
#include "herosnet/metrics.hpp"
#include "herosnet/ops.hpp"

namespace herosnet {

const char* const kMetricsHeader = "epoch,lr,train_loss,val_psnr,val_ssim";

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix(splitmix(splitmix(base) ^ a) ^ b);
}

enum Stream : std::uint64_t { kStreamSplit = 1, kStreamShuffle, kStreamNoise, kStreamMask, kStreamNet, kStreamValNoise, kStreamAugment };

Tensor stack_batch(const std::vector<HyperspectralCube>& cubes, const std::vector<std::size_t>& idx) {
  const auto& ref = cubes[idx.front()];
  std::vector<double> values;
  values.reserve(idx.size() * ref.values.size());
  for (auto i : idx) values.insert(values.end(), cubes[i].values.begin(), cubes[i].values.end());
  return Tensor::from({idx.size(), ref.channels, ref.height, ref.width}, std::move(values));
}

Tensor augmented_batch(const std::vector<HyperspectralCube>& cubes, const std::vector<std::size_t>& idx,
                       std::uint64_t seed, long long step) {
  std::mt19937_64 rng(derive_seed(seed, kStreamAugment, static_cast<std::uint64_t>(step)));
  std::vector<HyperspectralCube> picked;
  for (auto i : idx) {
    const auto& cube = cubes[i];
    const int kinds = cube.height == cube.width ? 8 : 4;
    picked.push_back(dataset::dihedral(cube, std::uniform_int_distribution<int>(0, kinds - 1)(rng)));
  }
  std::vector<std::size_t> all(picked.size());
  std::iota(all.begin(), all.end(), 0);
  return stack_batch(picked, all);
}

void clip_gradients(std::vector<Tensor>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return;
  const double factor = max_norm / norm;
  for (auto& p : params) {
    if (!p.has_grad()) continue;
    for (auto& g : p.mutable_grad()) g *= factor;
  }
}

std::string format_row(const EpochMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.6f,%.6f", m.epoch, m.lr, m.train_loss, m.val_psnr, m.val_ssim);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw UsageError("epochs must be >= 0");
  if (!(lr0 > 0.0)) throw UsageError("lr0 must be > 0");
  if (!(decay > 0.0)) throw UsageError("decay must be > 0");
  if (decay_every < 1) throw UsageError("decay_every must be >= 1");
  if (beta_loss < 0.0) throw UsageError("beta_loss must be >= 0");
  if (batch < 1) throw UsageError("batch must be >= 1");
  if (noise_sigma < 0.0) throw UsageError("noise_sigma must be >= 0");
  if (!(sigma_b > 0.0)) throw UsageError("sigma_b must be > 0");
  if (grad_clip < 0.0) throw UsageError("grad_clip must be >= 0");
  if (val_fraction < 0.0 || val_fraction >= 1.0) throw UsageError("val_fraction must be in [0,1)");
}

double lr_at(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw UsageError("lr_at: epoch must be >= 0");
  return cfg.lr0 * std::pow(cfg.decay, std::floor(static_cast<double>(epoch) / cfg.decay_every));
}

double lr_at(int epoch) { return lr_at(epoch, TrainConfig::paper()); }

Tensor training_loss(const Tensor& x_k, const Tensor& x_km1, const Tensor& x_km2, const Tensor& gt, double beta,
                     bool beta_applies_to_both) {
  if (x_k.shape() != gt.shape()) {
    throw ShapeError("loss: estimate " + shape_to_string(x_k.shape()) + " vs ground truth " +
                     shape_to_string(gt.shape()));
  }
  const double inv_batch = 1.0 / static_cast<double>(gt.dim(0));
  auto sq_err = [&](const Tensor& x) {
    if (x.shape() != gt.shape()) throw ShapeError("loss: intermediate estimate shape mismatch");
    return ops::sum_squares(ops::sub(x, gt));
  };
  Tensor total = sq_err(x_k);
  if (x_km1.defined()) total = ops::add(total, ops::scale(sq_err(x_km1), beta));
  if (x_km2.defined()) total = ops::add(total, ops::scale(sq_err(x_km2), beta_applies_to_both ? beta : 1.0));
  return ops::scale(total, inv_batch);
}

Tensor training_loss(const std::vector<Tensor>& estimates, const Tensor& gt, double beta, bool beta_applies_to_both) {
  if (estimates.empty()) throw UsageError("loss: no estimates");
  const auto n = estimates.size();
  return training_loss(estimates[n - 1], n >= 2 ? estimates[n - 2] : Tensor(), n >= 3 ? estimates[n - 3] : Tensor(),
                       gt, beta, beta_applies_to_both);
}

void adam_update(std::span<double> param, std::span<const double> grad, std::vector<double>& m,
                 std::vector<double>& v, long long step, double lr, const AdamState& hyper) {
  if (!grad.empty() && grad.size() != param.size()) {
    throw ShapeError("adam: gradient has " + std::to_string(grad.size()) + " entries for a parameter of " +
                     std::to_string(param.size()));
  }
  if (m.size() != param.size()) m.assign(param.size(), 0.0);
  if (v.size() != param.size()) v.assign(param.size(), 0.0);
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad.empty() ? 0.0 : grad[i];
    m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g;
    v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g * g;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + hyper.eps);
  }
}

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr) {
  if (state.m.size() != params.size()) {
    if (state.step != 0) throw ShapeError("adam: parameter list changed between steps");
    state.m.assign(params.size(), {});
    state.v.assign(params.size(), {});
  }
  ++state.step;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    std::span<const double> g;
    if (p.has_grad()) g = p.grad();
    adam_update(p.mutable_values(), g, state.m[i], state.v[i], state.step, lr, state);
  }
}

Mask TrainState::current_mask() const { return fixed_mask ? *fixed_mask : mask.binary(); }

std::vector<Tensor> TrainState::trainable() const {
  std::vector<Tensor> out;
  for (const auto& [name, t] : net.named_parameters()) out.push_back(t);
  if (!fixed_mask) out.push_back(mask.latent());
  return out;
}

TrainState init_train_state(std::size_t height, std::size_t width, const TrainConfig& tcfg,
                            const RecoveryConfig& rcfg) {
  tcfg.validate();
  rcfg.validate();
  rcfg.check_geometry(height, width);
  TrainState s;
  s.net = init_network(rcfg, derive_seed(tcfg.seed, kStreamNet));
  s.mask = init_latent(height, width, tcfg.mu_b, tcfg.sigma_b, derive_seed(tcfg.seed, kStreamMask));
  if (tcfg.mask_mode == MaskMode::fixed) {
    s.fixed_mask = tcfg.fixed_mask == FixedMask::ones ? Mask::ones(height, width) : s.mask.binary();
  }
  return s;
}

Checkpoint checkpoint_from_state(const TrainState& state) {
  Checkpoint ckpt = checkpoint_from_network(state.net);
  const auto& lat = state.mask.latent();
  ckpt.entries.push_back({"mask.latent", lat.shape(), {lat.values().begin(), lat.values().end()}});
  ckpt.entries.push_back({"mask.params", {2}, {state.mask.mu_b(), state.mask.sigma_b()}});
  if (state.fixed_mask) {
    ckpt.entries.push_back({"mask.fixed", {state.fixed_mask->height, state.fixed_mask->width},
                            state.fixed_mask->values});
  }
  ckpt.entries.push_back({"train.next_epoch", {1}, {static_cast<double>(state.next_epoch)}});
  const auto& opt = state.optimizer;
  ckpt.entries.push_back({"adam.step", {1}, {static_cast<double>(opt.step)}});
  for (std::size_t i = 0; i < opt.m.size(); ++i) {
    if (opt.m[i].empty()) continue;
    ckpt.entries.push_back({"adam.m." + std::to_string(i), {opt.m[i].size()}, opt.m[i]});
    ckpt.entries.push_back({"adam.v." + std::to_string(i), {opt.v[i].size()}, opt.v[i]});
  }
  return ckpt;
}

TrainState state_from_checkpoint(const Checkpoint& ckpt, const TrainConfig& tcfg) {
  TrainState s;
  s.net = network_from_checkpoint(ckpt);
  const auto* lat = ckpt.find("mask.latent");
  const auto* mp = ckpt.find("mask.params");
  const auto* epoch = ckpt.find("train.next_epoch");
  const auto* step = ckpt.find("adam.step");
  if (!lat || lat->shape.size() != 2 || !mp || mp->values.size() != 2 || !epoch || !step) {
    throw FormatError("checkpoint lacks training state (mask latent, epoch or optimizer step)");
  }
  s.mask = MaskPair(Tensor::from(lat->shape, lat->values, true), mp->values[0], mp->values[1]);
  if (const auto* fixed = ckpt.find("mask.fixed")) {
    s.fixed_mask = Mask(fixed->shape.at(0), fixed->shape.at(1), fixed->values);
  } else if (tcfg.mask_mode == MaskMode::fixed) {
    throw FormatError("checkpoint was trained with a learned mask but config requests mask_mode=fixed");
  }
  s.next_epoch = static_cast<int>(epoch->values[0]);
  s.optimizer.step = static_cast<long long>(step->values[0]);
  const auto n = s.trainable().size();
  s.optimizer.m.assign(n, {});
  s.optimizer.v.assign(n, {});
  for (std::size_t i = 0; i < n; ++i) {
    const auto* m = ckpt.find("adam.m." + std::to_string(i));
    const auto* v = ckpt.find("adam.v." + std::to_string(i));
    if (m && v) {
      s.optimizer.m[i] = m->values;
      s.optimizer.v[i] = v->values;
    }
  }
  return s;
}

DataSplit split_dataset(std::size_t count, double val_fraction, std::uint64_t seed) {
  DataSplit split;
  if (count == 0) return split;
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  if (count == 1) {
    split.train = order;
    split.val = order;
    return split;
  }
  std::mt19937_64 rng(derive_seed(seed, kStreamSplit));
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<std::size_t>(std::lround(val_fraction * static_cast<double>(count)));
  if (val_fraction > 0.0) n_val = std::clamp<std::size_t>(n_val, 1, count - 1);
  split.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(split.val.begin(), split.val.end());
  if (split.val.empty()) split.val = split.train;
  return split;
}

Evaluation evaluate(const std::vector<HyperspectralCube>& cubes, const std::vector<std::size_t>& indices,
                    const NetworkParams& net, const Mask& mask, const DispersionRule& rule) {
  Evaluation e;
  if (indices.empty()) return e;
  for (auto i : indices) {
    const auto y = cassi::forward(cubes[i], mask, rule);
    const auto x = recovery::reconstruct(y, mask, rule, net);
    e.psnr += metrics::psnr(x, cubes[i]);
    e.ssim += metrics::ssim(x, cubes[i]);
  }
  e.psnr /= static_cast<double>(indices.size());
  e.ssim /= static_cast<double>(indices.size());
  return e;
}

TrainResult train(const std::vector<HyperspectralCube>& dataset, const TrainConfig& tcfg,
                  const RecoveryConfig& rcfg, const TrainOptions& options, std::optional<TrainState> resume) {
  tcfg.validate();
  if (dataset.empty()) throw UsageError("train: empty dataset");
  const auto& ref = dataset.front();
  for (const auto& c : dataset) {
    if (c.height != ref.height || c.width != ref.width || c.channels != ref.channels) {
      throw ShapeError("train: dataset cubes do not share one geometry");
    }
  }
  if (ref.channels != static_cast<std::size_t>(rcfg.C)) {
    throw ShapeError("train: dataset has " + std::to_string(ref.channels) + " bands but C=" + std::to_string(rcfg.C));
  }
  rcfg.check_geometry(ref.height, ref.width);
  const auto rule = DispersionRule::unit(ref.channels);

  TrainResult result;
  result.state = resume ? std::move(*resume) : init_train_state(ref.height, ref.width, tcfg, rcfg);
  auto& state = result.state;
  if (!(state.net.config == rcfg)) throw UsageError("train: resumed network config differs from requested config");
  if (state.mask.height() != ref.height || state.mask.width() != ref.width) {
    throw ShapeError("train: resumed mask geometry differs from dataset");
  }

  const auto split = split_dataset(dataset.size(), tcfg.val_fraction, tcfg.seed);
  std::vector<Tensor> params = state.trainable();

  std::ofstream csv;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    const auto path = std::filesystem::path(options.out_dir) / "metrics.csv";
    const bool append = resume.has_value() && std::filesystem::exists(path);
    csv.open(path, append ? std::ios::app : std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot open " + path.string());
    if (!append) csv << kMetricsHeader << '\n';
  }

  for (int epoch = state.next_epoch; epoch < tcfg.epochs; ++epoch) {
    if (options.max_steps > 0 && result.steps >= options.max_steps) break;
    const double lr = lr_at(epoch, tcfg);
    auto order = split.train;
    std::mt19937_64 shuffle_rng(derive_seed(tcfg.seed, kStreamShuffle, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tcfg.batch)) {
      if (options.max_steps > 0 && result.steps >= options.max_steps) break;
      const auto stop = std::min(order.size(), start + static_cast<std::size_t>(tcfg.batch));
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(stop));
      const Tensor gt = tcfg.augment ? augmented_batch(dataset, idx, tcfg.seed, state.optimizer.step)
                                     : stack_batch(dataset, idx);
      const Tensor mask = state.fixed_mask ? state.fixed_mask->to_tensor() : state.mask.binary_tensor();
      Tensor y = cassi::forward(gt, mask, rule);
      if (tcfg.noise_sigma > 0.0) {
        std::mt19937_64 noise_rng(derive_seed(tcfg.seed, kStreamNoise, static_cast<std::uint64_t>(state.optimizer.step)));
        std::normal_distribution<double> gauss(0.0, tcfg.noise_sigma);
        std::vector<double> n(y.numel());
        for (auto& v : n) v = gauss(noise_rng);
        y = ops::add(y, Tensor::from(y.shape(), std::move(n)));
      }
      const auto rec = recovery::reconstruct(y, mask, rule, state.net);
      const Tensor loss = training_loss(rec.estimates, gt, tcfg.beta_loss, tcfg.beta_applies_to_both);
      backward(loss);
      if (tcfg.grad_clip > 0.0) clip_gradients(params, tcfg.grad_clip);
      adam_step(params, state.optimizer, lr);
      loss_sum += loss.item() * static_cast<double>(idx.size());
      seen += idx.size();
      ++result.steps;
    }
    state.next_epoch = epoch + 1;

    EpochMetrics m;
    m.epoch = epoch;
    m.lr = lr;
    m.train_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
    const bool last = epoch + 1 == tcfg.epochs || (options.max_steps > 0 && result.steps >= options.max_steps);
    if (last || options.eval_every <= 1 || (epoch + 1) % options.eval_every == 0) {
      const auto ev = evaluate(dataset, split.val, state.net, state.current_mask(), rule);
      m.val_psnr = ev.psnr;
      m.val_ssim = ev.ssim;
    } else {
      m.val_psnr = m.val_ssim = std::nan("");
    }
    result.log.push_back(m);
    if (options.on_epoch) options.on_epoch(m);

    if (!options.out_dir.empty()) {
      csv << format_row(m) << '\n' << std::flush;
      const auto dir = std::filesystem::path(options.out_dir);
      const auto tmp = dir / "checkpoint.hwt.tmp";
      save_checkpoint(tmp.string(), checkpoint_from_state(state));
      std::filesystem::rename(tmp, dir / "checkpoint.hwt");
      save_mask((dir / "mask.txt").string(), state.current_mask());
    }
  }
  return result;
}

std::vector<StudyRow> run_mask_study(const std::vector<HyperspectralCube>& dataset, const TrainConfig& tcfg,
                                     const RecoveryConfig& rcfg) {
  if (dataset.empty()) throw UsageError("mask study: empty dataset");
  const auto split = split_dataset(dataset.size(), tcfg.val_fraction, tcfg.seed);
  const auto rule = DispersionRule::unit(dataset.front().channels);

  struct Variant {
    const char* name;
    MaskMode mode;
    FixedMask fixed;
  };
  const Variant variants[] = {{"uniform", MaskMode::fixed, FixedMask::ones},
                              {"random", MaskMode::fixed, FixedMask::random},
                              {"learned", MaskMode::learned, FixedMask::random}};
  std::vector<StudyRow> rows;
  for (const auto& v : variants) {
    TrainConfig cfg = tcfg;
    cfg.mask_mode = v.mode;
    cfg.fixed_mask = v.fixed;
    TrainOptions opts;
    opts.eval_every = std::max(1, cfg.epochs);
    auto res = train(dataset, cfg, rcfg, opts);
    const auto ev = evaluate(dataset, split.val, res.state.net, res.state.current_mask(), rule);
    rows.push_back({v.name, ev.psnr, ev.ssim});
  }
  return rows;
}

}  // namespace herosnet
