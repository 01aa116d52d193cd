#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "herosnet/cassi.hpp"
#include "herosnet/checkpoint.hpp"
#include "herosnet/mask.hpp"
#include "herosnet/recovery.hpp"

namespace herosnet {

enum class MaskMode { learned, fixed };
enum class FixedMask {
  random,  // binarized initial latent, i.e. Bernoulli(0.5) at mu_b = 0
  ones,    // uniform, fully open aperture
};

struct TrainConfig {
  int epochs = 100;
  double lr0 = 1e-4;
  double decay = 0.9;        // multiplicative factor applied every `decay_every` epochs
  int decay_every = 10;
  double beta_loss = 0.5;
  bool beta_applies_to_both = true;  // false: beta weights only the x^(K-1) term
  int batch = 4;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  MaskMode mask_mode = MaskMode::learned;
  FixedMask fixed_mask = FixedMask::random;
  double mu_b = kDefaultMaskMean;
  double sigma_b = kDefaultMaskSigma;
  double grad_clip = 0.0;     // global-norm clip, 0 disables
  double val_fraction = 0.2;
  bool augment = false;       // random dihedral transform of each training cube per step

  static TrainConfig paper() { return {}; }
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// lr0 * decay^floor(epoch / decay_every). Throws UsageError for epoch < 0.
double lr_at(int epoch, const TrainConfig& cfg);
double lr_at(int epoch);

/// Sum of squared errors per sample, averaged over the batch:
///   ||x_K - gt||^2 + beta * (||x_{K-1} - gt||^2 + ||x_{K-2} - gt||^2)
/// Undefined intermediate tensors (K < 3) drop their terms.
Tensor training_loss(const Tensor& x_k, const Tensor& x_km1, const Tensor& x_km2, const Tensor& gt, double beta,
                     bool beta_applies_to_both = true);
/// Same, taking the last three of x^(1)..x^(K).
Tensor training_loss(const std::vector<Tensor>& estimates, const Tensor& gt, double beta,
                     bool beta_applies_to_both = true);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long step = 0;
  std::vector<std::vector<double>> m, v;
};

/// One bias-corrected Adam update of `param` using `grad`. Moments are
/// sized on first use.
void adam_update(std::span<double> param, std::span<const double> grad, std::vector<double>& m,
                 std::vector<double>& v, long long step, double lr, const AdamState& hyper);

/// Advances state.step and updates every tensor from its gradient slot
/// (tensors without a gradient are treated as having zero gradient).
void adam_step(std::vector<Tensor>& params, AdamState& state, double lr);

struct EpochMetrics {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_psnr = 0.0;
  double val_ssim = 0.0;
  bool operator==(const EpochMetrics&) const = default;
};

struct TrainState {
  NetworkParams net;
  MaskPair mask;
  std::optional<Mask> fixed_mask;  // set when the mask is not optimised
  AdamState optimizer;
  int next_epoch = 0;

  /// The mask the sensor applies at this point of training.
  Mask current_mask() const;
  /// Network parameters plus, when learned, the mask latent.
  std::vector<Tensor> trainable() const;
};

TrainState init_train_state(std::size_t height, std::size_t width, const TrainConfig& tcfg,
                            const RecoveryConfig& rcfg);

Checkpoint checkpoint_from_state(const TrainState& state);
TrainState state_from_checkpoint(const Checkpoint& ckpt, const TrainConfig& tcfg);

struct TrainOptions {
  /// When set, writes checkpoint.hwt, mask.txt and appends metrics.csv here.
  std::string out_dir;
  /// Stop after this many optimizer steps (0 = run all epochs).
  long long max_steps = 0;
  std::function<void(const EpochMetrics&)> on_epoch;
  /// Evaluate validation metrics every n epochs (and always on the last).
  int eval_every = 1;
};

struct DataSplit {
  std::vector<std::size_t> train, val;
};

/// Seeded shuffle, round(val_fraction * n) validation cubes (at least one
/// when n >= 2). A single-cube dataset validates on its training cube.
DataSplit split_dataset(std::size_t count, double val_fraction, std::uint64_t seed);

struct TrainResult {
  TrainState state;
  std::vector<EpochMetrics> log;
  long long steps = 0;
};

/// Joint optimisation of the mask latent (in learned mode) and all network
/// weights. Continues from `resume` when provided.
TrainResult train(const std::vector<HyperspectralCube>& dataset, const TrainConfig& tcfg,
                  const RecoveryConfig& rcfg, const TrainOptions& options = {},
                  std::optional<TrainState> resume = std::nullopt);

struct Evaluation {
  double psnr = 0.0;
  double ssim = 0.0;
};

Evaluation evaluate(const std::vector<HyperspectralCube>& cubes, const std::vector<std::size_t>& indices,
                    const NetworkParams& net, const Mask& mask, const DispersionRule& rule);

struct StudyRow {
  std::string name;
  double psnr = 0.0;
  double ssim = 0.0;
};

/// Trains under the uniform, random Bernoulli(0.5) and learned masks and
/// reports held-out PSNR/SSIM for each, in that order.
std::vector<StudyRow> run_mask_study(const std::vector<HyperspectralCube>& dataset, const TrainConfig& tcfg,
                                     const RecoveryConfig& rcfg);

extern const char* const kMetricsHeader;

}  // namespace herosnet
