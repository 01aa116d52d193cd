#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "herosnet/cassi.hpp"
#include "herosnet/tensor.hpp"

namespace herosnet {

struct RecoveryConfig {
  int K = 8;             // recovery phases
  int N = 32;            // feature channels
  int C = 28;            // spectral bands
  int enc_levels = 4;    // encoder / decoder depth of the enhancement module
  int res_blocks = 16;   // residual blocks at the enhancement bottleneck
  double theta = 0.5;    // weight of the content-adaptive step component
  bool hfim = true;      // false: plain encoder-decoder prior, no hidden-state stack
  bool dyn_rho = true;   // false: static step rho only

  /// Residual blocks inside each learned sensing stack.
  static constexpr int kSensingBlocks = 4;

  static RecoveryConfig paper() { return {}; }
  static RecoveryConfig toy() { return {3, 8, 8, 2, 2, 0.5, true, true}; }
  static RecoveryConfig micro() { return {2, 4, 2, 1, 1, 0.5, true, true}; }

  void validate() const;
  /// Throws ShapeError unless H and W are divisible by 2^enc_levels.
  void check_geometry(std::size_t height, std::size_t width) const;
  bool operator==(const RecoveryConfig&) const = default;
};

struct Conv2d {
  Tensor weight;  // [Cout, Cin, k, k]
  Tensor bias;    // [Cout]
  int stride = 1;
  int padding = 1;

  Tensor operator()(const Tensor& x) const;
};

struct ResidualBlock {
  Conv2d first, second;
};

/// Cube-domain learned stack: conv, residual blocks, conv (channel preserving).
struct SensingStack {
  Conv2d head;
  std::vector<ResidualBlock> blocks;
  Conv2d tail;
};

struct StepSizeParams {
  Tensor rho;  // [1, C, 1, 1] static component
  Conv2d squeeze, excite;
};

struct EnhancementParams {
  std::vector<Conv2d> down;  // stride-2, one per encoder level
  std::vector<ResidualBlock> bottleneck;
  std::vector<Conv2d> up;    // applied after nearest x2, up[l] restores level l
};

struct PhaseParams {
  SensingStack h_phi, h_phi_t;
  StepSizeParams step;
  Conv2d conv1;  // C -> N, lifts r^(k)
  Conv2d conv2;  // 1x1 dense fusion, (k+1)N -> N
  Conv2d conv3;  // N -> N
  Conv2d conv4;  // N -> C
  Conv2d conv5;  // C -> N
  EnhancementParams enhance;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// All recovery-subnet parameters. Phases never share weights.
struct NetworkParams {
  RecoveryConfig config;
  Conv2d init;  // C -> N, seeds h^(0)
  std::vector<PhaseParams> phases;

  /// Stable-order view used by the optimizer and checkpoints; tensors alias
  /// the network's storage.
  std::vector<NamedTensor> named_parameters() const;
};

/// "phase2.h_phi.block0.first.weight" -> "phase2.h_phi"
std::string parameter_group(const std::string& name);

/// Conv weights ~ N(0, 2/fan_in), biases 0, rho = 1. The sensing stacks start
/// as exact identities, and every residual block's second conv and every
/// Conv4 start at zero, so x^(k) = x^(0) before training.
NetworkParams init_network(const RecoveryConfig& config, std::uint64_t seed);

/// Redraws every weight and bias (including identity-initialised ones) from
/// a Gaussian so that all gradient paths are active.
void randomize_parameters(NetworkParams& params, std::uint64_t seed, double bias_scale = 0.1);

namespace recovery {

Tensor residual_block(const Tensor& x, const ResidualBlock& block);
Tensor sensing_stack(const Tensor& x, const SensingStack& stack);

/// Learned stack on the cube followed by the physical modulate + shift-sum.
Tensor h_phi(const Tensor& x, const Tensor& mask, const DispersionRule& rule, const SensingStack& stack);
/// Physical adjoint followed by the learned stack.
Tensor h_phi_t(const Tensor& e, const Tensor& mask, const DispersionRule& rule, const SensingStack& stack);

/// rho + theta * Sigmoid(Conv(ReLU(Conv(GAP(x_prev))))), shaped [B,C,1,1].
/// With `dynamic` false the result is rho itself ([1,C,1,1]).
Tensor dynamic_step(const Tensor& x_prev, const StepSizeParams& step, double theta, bool dynamic = true);
/// The attention term Lambda alone, [B,C,1,1] in (0,1).
Tensor step_attention(const Tensor& x_prev, const StepSizeParams& step);

/// r = x_prev - rho~ * H_Phi^T(H_Phi(x_prev) - y)
Tensor dgdm(const Tensor& x_prev, const Tensor& y, const Tensor& mask, const DispersionRule& rule,
            const PhaseParams& phase, const RecoveryConfig& config);

Tensor enhancement(const Tensor& f, const EnhancementParams& params);

struct HfimOutput {
  Tensor x;  // [B,C,H,W]
  Tensor h;  // [B,N,H,W]; undefined when the HFIM is switched off
};

/// `stack` is [h^(k-1), ..., h^(0)].
HfimOutput hfim(const Tensor& r, const Tensor& x0, const std::vector<Tensor>& stack, const PhaseParams& phase,
                const RecoveryConfig& config);

/// x^(0): the sliding-window split of y divided by C * mean(M), the average
/// number of bands summed into one detector pixel. With C = 1 and an all-ones
/// mask this is init_split(y) unchanged.
Tensor initial_estimate(const Tensor& y, const Tensor& mask, const DispersionRule& rule);

struct ReconstructOptions {
  /// Skip the HFIM and feed r^(k) straight into the next phase (unrolled
  /// gradient descent only).
  bool gradient_steps_only = false;
};

struct Reconstruction {
  Tensor x0;
  std::vector<Tensor> estimates;  // x^(1) .. x^(K), unclamped
  std::vector<Tensor> hidden;     // h^(0) .. h^(K) when the HFIM is on

  const Tensor& final_estimate() const { return estimates.back(); }
};

/// y: [B,1,H,W+span], mask: [1,1,H,W].
Reconstruction reconstruct(const Tensor& y, const Tensor& mask, const DispersionRule& rule,
                           const NetworkParams& params, const ReconstructOptions& options = {});

/// Evaluation path: no graph, output clamped to [0,1].
HyperspectralCube reconstruct(const Measurement& y, const Mask& mask, const DispersionRule& rule,
                              const NetworkParams& params);

}  // namespace recovery
}  // namespace herosnet
