#include "herosnet/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "herosnet/error.hpp"
#include "herosnet/ops.hpp"

namespace herosnet {

void RecoveryConfig::validate() const {
  if (K < 1) throw UsageError("K must be >= 1");
  if (N < 1) throw UsageError("N must be >= 1");
  if (C < 1) throw UsageError("C must be >= 1");
  if (enc_levels < 0) throw UsageError("enc_levels must be >= 0");
  if (res_blocks < 0) throw UsageError("res_blocks must be >= 0");
  if (!std::isfinite(theta)) throw UsageError("theta must be finite");
}

void RecoveryConfig::check_geometry(std::size_t height, std::size_t width) const {
  const std::size_t factor = std::size_t{1} << enc_levels;
  if (height % factor != 0 || width % factor != 0) {
    throw ShapeError("spatial extents " + std::to_string(height) + "x" + std::to_string(width) +
                     " are not divisible by 2^enc_levels = " + std::to_string(factor));
  }
}

Tensor Conv2d::operator()(const Tensor& x) const { return ops::conv2d(x, weight, bias, stride, padding); }

namespace {

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  Conv2d conv(int cin, int cout, int k, int stride = 1) {
    Conv2d c;
    const auto fan_in = static_cast<double>(cin * k * k);
    std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / fan_in));
    std::vector<double> w(static_cast<std::size_t>(cout * cin * k * k));
    for (auto& v : w) v = gauss(rng_);
    c.weight = Tensor::from({std::size_t(cout), std::size_t(cin), std::size_t(k), std::size_t(k)}, std::move(w), true);
    c.bias = Tensor::zeros({std::size_t(cout)}, true);
    c.stride = stride;
    c.padding = (k - 1) / 2;
    return c;
  }

  // Delta kernel: channel c of the output copies channel c of the input.
  static Conv2d identity(int channels, int k) {
    Conv2d c;
    const auto ch = static_cast<std::size_t>(channels), kk = static_cast<std::size_t>(k);
    std::vector<double> w(ch * ch * kk * kk, 0.0);
    const auto centre = (kk / 2) * kk + kk / 2;
    for (std::size_t i = 0; i < ch; ++i) w[(i * ch + i) * kk * kk + centre] = 1.0;
    c.weight = Tensor::from({ch, ch, kk, kk}, std::move(w), true);
    c.bias = Tensor::zeros({ch}, true);
    c.padding = (k - 1) / 2;
    return c;
  }

  ResidualBlock residual(int channels) {
    ResidualBlock b{conv(channels, channels, 3), conv(channels, channels, 3)};
    std::fill(b.second.weight.mutable_values().begin(), b.second.weight.mutable_values().end(), 0.0);
    return b;
  }

  SensingStack sensing(int channels) {
    SensingStack s;
    s.head = identity(channels, 3);
    for (int i = 0; i < RecoveryConfig::kSensingBlocks; ++i) s.blocks.push_back(residual(channels));
    s.tail = identity(channels, 3);
    return s;
  }

 private:
  std::mt19937_64 rng_;
};

template <class Fn>
void visit_conv(const std::string& prefix, const Conv2d& c, Fn&& fn) {
  fn(prefix + ".weight", c.weight);
  fn(prefix + ".bias", c.bias);
}

template <class Fn>
void visit_block(const std::string& prefix, const ResidualBlock& b, Fn&& fn) {
  visit_conv(prefix + ".first", b.first, fn);
  visit_conv(prefix + ".second", b.second, fn);
}

template <class Fn>
void visit_stack(const std::string& prefix, const SensingStack& s, Fn&& fn) {
  visit_conv(prefix + ".head", s.head, fn);
  for (std::size_t i = 0; i < s.blocks.size(); ++i) visit_block(prefix + ".block" + std::to_string(i), s.blocks[i], fn);
  visit_conv(prefix + ".tail", s.tail, fn);
}

template <class Fn>
void visit_all(const NetworkParams& p, Fn&& fn) {
  if (p.init.weight.defined()) visit_conv("init", p.init, fn);
  for (std::size_t k = 0; k < p.phases.size(); ++k) {
    const auto& ph = p.phases[k];
    const std::string pre = "phase" + std::to_string(k + 1);
    visit_stack(pre + ".h_phi", ph.h_phi, fn);
    visit_stack(pre + ".h_phi_t", ph.h_phi_t, fn);
    fn(pre + ".step.rho", ph.step.rho);
    visit_conv(pre + ".step.squeeze", ph.step.squeeze, fn);
    visit_conv(pre + ".step.excite", ph.step.excite, fn);
    visit_conv(pre + ".hfim.conv1", ph.conv1, fn);
    if (ph.conv2.weight.defined()) visit_conv(pre + ".hfim.conv2", ph.conv2, fn);
    if (ph.conv3.weight.defined()) visit_conv(pre + ".hfim.conv3", ph.conv3, fn);
    visit_conv(pre + ".hfim.conv4", ph.conv4, fn);
    if (ph.conv5.weight.defined()) visit_conv(pre + ".hfim.conv5", ph.conv5, fn);
    for (std::size_t i = 0; i < ph.enhance.down.size(); ++i) {
      visit_conv(pre + ".enhance.down" + std::to_string(i), ph.enhance.down[i], fn);
    }
    for (std::size_t i = 0; i < ph.enhance.bottleneck.size(); ++i) {
      visit_block(pre + ".enhance.res" + std::to_string(i), ph.enhance.bottleneck[i], fn);
    }
    for (std::size_t i = 0; i < ph.enhance.up.size(); ++i) {
      visit_conv(pre + ".enhance.up" + std::to_string(i), ph.enhance.up[i], fn);
    }
  }
}

}  // namespace

std::vector<NamedTensor> NetworkParams::named_parameters() const {
  std::vector<NamedTensor> out;
  visit_all(*this, [&](const std::string& name, const Tensor& t) { out.push_back({name, t}); });
  return out;
}

std::string parameter_group(const std::string& name) {
  const auto first = name.find('.');
  if (first == std::string::npos) return name;
  const auto second = name.find('.', first + 1);
  if (second == std::string::npos) return name.substr(0, first);
  return name.substr(0, second);
}

NetworkParams init_network(const RecoveryConfig& config, std::uint64_t seed) {
  config.validate();
  Initializer init(seed);
  NetworkParams p;
  p.config = config;
  const int C = config.C, N = config.N;
  if (config.hfim) p.init = init.conv(C, N, 3);
  for (int k = 1; k <= config.K; ++k) {
    PhaseParams ph;
    ph.h_phi = init.sensing(C);
    ph.h_phi_t = init.sensing(C);
    ph.step.rho = Tensor::full({1, std::size_t(C), 1, 1}, 1.0, true);
    ph.step.squeeze = init.conv(C, C, 1);
    ph.step.excite = init.conv(C, C, 1);
    ph.conv1 = init.conv(C, N, 3);
    if (config.hfim) {
      ph.conv2 = init.conv((k + 1) * N, N, 1);
      ph.conv3 = init.conv(N, N, 3);
      ph.conv5 = init.conv(C, N, 3);
    }
    ph.conv4 = init.conv(N, C, 3);
    std::fill(ph.conv4.weight.mutable_values().begin(), ph.conv4.weight.mutable_values().end(), 0.0);
    for (int l = 0; l < config.enc_levels; ++l) ph.enhance.down.push_back(init.conv(N, N, 3, 2));
    for (int b = 0; b < config.res_blocks; ++b) ph.enhance.bottleneck.push_back(init.residual(N));
    for (int l = 0; l < config.enc_levels; ++l) ph.enhance.up.push_back(init.conv(N, N, 3));
    p.phases.push_back(std::move(ph));
  }
  return p;
}

void randomize_parameters(NetworkParams& params, std::uint64_t seed, double bias_scale) {
  std::mt19937_64 rng(seed);
  for (auto& [name, t] : params.named_parameters()) {
    auto v = t.mutable_values();
    const auto leaf = name.substr(name.rfind('.') + 1);
    if (leaf == "weight") {
      const auto fan_in = static_cast<double>(t.dim(1) * t.dim(2) * t.dim(3));
      std::normal_distribution<double> gauss(0.0, std::sqrt(1.0 / fan_in));
      for (auto& e : v) e = gauss(rng);
    } else if (leaf == "rho") {
      std::uniform_real_distribution<double> uni(0.5, 1.5);
      for (auto& e : v) e = uni(rng);
    } else {
      std::normal_distribution<double> gauss(0.0, bias_scale);
      for (auto& e : v) e = gauss(rng);
    }
  }
}

namespace recovery {

Tensor residual_block(const Tensor& x, const ResidualBlock& block) {
  return ops::add(x, block.second(ops::relu(block.first(x))));
}

Tensor sensing_stack(const Tensor& x, const SensingStack& stack) {
  Tensor h = stack.head(x);
  for (const auto& b : stack.blocks) h = residual_block(h, b);
  return stack.tail(h);
}

Tensor h_phi(const Tensor& x, const Tensor& mask, const DispersionRule& rule, const SensingStack& stack) {
  return cassi::forward(sensing_stack(x, stack), mask, rule);
}

Tensor h_phi_t(const Tensor& e, const Tensor& mask, const DispersionRule& rule, const SensingStack& stack) {
  return sensing_stack(cassi::adjoint(e, mask, rule), stack);
}

Tensor step_attention(const Tensor& x_prev, const StepSizeParams& step) {
  return ops::sigmoid(step.excite(ops::relu(step.squeeze(ops::global_avg_pool(x_prev)))));
}

Tensor dynamic_step(const Tensor& x_prev, const StepSizeParams& step, double theta, bool dynamic) {
  if (!dynamic) return step.rho;
  return ops::add(step.rho, ops::scale(step_attention(x_prev, step), theta));
}

Tensor dgdm(const Tensor& x_prev, const Tensor& y, const Tensor& mask, const DispersionRule& rule,
            const PhaseParams& phase, const RecoveryConfig& config) {
  const Tensor residual = ops::sub(h_phi(x_prev, mask, rule, phase.h_phi), y);
  const Tensor grad = h_phi_t(residual, mask, rule, phase.h_phi_t);
  const Tensor step = dynamic_step(x_prev, phase.step, config.theta, config.dyn_rho);
  return ops::sub(x_prev, ops::mul(step, grad));
}

Tensor enhancement(const Tensor& f, const EnhancementParams& params) {
  if (params.down.size() != params.up.size()) throw UsageError("enhancement: encoder/decoder depth mismatch");
  const auto levels = params.down.size();
  const std::size_t factor = std::size_t{1} << levels;
  if (f.rank() != 4 || f.dim(2) % factor != 0 || f.dim(3) % factor != 0) {
    throw ShapeError("enhancement: input " + shape_to_string(f.shape()) + " not divisible by 2^" +
                     std::to_string(levels));
  }
  std::vector<Tensor> skips{f};
  Tensor cur = f;
  for (std::size_t l = 0; l < levels; ++l) {
    cur = ops::relu(params.down[l](cur));
    skips.push_back(cur);
  }
  for (const auto& b : params.bottleneck) cur = residual_block(cur, b);
  for (std::size_t l = levels; l-- > 0;) {
    cur = ops::add(params.up[l](ops::upsample_nearest2x(cur)), skips[l]);
    if (l > 0) cur = ops::relu(cur);
  }
  return cur;
}

HfimOutput hfim(const Tensor& r, const Tensor& x0, const std::vector<Tensor>& stack, const PhaseParams& phase,
                const RecoveryConfig& config) {
  const Tensor lifted = phase.conv1(r);
  if (!config.hfim) {
    const Tensor feat = enhancement(lifted, phase.enhance);
    return {ops::add(phase.conv4(feat), x0), Tensor()};
  }
  for (const auto& h : stack) {
    if (h.rank() != 4 || h.dim(1) != static_cast<std::size_t>(config.N)) {
      throw ShapeError("hfim: hidden state " + shape_to_string(h.shape()) + " does not have N=" +
                       std::to_string(config.N) + " channels");
    }
  }
  std::vector<Tensor> parts = stack;
  parts.push_back(lifted);
  const Tensor fused = phase.conv2(ops::concat_channels(parts));
  const Tensor feat = enhancement(fused, phase.enhance);
  Tensor x = ops::add(phase.conv4(feat), x0);
  const Tensor gate = ops::sigmoid(phase.conv5(x));
  Tensor h = ops::add(ops::mul(phase.conv3(feat), gate), feat);
  return {std::move(x), std::move(h)};
}

Tensor initial_estimate(const Tensor& y, const Tensor& mask, const DispersionRule& rule) {
  const Tensor split = cassi::init_split(y, rule);
  const Tensor total = ops::sum(mask);
  if (total.item() == 0.0) return split;
  // C * mean(M) bands overlap at a typical detector pixel.
  const double per_unit = static_cast<double>(rule.channels()) / static_cast<double>(mask.numel());
  return ops::mul(split, ops::reshape(ops::reciprocal(ops::scale(total, per_unit)), {1, 1, 1, 1}));
}

Reconstruction reconstruct(const Tensor& y, const Tensor& mask, const DispersionRule& rule,
                           const NetworkParams& params, const ReconstructOptions& options) {
  const auto& cfg = params.config;
  if (y.rank() != 4 || y.dim(1) != 1) throw ShapeError("reconstruct: measurement must be [B,1,H,W']");
  if (rule.channels() != static_cast<std::size_t>(cfg.C)) {
    throw ShapeError("reconstruct: dispersion has " + std::to_string(rule.channels()) + " bands but network C=" +
                     std::to_string(cfg.C));
  }
  if (mask.rank() != 4 || y.dim(3) != mask.dim(3) + rule.extra_width() || y.dim(2) != mask.dim(2)) {
    throw ShapeError("reconstruct: measurement " + shape_to_string(y.shape()) + " does not match mask " +
                     shape_to_string(mask.shape()) + " with W+C-1 layout");
  }
  if (!options.gradient_steps_only) cfg.check_geometry(mask.dim(2), mask.dim(3));

  Reconstruction out;
  out.x0 = initial_estimate(y, mask, rule);
  std::vector<Tensor> stack;  // newest first
  if (cfg.hfim && !options.gradient_steps_only) {
    stack.push_back(params.init(out.x0));
    out.hidden.push_back(stack.front());
  }
  Tensor x = out.x0;
  for (const auto& phase : params.phases) {
    const Tensor r = dgdm(x, y, mask, rule, phase, cfg);
    if (options.gradient_steps_only) {
      x = r;
    } else {
      auto step = hfim(r, out.x0, stack, phase, cfg);
      x = step.x;
      if (step.h.defined()) {
        stack.insert(stack.begin(), step.h);
        out.hidden.push_back(step.h);
      }
    }
    out.estimates.push_back(x);
  }
  return out;
}

HyperspectralCube reconstruct(const Measurement& y, const Mask& mask, const DispersionRule& rule,
                              const NetworkParams& params) {
  NoGradGuard guard;
  auto rec = reconstruct(y.to_tensor(), mask.to_tensor(), rule, params);
  auto cube = HyperspectralCube::from_tensor(rec.final_estimate());
  for (auto& v : cube.values) v = std::clamp(v, 0.0, 1.0);
  return cube;
}

}  // namespace recovery
}  // namespace herosnet
