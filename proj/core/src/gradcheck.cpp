#include "herosnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>

#include "herosnet/mask.hpp"
#include "herosnet/ops.hpp"
#include "herosnet/trainer.hpp"

namespace herosnet::gradcheck {

namespace {

struct Problem {
  NetworkParams net;
  MaskPair mask;
  Tensor gt;
  DispersionRule rule;
};

Tensor loss_with_mask(const Problem& p, const Tensor& mask) {
  const Tensor y = cassi::forward(p.gt, mask, p.rule);
  const auto rec = recovery::reconstruct(y, mask, p.rule, p.net);
  return training_loss(rec.estimates, p.gt, TrainConfig{}.beta_loss);
}

double loss_value(const Problem& p, const Tensor& mask) {
  NoGradGuard guard;
  return loss_with_mask(p, mask).item();
}

std::vector<std::size_t> pick(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (k == 0 || k >= n) return idx;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double norm_relative(const std::vector<double>& a, const std::vector<double>& n, double floor) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), floor});
}

}  // namespace

bool Report::passed() const {
  return std::all_of(groups.begin(), groups.end(), [](const GroupResult& g) { return g.passed; });
}

double Report::worst_error() const {
  double w = 0.0;
  for (const auto& g : groups) w = std::max(w, g.worst_error);
  return w;
}

Report run(const Options& options) {
  options.config.validate();
  options.config.check_geometry(options.height, options.width);
  const auto C = static_cast<std::size_t>(options.config.C);

  Problem p;
  p.net = init_network(options.config, options.seed);
  randomize_parameters(p.net, options.seed + 1);
  p.mask = init_latent(options.height, options.width, kDefaultMaskMean, kDefaultMaskSigma, options.seed + 2);
  p.rule = DispersionRule::unit(C);
  {
    std::mt19937_64 rng(options.seed + 3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(C * options.height * options.width);
    for (auto& x : v) x = u(rng);
    p.gt = Tensor::from({1, C, options.height, options.width}, std::move(v));
  }

  const Tensor loss = loss_with_mask(p, p.mask.binary_tensor());
  backward(loss);

  struct Target {
    std::string name;
    Tensor tensor;       // analytic gradient lives here
    Tensor perturbed;    // finite differences move this one
  };
  std::vector<Target> targets;
  for (const auto& [name, t] : p.net.named_parameters()) targets.push_back({name, t, t});
  // STE: the latent's gradient is compared with differences taken on the
  // binary mask itself, which enters the network as a plain leaf.
  Tensor binary_leaf = p.mask.binary().to_tensor(true);
  targets.push_back({"mask.latent", p.mask.latent(), binary_leaf});

  Report report;
  report.tolerance = options.tolerance;
  std::map<std::string, std::size_t> group_index;
  std::mt19937_64 rng(options.seed + 4);

  for (auto& target : targets) {
    const auto n = target.tensor.numel();
    std::vector<double> analytic(n, 0.0);
    if (target.tensor.has_grad()) {
      const auto g = target.tensor.grad();
      std::copy(g.begin(), g.end(), analytic.begin());
    }
    if (options.corrupt) options.corrupt(target.name, analytic);

    const auto coords = pick(n, options.samples_per_tensor, rng);
    std::vector<double> a, fd;
    auto values = target.perturbed.mutable_values();
    for (auto i : coords) {
      const double saved = values[i];
      values[i] = saved + options.step;
      const double up = target.name == "mask.latent" ? loss_value(p, binary_leaf) : loss_value(p, p.mask.binary_tensor());
      values[i] = saved - options.step;
      const double down =
          target.name == "mask.latent" ? loss_value(p, binary_leaf) : loss_value(p, p.mask.binary_tensor());
      values[i] = saved;
      a.push_back(analytic[i]);
      fd.push_back((up - down) / (2.0 * options.step));
    }

    const double err = norm_relative(a, fd, options.floor);
    const auto group = target.name == "mask.latent" ? target.name : parameter_group(target.name);
    auto [it, inserted] = group_index.try_emplace(group, report.groups.size());
    if (inserted) {
      GroupResult fresh;
      fresh.group = group;
      report.groups.push_back(fresh);
    }
    auto& g = report.groups[it->second];
    g.checked += coords.size();
    if (err > g.worst_error || g.worst_tensor.empty()) {
      g.worst_error = err;
      g.worst_tensor = target.name;
    }
    g.passed = g.worst_error <= options.tolerance;
  }
  return report;
}

std::string format_report(const Report& report) {
  std::string out;
  char buf[512];
  for (const auto& g : report.groups) {
    std::snprintf(buf, sizeof buf, "%-20s worst_rel=%.3e checked=%zu %s (%s)\n", g.group.c_str(), g.worst_error,
                  g.checked, g.passed ? "PASS" : "FAIL", g.worst_tensor.c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "gradcheck %s: %zu groups, worst_rel=%.3e, tolerance=%.1e\n",
                report.passed() ? "PASS" : "FAIL", report.groups.size(), report.worst_error(), report.tolerance);
  out += buf;
  return out;
}

}  // namespace herosnet::gradcheck
