#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "herosnet/recovery.hpp"

namespace herosnet::gradcheck {

struct Options {
  RecoveryConfig config = RecoveryConfig::micro();
  std::size_t height = 8;
  std::size_t width = 8;
  std::uint64_t seed = 0;
  double step = 1e-5;             // central-difference half width
  double tolerance = 1e-3;
  double floor = 1e-6;            // denominator floor for near-zero gradients
  std::size_t samples_per_tensor = 8;  // 0 checks every entry
  /// Test hook: called on each analytic gradient (by parameter name) before
  /// comparison, so a fixture can simulate a broken backward pass.
  std::function<void(const std::string& name, std::span<double> grad)> corrupt;
};

struct GroupResult {
  std::string group;
  double worst_error = 0.0;  // max over the group's tensors of ||a - n|| / max(||a||, ||n||, floor)
  std::string worst_tensor;
  std::size_t checked = 0;   // coordinates compared
  bool passed = true;
};

struct Report {
  double tolerance = 0.0;
  std::vector<GroupResult> groups;

  bool passed() const;
  double worst_error() const;
};

/// Randomised network at the requested geometry, training loss against a
/// seeded random cube through a seeded learned mask, autodiff gradients for
/// every parameter group (and "mask.latent", differenced with BinarySign
/// treated as the identity) against central finite differences.
Report run(const Options& options);

/// One line per group: "<group> worst_rel=<e> checked=<n> PASS|FAIL", then a
/// summary line.
std::string format_report(const Report& report);

}  // namespace herosnet::gradcheck
