#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "herosnet/error.hpp"
#include "herosnet/recovery.hpp"
#include "herosnet/trainer.hpp"

namespace herosnet {

/// Thrown for malformed config text; `keys` lists unknown keys, if any.
class ConfigError : public FormatError {
 public:
  ConfigError(const std::string& what, std::vector<std::string> keys = {})
      : FormatError(what), keys_(std::move(keys)) {}
  const std::vector<std::string>& unknown_keys() const { return keys_; }

 private:
  std::vector<std::string> keys_;
};

/// Everything a flat key=value config file can set.
///
/// Keys are the TrainConfig and RecoveryConfig field names, plus:
///   preset     toy | micro | paper   applied before any other key
///   MO         0 -> mask_mode = fixed
///   HFIM       alias of hfim
///   RM         0 -> res_blocks = 0
///   DyRho      alias of dyn_rho
///   H, W       geometry for the gradient check
///   eval_every validation cadence in epochs
/// Lines starting with '#' and blank lines are ignored.
struct RunConfig {
  TrainConfig train;
  RecoveryConfig recovery = RecoveryConfig::toy();
  std::size_t height = 8;
  std::size_t width = 8;
  int eval_every = 1;

  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(std::istream& is);
RunConfig parse_config_string(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical key=value rendering; parse_config(format_config(c)) == c.
std::string format_config(const RunConfig& cfg);

}  // namespace herosnet
