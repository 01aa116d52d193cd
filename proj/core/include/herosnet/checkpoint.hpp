#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "herosnet/recovery.hpp"

namespace herosnet {

/// Weight container ("HWT1").
///
/// Layout, all little-endian:
///   "HWT1"
///   i32 K, N, C, enc_levels, res_blocks
///   f64 theta
///   u32 flags            bit 0: HFIM on, bit 1: dynamic step on
///   u32 entry count
///   entries: u32 name length, name bytes, u32 rank, u32 extents[rank],
///            f64 values[product of extents]
///
/// Besides network weights, a training checkpoint stores the mask latent and
/// optimizer state as additional named entries.
struct Checkpoint {
  struct Entry {
    std::string name;
    Shape shape;
    std::vector<double> values;
  };

  RecoveryConfig config;
  std::vector<Entry> entries;

  const Entry* find(const std::string& name) const;
};

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint checkpoint_from_network(const NetworkParams& params);

/// Builds a network for ckpt.config and copies every parameter from the
/// entries. Throws FormatError when a parameter is missing or misshapen.
NetworkParams network_from_checkpoint(const Checkpoint& ckpt);

}  // namespace herosnet
