#include "herosnet/checkpoint.hpp"

#include <algorithm>
#include <fstream>

#include "binary_io.hpp"

namespace herosnet {

namespace {
constexpr char kMagic[5] = "HWT1";
constexpr std::uint32_t kFlagHfim = 1u << 0;
constexpr std::uint32_t kFlagDynRho = 1u << 1;
constexpr std::uint32_t kMaxNameLength = 4096;
constexpr std::uint32_t kMaxRank = 8;
}  // namespace

const Checkpoint::Entry* Checkpoint::find(const std::string& name) const {
  auto it = std::find_if(entries.begin(), entries.end(), [&](const Entry& e) { return e.name == name; });
  return it == entries.end() ? nullptr : &*it;
}

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  using namespace detail;
  os.write(kMagic, 4);
  const auto& c = ckpt.config;
  put_i32(os, c.K);
  put_i32(os, c.N);
  put_i32(os, c.C);
  put_i32(os, c.enc_levels);
  put_i32(os, c.res_blocks);
  put_f64(os, c.theta);
  put_u32(os, (c.hfim ? kFlagHfim : 0u) | (c.dyn_rho ? kFlagDynRho : 0u));
  put_u32(os, static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& e : ckpt.entries) {
    if (e.values.size() != shape_numel(e.shape)) throw UsageError("checkpoint entry " + e.name + " is inconsistent");
    put_u32(os, static_cast<std::uint32_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put_u32(os, static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) put_u32(os, static_cast<std::uint32_t>(d));
    for (double v : e.values) put_f64(os, v);
  }
}

Checkpoint read_checkpoint(std::istream& is) {
  using namespace detail;
  expect_magic(is, kMagic, "checkpoint");
  Checkpoint ckpt;
  auto& c = ckpt.config;
  c.K = get_i32(is, "K");
  c.N = get_i32(is, "N");
  c.C = get_i32(is, "C");
  c.enc_levels = get_i32(is, "enc_levels");
  c.res_blocks = get_i32(is, "res_blocks");
  c.theta = get_f64(is, "theta");
  const auto flags = get_u32(is, "flags");
  c.hfim = (flags & kFlagHfim) != 0;
  c.dyn_rho = (flags & kFlagDynRho) != 0;
  try {
    c.validate();
  } catch (const UsageError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }
  const auto count = get_u32(is, "entry count");
  for (std::uint32_t i = 0; i < count; ++i) {
    Checkpoint::Entry e;
    const auto len = get_u32(is, "name length");
    if (len > kMaxNameLength) throw FormatError("checkpoint: entry name too long");
    e.name.resize(len);
    if (!is.read(e.name.data(), len)) throw FormatError("checkpoint: truncated entry name");
    const auto rank = get_u32(is, "rank");
    if (rank == 0 || rank > kMaxRank) throw FormatError("checkpoint: bad rank for " + e.name);
    for (std::uint32_t d = 0; d < rank; ++d) {
      const auto extent = get_u32(is, "extent");
      if (extent == 0) throw FormatError("checkpoint: zero extent in " + e.name);
      e.shape.push_back(extent);
    }
    e.values.resize(shape_numel(e.shape));
    for (auto& v : e.values) v = get_f64(is, "value");
    ckpt.entries.push_back(std::move(e));
  }
  expect_eof(is, "checkpoint");
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_checkpoint(os, ckpt);
  if (!os) throw std::runtime_error("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint " + path);
  return read_checkpoint(is);
}

Checkpoint checkpoint_from_network(const NetworkParams& params) {
  Checkpoint ckpt;
  ckpt.config = params.config;
  for (const auto& [name, t] : params.named_parameters()) {
    ckpt.entries.push_back({name, t.shape(), std::vector<double>(t.values().begin(), t.values().end())});
  }
  return ckpt;
}

NetworkParams network_from_checkpoint(const Checkpoint& ckpt) {
  NetworkParams params = init_network(ckpt.config, 0);
  for (auto& [name, t] : params.named_parameters()) {
    const auto* e = ckpt.find(name);
    if (!e) throw FormatError("checkpoint is missing parameter " + name);
    if (e->shape != t.shape()) {
      throw FormatError("checkpoint parameter " + name + " has shape " + shape_to_string(e->shape) + ", expected " +
                        shape_to_string(t.shape()));
    }
    std::copy(e->values.begin(), e->values.end(), t.mutable_values().begin());
  }
  return params;
}

}  // namespace herosnet
