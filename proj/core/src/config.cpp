#include "herosnet/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace herosnet {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  if constexpr (std::is_floating_point_v<T>) {
    std::size_t used = 0;
    try {
      out = static_cast<T>(std::stod(value, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size()) throw ConfigError("config: " + key + " expects a number, got '" + value + "'");
  } else {
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) throw ConfigError("config: " + key + " expects an integer, got '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  throw ConfigError("config: " + key + " expects 0/1/true/false, got '" + value + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto num = [&](const char* key, auto getter) {
      t[key] = [getter](RunConfig& c, const std::string& k, const std::string& v) {
        auto& field = getter(c);
        field = parse_number<std::remove_reference_t<decltype(field)>>(k, v);
      };
    };
    auto flag = [&](const char* key, auto getter) {
      t[key] = [getter](RunConfig& c, const std::string& k, const std::string& v) { getter(c) = parse_bool(k, v); };
    };
    num("epochs", [](RunConfig& c) -> int& { return c.train.epochs; });
    num("lr0", [](RunConfig& c) -> double& { return c.train.lr0; });
    num("decay", [](RunConfig& c) -> double& { return c.train.decay; });
    num("decay_every", [](RunConfig& c) -> int& { return c.train.decay_every; });
    num("beta_loss", [](RunConfig& c) -> double& { return c.train.beta_loss; });
    flag("beta_applies_to_both", [](RunConfig& c) -> bool& { return c.train.beta_applies_to_both; });
    num("batch", [](RunConfig& c) -> int& { return c.train.batch; });
    num("seed", [](RunConfig& c) -> std::uint64_t& { return c.train.seed; });
    num("noise_sigma", [](RunConfig& c) -> double& { return c.train.noise_sigma; });
    num("mu_b", [](RunConfig& c) -> double& { return c.train.mu_b; });
    num("sigma_b", [](RunConfig& c) -> double& { return c.train.sigma_b; });
    num("grad_clip", [](RunConfig& c) -> double& { return c.train.grad_clip; });
    num("val_fraction", [](RunConfig& c) -> double& { return c.train.val_fraction; });
    flag("augment", [](RunConfig& c) -> bool& { return c.train.augment; });
    t["mask_mode"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      if (v == "learned") c.train.mask_mode = MaskMode::learned;
      else if (v == "fixed") c.train.mask_mode = MaskMode::fixed;
      else throw ConfigError("config: " + k + " must be learned or fixed, got '" + v + "'");
    };
    t["fixed_mask"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      if (v == "random") c.train.fixed_mask = FixedMask::random;
      else if (v == "ones") c.train.fixed_mask = FixedMask::ones;
      else throw ConfigError("config: " + k + " must be random or ones, got '" + v + "'");
    };
    num("K", [](RunConfig& c) -> int& { return c.recovery.K; });
    num("N", [](RunConfig& c) -> int& { return c.recovery.N; });
    num("C", [](RunConfig& c) -> int& { return c.recovery.C; });
    num("enc_levels", [](RunConfig& c) -> int& { return c.recovery.enc_levels; });
    num("res_blocks", [](RunConfig& c) -> int& { return c.recovery.res_blocks; });
    num("theta", [](RunConfig& c) -> double& { return c.recovery.theta; });
    flag("hfim", [](RunConfig& c) -> bool& { return c.recovery.hfim; });
    flag("HFIM", [](RunConfig& c) -> bool& { return c.recovery.hfim; });
    flag("dyn_rho", [](RunConfig& c) -> bool& { return c.recovery.dyn_rho; });
    flag("DyRho", [](RunConfig& c) -> bool& { return c.recovery.dyn_rho; });
    t["MO"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.mask_mode = parse_bool(k, v) ? MaskMode::learned : MaskMode::fixed;
    };
    t["RM"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      if (!parse_bool(k, v)) c.recovery.res_blocks = 0;
    };
    num("H", [](RunConfig& c) -> std::size_t& { return c.height; });
    num("W", [](RunConfig& c) -> std::size_t& { return c.width; });
    num("eval_every", [](RunConfig& c) -> int& { return c.eval_every; });
    return t;
  }();
  return table;
}

}  // namespace

RunConfig parse_config(std::istream& is) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
    }
    pairs.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }

  RunConfig cfg;
  std::vector<std::string> unknown;
  for (const auto& [key, value] : pairs) {
    if (key == "preset") {
      if (value == "toy") cfg.recovery = RecoveryConfig::toy();
      else if (value == "micro") cfg.recovery = RecoveryConfig::micro();
      else if (value == "paper") cfg.recovery = RecoveryConfig::paper();
      else throw ConfigError("config: preset must be toy, micro or paper, got '" + value + "'");
    } else if (!setters().count(key)) {
      unknown.push_back(key);
    }
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError("config: unknown keys: " + list, unknown);
  }
  for (const auto& [key, value] : pairs) {
    if (key != "preset") setters().at(key)(cfg, key, value);
  }
  try {
    cfg.train.validate();
    cfg.recovery.validate();
  } catch (const UsageError& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (cfg.height == 0 || cfg.width == 0) throw ConfigError("config: H and W must be positive");
  return cfg;
}

RunConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path);
  return parse_config(is);
}

std::string format_config(const RunConfig& cfg) {
  const auto& t = cfg.train;
  const auto& r = cfg.recovery;
  char buf[1024];
  std::snprintf(buf, sizeof buf,
                "epochs=%d\nlr0=%.17g\ndecay=%.17g\ndecay_every=%d\nbeta_loss=%.17g\nbeta_applies_to_both=%d\n"
                "batch=%d\nseed=%llu\nnoise_sigma=%.17g\nmask_mode=%s\nfixed_mask=%s\nmu_b=%.17g\nsigma_b=%.17g\n"
                "grad_clip=%.17g\nval_fraction=%.17g\naugment=%d\nK=%d\nN=%d\nC=%d\nenc_levels=%d\nres_blocks=%d\ntheta=%.17g\n"
                "hfim=%d\ndyn_rho=%d\nH=%zu\nW=%zu\neval_every=%d\n",
                t.epochs, t.lr0, t.decay, t.decay_every, t.beta_loss, t.beta_applies_to_both ? 1 : 0, t.batch,
                static_cast<unsigned long long>(t.seed), t.noise_sigma,
                t.mask_mode == MaskMode::learned ? "learned" : "fixed",
                t.fixed_mask == FixedMask::random ? "random" : "ones", t.mu_b, t.sigma_b, t.grad_clip,
                t.val_fraction, t.augment ? 1 : 0, r.K, r.N, r.C, r.enc_levels, r.res_blocks, r.theta, r.hfim ? 1 : 0,
                r.dyn_rho ? 1 : 0, cfg.height, cfg.width, cfg.eval_every);
  return buf;
}

}  // namespace herosnet
