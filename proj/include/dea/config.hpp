#pragma once

// Run configuration: methods, learning regimes, hyperparameter defaults and
// the flat `key = value` config file.
//
// Config file format: one `key = value` per line, `#` starts a comment,
// string values may be double-quoted, booleans are true/false. Unknown keys
// are rejected with the offending line number.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dea {

enum class Method { kSac, kRedq, kDea };

Method parse_method(std::string_view name);
std::string method_name(Method m);

struct Regime {
  std::string name;
  int ensemble_size = 2;
  long total_steps = 0;
  int utd = 1;
  long default_warmup = 1000;
};

// interactive, sample-efficient, desk-interactive, desk-sample-efficient.
Regime lookup_regime(std::string_view name);
std::vector<std::string> regime_names();

struct RunConfig {
  std::string env = "pendulum";
  Method method = Method::kDea;
  Regime regime = lookup_regime("desk-interactive");
  std::uint64_t seed = 1;

  double gamma = 0.99;
  double tau = 5e-3;
  int batch_size = 256;
  long warmup_steps = 1000;
  double lr = 3e-4;
  double lr_kappa_bar = 3e-4;
  double lr_kappa = 3e-4;
  double alpha_init = 0.2;
  double h_target_scale = 0.5;  // target entropy = -h_target_scale * act_dim
  double kappa_bar_init = -0.8;
  double kappa_init = 0.0;
  bool freeze_kappa_bar = false;
  bool freeze_kappa = false;
  long eval_interval = 1000;
  int eval_episodes = 5;
  std::string out_dir;

  int hidden_layers = 2;
  int hidden_size = 64;
  long replay_capacity = 1000000;

  std::vector<int> hidden_sizes() const { return std::vector<int>(hidden_layers, hidden_size); }
  double target_entropy(int act_dim) const { return -h_target_scale * act_dim; }

  // Throws ConfigError describing the first violated constraint.
  void validate() const;
};

// Raw parsed document: key -> (value, line number).
struct ConfigEntry {
  std::string value;
  int line = 0;
};
using ConfigDocument = std::map<std::string, ConfigEntry>;

// Throws ConfigError with "path:line: message" on malformed lines, duplicate
// keys and unknown keys.
ConfigDocument parse_config_text(std::string_view text, const std::string& origin = "<config>");
ConfigDocument read_config_file(const std::filesystem::path& path);

std::vector<std::string> config_keys();

// Settings that may hold lists (sweeps).
struct SweepSpec {
  std::vector<std::string> envs;
  std::vector<Method> methods;
  std::vector<std::uint64_t> seeds;
};

// Applies a parsed document over the defaults. Regime-dependent defaults
// (warmup) are resolved after all keys are read.
struct ResolvedConfig {
  RunConfig run;
  SweepSpec sweep;
};
ResolvedConfig resolve_config(const ConfigDocument& doc, const std::string& origin = "<config>");

// "1..5", "1,2,3" or "7".
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

// Resolved configuration as JSON text (run.json).
std::string to_json(const RunConfig& cfg);

// Default output root: $DEA_OUT_DIR or "runs".
std::filesystem::path default_out_root();

}  // namespace dea
