#include "dea/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dea/env.hpp"
#include "dea/errors.hpp"

namespace dea {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::string item = trim(s.substr(start, comma == std::string_view::npos ? s.size() - start : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "env",          "method",         "regime",        "seed",          "seeds",
      "gamma",        "tau",            "batch_size",    "warmup_steps",  "lr",
      "lr_kappa_bar", "lr_kappa",       "alpha_init",    "h_target_scale", "kappa_bar_init",
      "kappa_init",   "freeze_kappa_bar", "freeze_kappa", "eval_interval", "eval_episodes",
      "out_dir",      "ensemble_size",  "total_steps",   "utd",           "hidden_layers",
      "hidden_size",  "replay_capacity"};
  return keys;
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
  std::ostringstream out;
  out << origin;
  if (line > 0) out << ":" << line;
  out << ": " << msg;
  throw ConfigError(out.str());
}

template <typename T>
T parse_number(const std::string& key, const ConfigEntry& e, const std::string& origin) {
  T value{};
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) fail(origin, e.line, "invalid value '" + e.value + "' for " + key);
  return value;
}

bool parse_bool(const std::string& key, const ConfigEntry& e, const std::string& origin) {
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  fail(origin, e.line, "invalid boolean '" + e.value + "' for " + key + " (expected true or false)");
}

}  // namespace

Method parse_method(std::string_view name) {
  if (name == "sac") return Method::kSac;
  if (name == "redq") return Method::kRedq;
  if (name == "dea") return Method::kDea;
  throw ConfigError("unknown method '" + std::string(name) + "' (expected sac, redq or dea)");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kSac: return "sac";
    case Method::kRedq: return "redq";
    case Method::kDea: return "dea";
  }
  return "?";
}

Regime lookup_regime(std::string_view name) {
  if (name == "interactive") return {"interactive", 2, 1000000, 1, 10000};
  if (name == "sample-efficient") return {"sample-efficient", 10, 300000, 20, 10000};
  if (name == "desk-interactive") return {"desk-interactive", 2, 30000, 1, 1000};
  if (name == "desk-sample-efficient") return {"desk-sample-efficient", 10, 10000, 20, 1000};
  throw ConfigError("unknown regime '" + std::string(name) + "'");
}

std::vector<std::string> regime_names() {
  return {"interactive", "sample-efficient", "desk-interactive", "desk-sample-efficient"};
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  env::make_spec(env);
  require(regime.ensemble_size >= 1, "ensemble_size must be positive");
  require(method != Method::kRedq || regime.ensemble_size >= 2, "redq requires ensemble_size >= 2");
  require(method != Method::kDea || regime.ensemble_size >= 2, "dea requires ensemble_size >= 2");
  require(regime.total_steps >= 1, "total_steps must be positive");
  require(regime.utd >= 1, "utd must be >= 1");
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
  require(tau > 0.0 && tau <= 1.0, "tau must lie in (0, 1]");
  require(batch_size >= 1, "batch_size must be positive");
  require(warmup_steps >= 0, "warmup_steps must be non-negative");
  require(lr > 0.0 && lr_kappa_bar > 0.0 && lr_kappa > 0.0, "learning rates must be positive");
  require(alpha_init > 0.0, "alpha_init must be positive");
  require(h_target_scale >= 0.0, "h_target_scale must be non-negative");
  require(kappa_bar_init > -1.0 && kappa_bar_init < 1.0, "kappa_bar_init must lie in (-1, 1)");
  require(kappa_init > -1.0 && kappa_init < 1.0, "kappa_init must lie in (-1, 1)");
  require(eval_interval >= 1, "eval_interval must be positive");
  require(eval_episodes >= 1, "eval_episodes must be positive");
  require(hidden_layers >= 0 && hidden_size >= 1, "invalid hidden layer configuration");
  require(replay_capacity >= 1, "replay_capacity must be positive");
}

std::vector<std::string> config_keys() { return known_keys(); }

ConfigDocument parse_config_text(std::string_view text, const std::string& origin) {
  ConfigDocument doc;
  const auto& keys = known_keys();
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    // Strip comments outside of quotes.
    bool quoted = false;
    std::size_t cut = raw.size();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] == '"') quoted = !quoted;
      if (raw[i] == '#' && !quoted) {
        cut = i;
        break;
      }
    }
    const std::string line = trim(std::string_view(raw).substr(0, cut));
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(origin, line_no, "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) fail(origin, line_no, "missing key");
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) fail(origin, line_no, "unknown key '" + key + "'");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    } else if (!value.empty() && (value.front() == '"' || value.back() == '"')) {
      fail(origin, line_no, "unterminated string");
    }
    if (value.empty()) fail(origin, line_no, "missing value for '" + key + "'");
    if (doc.count(key)) fail(origin, line_no, "duplicate key '" + key + "'");
    doc[key] = ConfigEntry{value, line_no};
  }
  return doc;
}

ConfigDocument read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  auto parse_one = [&](const std::string& s) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("invalid seed '" + s + "'");
    return v;
  };
  for (const std::string& item : split_list(text)) {
    const std::size_t dots = item.find("..");
    if (dots != std::string::npos) {
      const std::uint64_t lo = parse_one(trim(std::string_view(item).substr(0, dots)));
      const std::uint64_t hi = parse_one(trim(std::string_view(item).substr(dots + 2)));
      if (hi < lo) throw ConfigError("invalid seed range '" + item + "'");
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      seeds.push_back(parse_one(item));
    }
  }
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

ResolvedConfig resolve_config(const ConfigDocument& doc, const std::string& origin) {
  ResolvedConfig res;
  RunConfig& c = res.run;
  auto has = [&](const char* k) { return doc.count(k) > 0; };
  auto get = [&](const char* k) -> const ConfigEntry& { return doc.at(k); };

  auto wrap = [&](const char* k, auto&& fn) {
    if (!has(k)) return;
    try {
      fn(get(k));
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      if (msg.rfind(origin, 0) == 0) throw;
      fail(origin, get(k).line, msg);
    }
  };

  wrap("env", [&](const ConfigEntry& e) {
    res.sweep.envs = split_list(e.value);
    for (const auto& name : res.sweep.envs) env::make_spec(name);
  });
  if (res.sweep.envs.empty()) res.sweep.envs = {c.env};
  c.env = res.sweep.envs.front();

  wrap("method", [&](const ConfigEntry& e) {
    for (const auto& name : split_list(e.value)) res.sweep.methods.push_back(parse_method(name));
  });
  if (res.sweep.methods.empty()) res.sweep.methods = {c.method};
  c.method = res.sweep.methods.front();

  wrap("regime", [&](const ConfigEntry& e) { c.regime = lookup_regime(e.value); });
  c.warmup_steps = c.regime.default_warmup;
  wrap("ensemble_size", [&](const ConfigEntry& e) { c.regime.ensemble_size = parse_number<int>("ensemble_size", e, origin); });
  wrap("total_steps", [&](const ConfigEntry& e) { c.regime.total_steps = parse_number<long>("total_steps", e, origin); });
  wrap("utd", [&](const ConfigEntry& e) { c.regime.utd = parse_number<int>("utd", e, origin); });

  wrap("seed", [&](const ConfigEntry& e) { c.seed = parse_number<std::uint64_t>("seed", e, origin); });
  wrap("seeds", [&](const ConfigEntry& e) { res.sweep.seeds = parse_seed_list(e.value); });
  if (res.sweep.seeds.empty()) res.sweep.seeds = {c.seed};

  wrap("gamma", [&](const ConfigEntry& e) { c.gamma = parse_number<double>("gamma", e, origin); });
  wrap("tau", [&](const ConfigEntry& e) { c.tau = parse_number<double>("tau", e, origin); });
  wrap("batch_size", [&](const ConfigEntry& e) { c.batch_size = parse_number<int>("batch_size", e, origin); });
  wrap("warmup_steps", [&](const ConfigEntry& e) { c.warmup_steps = parse_number<long>("warmup_steps", e, origin); });
  wrap("lr", [&](const ConfigEntry& e) { c.lr = parse_number<double>("lr", e, origin); });
  wrap("lr_kappa_bar", [&](const ConfigEntry& e) { c.lr_kappa_bar = parse_number<double>("lr_kappa_bar", e, origin); });
  wrap("lr_kappa", [&](const ConfigEntry& e) { c.lr_kappa = parse_number<double>("lr_kappa", e, origin); });
  wrap("alpha_init", [&](const ConfigEntry& e) { c.alpha_init = parse_number<double>("alpha_init", e, origin); });
  wrap("h_target_scale", [&](const ConfigEntry& e) { c.h_target_scale = parse_number<double>("h_target_scale", e, origin); });
  wrap("kappa_bar_init", [&](const ConfigEntry& e) { c.kappa_bar_init = parse_number<double>("kappa_bar_init", e, origin); });
  wrap("kappa_init", [&](const ConfigEntry& e) { c.kappa_init = parse_number<double>("kappa_init", e, origin); });
  wrap("freeze_kappa_bar", [&](const ConfigEntry& e) { c.freeze_kappa_bar = parse_bool("freeze_kappa_bar", e, origin); });
  wrap("freeze_kappa", [&](const ConfigEntry& e) { c.freeze_kappa = parse_bool("freeze_kappa", e, origin); });
  wrap("eval_interval", [&](const ConfigEntry& e) { c.eval_interval = parse_number<long>("eval_interval", e, origin); });
  wrap("eval_episodes", [&](const ConfigEntry& e) { c.eval_episodes = parse_number<int>("eval_episodes", e, origin); });
  wrap("out_dir", [&](const ConfigEntry& e) { c.out_dir = e.value; });
  wrap("hidden_layers", [&](const ConfigEntry& e) { c.hidden_layers = parse_number<int>("hidden_layers", e, origin); });
  wrap("hidden_size", [&](const ConfigEntry& e) { c.hidden_size = parse_number<int>("hidden_size", e, origin); });
  wrap("replay_capacity", [&](const ConfigEntry& e) { c.replay_capacity = parse_number<long>("replay_capacity", e, origin); });

  try {
    c.validate();
  } catch (const ConfigError& e) {
    fail(origin, 0, e.what());
  }
  return res;
}

std::string to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["env"] = c.env;
  j["method"] = method_name(c.method);
  j["regime"] = {{"name", c.regime.name},
                 {"ensemble_size", c.regime.ensemble_size},
                 {"total_steps", c.regime.total_steps},
                 {"utd", c.regime.utd}};
  j["seed"] = c.seed;
  j["gamma"] = c.gamma;
  j["tau"] = c.tau;
  j["batch_size"] = c.batch_size;
  j["warmup_steps"] = c.warmup_steps;
  j["lr"] = c.lr;
  j["lr_kappa_bar"] = c.lr_kappa_bar;
  j["lr_kappa"] = c.lr_kappa;
  j["alpha_init"] = c.alpha_init;
  j["h_target_scale"] = c.h_target_scale;
  j["kappa_bar_init"] = c.kappa_bar_init;
  j["kappa_init"] = c.kappa_init;
  j["freeze_kappa_bar"] = c.freeze_kappa_bar;
  j["freeze_kappa"] = c.freeze_kappa;
  j["eval_interval"] = c.eval_interval;
  j["eval_episodes"] = c.eval_episodes;
  j["out_dir"] = c.out_dir;
  j["hidden_layers"] = c.hidden_layers;
  j["hidden_size"] = c.hidden_size;
  j["replay_capacity"] = c.replay_capacity;
  return j.dump(2) + "\n";
}

std::filesystem::path default_out_root() {
  if (const char* v = std::getenv("DEA_OUT_DIR"); v != nullptr && *v != '\0') return v;
  return "runs";
}

}  // namespace dea
