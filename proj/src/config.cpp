#include "leo/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "leo/errors.hpp"
#include "leo/metrics.hpp"

namespace leo::pipeline {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(std::string_view key, std::string_view value) {
  throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key));
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad(key, v);
  return out;
}

std::size_t parse_size(std::string_view key, std::string_view v) { return static_cast<std::size_t>(parse_u64(key, v)); }

double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) bad(key, v);
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad(key, v);
}

std::vector<std::size_t> parse_sizes(std::string_view key, std::string_view v) {
  std::vector<std::size_t> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(parse_size(key, trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) bad(key, v);
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

bool on_grid(double v, std::initializer_list<double> grid) {
  return std::any_of(grid.begin(), grid.end(), [v](double g) { return std::abs(v - g) <= 1e-12 * std::max(1.0, g); });
}

}  // namespace

void set_value(TrainConfig& c, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "L") c.L = parse_size(key, value);
  else if (key == "d") c.d = parse_size(key, value);
  else if (key == "vocab_max") c.vocab_max = parse_size(key, value);
  else if (key == "selector_hidden") c.selector_hidden = parse_sizes(key, value);
  else if (key == "classifier_hidden") c.classifier_hidden = parse_sizes(key, value);
  else if (key == "retain") c.retain = parse_double(key, value);
  else if (key == "embed_retain") c.embed_retain = parse_double(key, value);
  else if (key == "nu") c.nu = parse_double(key, value);
  else if (key == "tau") c.tau = parse_double(key, value);
  else if (key == "lambda") c.lambda = parse_double(key, value);
  else if (key == "k") c.k = parse_size(key, value);
  else if (key == "lr") c.lr = parse_double(key, value);
  else if (key == "batch") c.batch = parse_size(key, value);
  else if (key == "epochs") c.epochs = parse_size(key, value);
  else if (key == "clip_norm") c.clip_norm = parse_double(key, value);
  else if (key == "val_fraction") c.val_fraction = parse_double(key, value);
  else if (key == "kmeans_iters") c.kmeans_iters = parse_size(key, value);
  else if (key == "seed") c.seed = parse_u64(key, value);
  else if (key == "ablate_cd") c.ablate_cd = parse_bool(key, value);
  else if (key == "off_grid") c.off_grid = parse_bool(key, value);
  else if (key == "scoring") {
    if (value == "pooled") c.scoring = scoring::ScoringMode::pooled;
    else if (value == "concat-diagonal") c.scoring = scoring::ScoringMode::concat_diagonal;
    else bad(key, value);
  } else if (key == "variant") {
    if (value == "cluster") c.variant = objective::ContrastiveVariant::cluster;
    else if (value == "supervised-class") c.variant = objective::ContrastiveVariant::supervised_class;
    else bad(key, value);
  } else if (key == "gate") {
    if (value == "expected") c.gate = model::GateMode::expected;
    else if (value == "hard") c.gate = model::GateMode::hard;
    else bad(key, value);
  } else {
    throw ConfigError("unknown configuration key '" + std::string(key) + "'");
  }
}

void apply_config_text(TrainConfig& cfg, std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      set_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

TrainConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  TrainConfig cfg;
  apply_config_text(cfg, ss.str());
  return cfg;
}

void validate(const TrainConfig& c) {
  if (!c.seed) throw ConfigError("a seed is required");
  if (c.L == 0 || c.d == 0) throw ConfigError("L and d must be positive");
  if (c.vocab_max < 2) throw ConfigError("vocab_max must be at least 2");
  if (c.batch == 0 || c.epochs == 0) throw ConfigError("batch and epochs must be positive");
  if (!(c.retain > 0.0 && c.retain <= 1.0) || !(c.embed_retain > 0.0 && c.embed_retain <= 1.0)) {
    throw ConfigError("retain probabilities must be in (0, 1]");
  }
  if (!(c.nu > 0.0) || !(c.tau > 0.0)) throw ConfigError("temperatures must be positive");
  if (c.lambda < 0.0) throw ConfigError("lambda must be non-negative");
  if (c.k == 0) throw ConfigError("k must be at least 1");
  if (!(c.lr > 0.0) || !(c.clip_norm > 0.0)) throw ConfigError("lr and clip_norm must be positive");
  if (!(c.val_fraction > 0.0 && c.val_fraction < 1.0)) throw ConfigError("val_fraction must be in (0, 1)");
  if (c.selector_hidden.size() != 3 && !c.off_grid) throw ConfigError("the selector has three hidden layers");
  if (c.classifier_hidden.size() != 2 && !c.off_grid) throw ConfigError("the classifier has two hidden layers");
  if (c.off_grid) return;
  auto hidden_ok = [](const std::vector<std::size_t>& h) {
    return std::all_of(h.begin(), h.end(), [](std::size_t s) { return s == 100 || s == 300; });
  };
  if (!hidden_ok(c.selector_hidden) || !hidden_ok(c.classifier_hidden)) {
    throw ConfigError("hidden sizes must be 100 or 300 (set off_grid = true to override)");
  }
  if (!on_grid(c.nu, {0.5, 1.0})) throw ConfigError("nu must be 0.5 or 1.0 (set off_grid = true to override)");
  if (!on_grid(c.tau, {0.5, 1.0})) throw ConfigError("tau must be 0.5 or 1.0 (set off_grid = true to override)");
  if (!on_grid(c.lambda, {0.01, 0.1, 1.0}) && !c.ablate_cd) {
    throw ConfigError("lambda must be 0.01, 0.1 or 1 (set off_grid = true to override)");
  }
  if (c.k > 9 || c.k % 2 == 0) throw ConfigError("k must be one of 1, 3, 5, 7, 9 (set off_grid = true to override)");
}

std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& c) {
  using metrics::format_double;
  return {
      {"L", std::to_string(c.L)},
      {"d", std::to_string(c.d)},
      {"vocab_max", std::to_string(c.vocab_max)},
      {"selector_hidden", join(c.selector_hidden)},
      {"classifier_hidden", join(c.classifier_hidden)},
      {"retain", format_double(c.retain)},
      {"embed_retain", format_double(c.embed_retain)},
      {"nu", format_double(c.nu)},
      {"tau", format_double(c.tau)},
      {"lambda", format_double(c.lambda)},
      {"k", std::to_string(c.k)},
      {"lr", format_double(c.lr)},
      {"batch", std::to_string(c.batch)},
      {"epochs", std::to_string(c.epochs)},
      {"clip_norm", format_double(c.clip_norm)},
      {"val_fraction", format_double(c.val_fraction)},
      {"kmeans_iters", std::to_string(c.kmeans_iters)},
      {"seed", c.seed ? std::to_string(*c.seed) : std::string("unset")},
      {"scoring", c.scoring == scoring::ScoringMode::pooled ? "pooled" : "concat-diagonal"},
      {"variant", c.variant == objective::ContrastiveVariant::cluster ? "cluster" : "supervised-class"},
      {"gate", c.gate == model::GateMode::expected ? "expected" : "hard"},
      {"ablate_cd", c.ablate_cd ? "true" : "false"},
      {"off_grid", c.off_grid ? "true" : "false"},
  };
}

std::string config_to_text(const TrainConfig& c) {
  std::string out;
  for (const auto& [k, v] : config_entries(c)) {
    if (k == "seed" && !c.seed) continue;
    out += k + " = " + v + "\n";
  }
  return out;
}

}  // namespace leo::pipeline
