#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "leo/objective.hpp"
#include "leo/scorer.hpp"
#include "leo/selector.hpp"

namespace leo::pipeline {

struct TrainConfig {
  std::size_t L = 100;
  std::size_t d = 150;
  std::size_t vocab_max = 10000;
  std::vector<std::size_t> selector_hidden{100, 100, 100};
  std::vector<std::size_t> classifier_hidden{100, 100};
  double retain = 0.8;
  double embed_retain = 0.8;
  double nu = 0.5;
  double tau = 0.5;
  double lambda = 0.1;
  std::size_t k = 3;
  double lr = 1e-3;
  std::size_t batch = 128;
  std::size_t epochs = 10;
  double clip_norm = 5.0;
  double val_fraction = 0.2;
  std::size_t kmeans_iters = 10;
  std::optional<std::uint64_t> seed;
  scoring::ScoringMode scoring = scoring::ScoringMode::pooled;
  objective::ContrastiveVariant variant = objective::ContrastiveVariant::cluster;
  model::GateMode gate = model::GateMode::expected;
  bool ablate_cd = false;
  bool off_grid = false;  // accept values outside the hyperparameter grid
};

/// Sets one field from its textual form. Unknown keys and unparsable values
/// raise ConfigError.
void set_value(TrainConfig& cfg, std::string_view key, std::string_view value);

/// `key = value` lines; blank lines and lines starting with '#' are ignored.
void apply_config_text(TrainConfig& cfg, std::string_view text);
TrainConfig load_config_file(const std::string& path);

/// Ranges and grid membership (unless off_grid); the seed must be set.
void validate(const TrainConfig& cfg);

/// Every field as (key, value) text, in a fixed order; set_value accepts each pair back.
std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& cfg);
std::string config_to_text(const TrainConfig& cfg);

}  // namespace leo::pipeline
