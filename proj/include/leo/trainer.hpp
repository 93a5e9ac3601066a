#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "leo/config.hpp"
#include "leo/dataset.hpp"
#include "leo/metrics.hpp"
#include "leo/model.hpp"
#include "leo/model_io.hpp"

namespace leo::pipeline {

model::ModelConfig model_config(const TrainConfig& cfg, std::size_t vocab_size);

std::vector<model::TokenizedFunction> tokenize(std::span<const code::NormalizedFunction> fns,
                                               std::span<const DatasetRecord> records, const code::Vocabulary& vocab);

struct EpochStats {
  std::size_t epoch = 0;
  double data_ce = 0.0;   // mean over batches of the data-distribution loss
  double joint_ce = 0.0;  // mean over batches of the cross-entropy in the joint step
  double ccl = 0.0;       // mean over batches of the contrastive term
};

/// Called after each optimizer step; `step` is 1 for the data-distribution
/// update and 2 for the joint one. Used by tests.
using StepHook = std::function<void(std::size_t epoch, std::size_t batch, int step, const num::ParameterStore&)>;

struct TrainResult {
  ModelArtifact artifact;
  std::vector<EpochStats> epochs;
};

/// Builds the vocabulary on the training split, runs both update steps per
/// batch for every epoch, then fits cluster statistics on the training split
/// and calibrates the threshold on the validation split.
TrainResult train(const TrainConfig& cfg, std::span<const DatasetRecord> d_in, const StepHook& hook = {});

struct ScoredFunction {
  std::string id;
  double score = 0.0;  // Mahalanobis
  double msp = 0.0;
  std::vector<double> representation;
};

/// Eval-mode scoring: normalize, encode, deterministic gate, scoring representation.
std::vector<ScoredFunction> score_records(ModelArtifact& artifact, std::span<const DatasetRecord> records);

/// Threshold on the validation split computed exactly as in training.
double recalibrate(ModelArtifact& artifact, std::span<const DatasetRecord> val);

enum class ScoreKind { mahalanobis, msp };

metrics::EvalReport evaluate(ModelArtifact& artifact, std::span<const DatasetRecord> id_test,
                             std::span<const DatasetRecord> ood_test, ScoreKind kind = ScoreKind::mahalanobis);

}  // namespace leo::pipeline
