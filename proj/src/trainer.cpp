#include "leo/trainer.hpp"

#include <cmath>

#include "leo/errors.hpp"
#include "leo/log.hpp"
#include "leo/objective.hpp"
#include "leo/optim.hpp"
#include "leo/scorer.hpp"

namespace leo::pipeline {

using num::ParamGroup;
using num::Tensor;

model::ModelConfig model_config(const TrainConfig& cfg, std::size_t vocab_size) {
  return model::make_model_config(vocab_size, cfg.L, cfg.d, cfg.selector_hidden, cfg.classifier_hidden, cfg.retain,
                                  cfg.embed_retain);
}

std::vector<model::TokenizedFunction> tokenize(std::span<const code::NormalizedFunction> fns,
                                               std::span<const DatasetRecord> records, const code::Vocabulary& vocab) {
  std::vector<model::TokenizedFunction> out(fns.size());
  for (std::size_t i = 0; i < fns.size(); ++i) {
    for (const auto& st : fns[i].statements) out[i].statements.push_back(code::encode_tokens(st, vocab));
    out[i].label = records[i].fn.label;
  }
  return out;
}

namespace {

constexpr std::size_t kInferChunk = 256;

std::vector<model::Inference> infer_all(ModelArtifact& a, std::span<const model::TokenizedFunction> fns) {
  const auto mcfg = model_config(a.config, a.vocab.size());
  std::vector<model::Inference> out;
  out.reserve(fns.size());
  for (std::size_t s = 0; s < fns.size(); s += kInferChunk) {
    std::vector<const model::TokenizedFunction*> chunk;
    for (std::size_t i = s; i < std::min(fns.size(), s + kInferChunk); ++i) chunk.push_back(&fns[i]);
    auto part = model::infer(a.params, mcfg, chunk, a.config.gate);
    for (auto& p : part) out.push_back(std::move(p));
  }
  return out;
}

Tensor representations(ModelArtifact& a, std::span<const model::TokenizedFunction> fns) {
  const auto inf = infer_all(a, fns);
  Tensor reps;
  for (std::size_t i = 0; i < inf.size(); ++i) {
    auto r = scoring::scoring_representation(inf[i].X, inf[i].z, inf[i].true_length, a.config.scoring);
    if (i == 0) reps = Tensor({inf.size(), r.size()});
    std::copy(r.begin(), r.end(), reps.row(i).begin());
  }
  return reps;
}

std::vector<model::TokenizedFunction> prepare(const ModelArtifact& a, std::span<const DatasetRecord> records) {
  const auto norm = normalize_all(records);
  return tokenize(norm, records, a.vocab);
}

double threshold_from(ModelArtifact& a, std::span<const model::TokenizedFunction> val) {
  const Tensor reps = representations(a, val);
  std::vector<double> scores(reps.rows());
  for (std::size_t i = 0; i < reps.rows(); ++i) scores[i] = scoring::mahalanobis_score(reps.row(i), a.stats);
  return scoring::calibrate_threshold(scores, 0.95);
}

}  // namespace

TrainResult train(const TrainConfig& cfg_in, std::span<const DatasetRecord> d_in, const StepHook& hook) {
  TrainConfig cfg = cfg_in;
  validate(cfg);
  if (cfg.ablate_cd) cfg.lambda = 0.0;
  const std::uint64_t seed = *cfg.seed;

  const Split split = split_dataset(d_in, seed, cfg.val_fraction);
  const auto train_norm = normalize_all(split.train);
  const auto val_norm = normalize_all(split.val);

  TrainResult result;
  ModelArtifact& art = result.artifact;
  art.config = cfg;
  art.vocab = code::Vocabulary::build(train_norm, cfg.vocab_max);
  const auto train_fns = tokenize(train_norm, split.train, art.vocab);
  const auto val_fns = tokenize(val_norm, split.val, art.vocab);

  const auto mcfg = model_config(cfg, art.vocab.size());
  art.params = model::init_model(mcfg, derive_seed(seed, "init"));

  std::size_t n_vuln = 0;
  for (const auto& f : train_fns) n_vuln += f.label == 1;
  if (n_vuln == 0 && cfg.lambda > 0.0) log::warn("no vulnerable samples in the training split; contrastive term stays 0");

  objective::ContrastiveConfig ccfg;
  ccfg.tau = cfg.tau;
  ccfg.lambda = cfg.lambda;
  ccfg.k = cfg.k;
  ccfg.variant = cfg.variant;
  ccfg.kmeans_iters = cfg.kmeans_iters;

  num::AdamState adam_data(cfg.lr);
  num::AdamState adam_joint(cfg.lr);
  const ParamGroup data_groups[] = {ParamGroup::encoder, ParamGroup::classifier};
  const ParamGroup all_groups[] = {ParamGroup::encoder, ParamGroup::selector, ParamGroup::classifier};

  std::vector<std::size_t> order(train_fns.size());
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(seed, "shuffle", {e}));
    shuffle_rng.shuffle(order);
    EpochStats stats;
    stats.epoch = e + 1;
    std::size_t n_batches = 0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += cfg.batch, ++b) {
      std::vector<const model::TokenizedFunction*> batch;
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch); ++i) batch.push_back(&train_fns[order[i]]);
      try {
        if (!cfg.ablate_cd) {
          num::Graph g;
          Rng rng(derive_seed(seed, "data_step", {e, b}));
          auto terms = objective::data_distribution_loss(g, art.params, mcfg, batch, cfg.nu, rng);
          g.backward(terms.loss);
          num::clip_gradients(art.params, cfg.clip_norm, data_groups);
          num::adam_update(art.params, adam_data, data_groups);
          stats.data_ce += g.value(terms.ce).item();
          if (hook) hook(e, b, 1, art.params);
        }
        num::Graph g;
        Rng rng(derive_seed(seed, "joint_step", {e, b}));
        auto terms = objective::joint_loss(g, art.params, mcfg, batch, ccfg, cfg.nu, rng,
                                           derive_seed(seed, "kmeans", {e, b}));
        g.backward(terms.loss);
        num::clip_gradients(art.params, cfg.clip_norm, all_groups);
        num::adam_update(art.params, adam_joint, all_groups);
        stats.joint_ce += g.value(terms.ce).item();
        if (terms.ccl.valid()) stats.ccl += g.value(terms.ccl).item();
        if (hook) hook(e, b, 2, art.params);
      } catch (const NumericError& err) {
        throw TrainingError("non-finite value in epoch " + std::to_string(e + 1) + ", batch " + std::to_string(b) +
                            ": " + err.what());
      }
      ++n_batches;
    }
    const double nb = static_cast<double>(std::max<std::size_t>(n_batches, 1));
    stats.data_ce /= nb;
    stats.joint_ce /= nb;
    stats.ccl /= nb;
    art.log.push_back("epoch=" + std::to_string(stats.epoch) + " data_ce=" + metrics::format_double(stats.data_ce) +
                      " joint_ce=" + metrics::format_double(stats.joint_ce) +
                      " ccl=" + metrics::format_double(stats.ccl));
    log::info(art.log.back());
    result.epochs.push_back(stats);
  }

  // Score with exactly the values that will be stored.
  round_to_float(art.params);
  const Tensor train_reps = representations(art, train_fns);
  art.stats = scoring::fit_cluster_statistics(train_reps, cfg.k, derive_seed(seed, "cluster_stats"), cfg.scoring);
  art.threshold = threshold_from(art, val_fns);
  return result;
}

std::vector<ScoredFunction> score_records(ModelArtifact& a, std::span<const DatasetRecord> records) {
  const auto fns = prepare(a, records);
  const auto inf = infer_all(a, fns);
  std::vector<ScoredFunction> out(inf.size());
  for (std::size_t i = 0; i < inf.size(); ++i) {
    out[i].id = records[i].fn.id;
    out[i].representation = scoring::scoring_representation(inf[i].X, inf[i].z, inf[i].true_length, a.config.scoring);
    out[i].score = scoring::mahalanobis_score(out[i].representation, a.stats);
    out[i].msp = scoring::msp_score(inf[i].probs);
  }
  return out;
}

double recalibrate(ModelArtifact& a, std::span<const DatasetRecord> val) {
  const auto fns = prepare(a, val);
  return threshold_from(a, fns);
}

metrics::EvalReport evaluate(ModelArtifact& a, std::span<const DatasetRecord> id_test,
                             std::span<const DatasetRecord> ood_test, ScoreKind kind) {
  if (id_test.empty() || ood_test.empty()) throw UsageError("evaluation needs non-empty ID and OOD test sets");
  const auto id_scored = score_records(a, id_test);
  const auto ood_scored = score_records(a, ood_test);
  metrics::ScoreSet set;
  std::vector<metrics::ScoreRecord> dump;
  double threshold = a.threshold;
  auto pick = [kind](const ScoredFunction& s) { return kind == ScoreKind::msp ? s.msp : s.score; };
  if (kind == ScoreKind::msp) {
    std::vector<double> v;
    for (const auto& s : id_scored) v.push_back(s.msp);
    threshold = metrics::nearest_rank_quantile(v, 0.95);
  }
  for (const auto& s : id_scored) {
    set.id_scores.push_back(pick(s));
    dump.push_back({s.id, "id", pick(s), scoring::decide(pick(s), threshold) == scoring::Decision::ood});
  }
  for (const auto& s : ood_scored) {
    set.ood_scores.push_back(pick(s));
    dump.push_back({s.id, "ood", pick(s), scoring::decide(pick(s), threshold) == scoring::Decision::ood});
  }
  auto fp = config_entries(a.config);
  fp.emplace_back("score", kind == ScoreKind::msp ? "msp" : "mahalanobis");
  auto report = metrics::build_report(set, std::move(fp));
  report.scores = std::move(dump);
  return report;
}

}  // namespace leo::pipeline
